/*
Copyright 2026 The hspmv Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/

#include "hspmv/transport.hpp"

#include <algorithm>
#include <cstring>
#include <string>

#include "hspmv/error.hpp"

namespace hspmv::transport {

struct Fabric::Request {
  std::uint64_t id = 0;
  int owner = 0;
  RequestKind kind = RequestKind::Send;
  int peer = 0;
  int tag = 0;
  bool complete = false;
  std::span<std::byte> recv_buffer;
  Payload* slot = nullptr;
};

struct Fabric::Transfer {
  int src = 0;
  int dst = 0;
  int tag = 0;
  std::size_t bytes = 0;
  bool eager = false;
  std::shared_ptr<Request> send;
  std::shared_ptr<Request> recv;
  // exactly one source representation is used
  std::vector<std::byte> staged;
  std::span<const std::byte> source;
  Payload payload;

  bool started = false;
  bool claimed = false;
  bool copied = false;
  bool done = false;
  clock::time_point finish{};
};

int Endpoint::size() const noexcept { return fabric_->size(); }

RequestHandle Endpoint::post_send(int dest, int tag, std::span<const std::byte> data) {
  return fabric_->post(rank_, RequestKind::Send, dest, tag, data, {}, nullptr, nullptr);
}

RequestHandle Endpoint::post_recv(int source, int tag, std::span<std::byte> buffer) {
  return fabric_->post(rank_, RequestKind::Recv, source, tag, {}, buffer, nullptr, nullptr);
}

RequestHandle Endpoint::post_send_payload(int dest, int tag, Payload data) {
  require(data != nullptr, "payload must not be null");
  return fabric_->post(rank_, RequestKind::Send, dest, tag, {}, {}, std::move(data), nullptr);
}

RequestHandle Endpoint::post_recv_payload(int source, int tag, Payload* slot) {
  require(slot != nullptr, "payload slot must not be null");
  return fabric_->post(rank_, RequestKind::Recv, source, tag, {}, {}, nullptr, slot);
}

void Endpoint::wait_all(std::span<const RequestHandle> handles) { fabric_->wait_all(rank_, handles); }

bool Endpoint::is_complete(const RequestHandle& handle) { return fabric_->is_complete(rank_, handle); }

void Endpoint::barrier() { fabric_->barrier_.arrive_and_wait(); }

Fabric::Fabric(int n_ranks, TransportConfig config)
    : config_(config),
      barrier_(std::max(n_ranks, 1)),
      unexpected_(std::max(n_ranks, 0)),
      posted_recvs_(std::max(n_ranks, 0)),
      waiting_(std::max(n_ranks, 0), 0),
      link_free_(std::max(n_ranks, 0), clock::time_point{}) {
  require(n_ranks >= 1, "fabric needs at least one rank");
  require(!config_.synthetic_bandwidth_gbps || *config_.synthetic_bandwidth_gbps > 0.0,
          "synthetic bandwidth must be positive");
  endpoints_.reserve(n_ranks);
  for (int r = 0; r < n_ranks; ++r) endpoints_.emplace_back(new Endpoint(this, r));
  if (config_.async_progress) agent_ = std::thread([this] { progress_agent(); });
}

Fabric::~Fabric() {
  {
    std::lock_guard lock(mutex_);
    stop_ = true;
  }
  cv_.notify_all();
  if (agent_.joinable()) agent_.join();
}

Endpoint& Fabric::endpoint(int rank) {
  require(rank >= 0 && rank < size(), "rank out of range");
  return *endpoints_[rank];
}

RequestHandle Fabric::post(int owner, RequestKind kind, int peer, int tag, std::span<const std::byte> send_data,
                           std::span<std::byte> recv_buffer, Payload payload, Payload* slot) {
  require(peer >= 0 && peer < size(), "peer rank " + std::to_string(peer) + " out of range");
  std::unique_lock lock(mutex_);
  for (const auto& [id, req] : requests_) {
    if (req->owner != owner || req->complete) continue;
    if (req->kind == kind && req->peer == peer && req->tag == tag) {
      throw ContractViolation("a request with the same peer and tag is already pending");
    }
    if (kind == RequestKind::Recv && req->kind == RequestKind::Recv && !recv_buffer.empty() &&
        !req->recv_buffer.empty()) {
      const auto* a0 = recv_buffer.data();
      const auto* a1 = a0 + recv_buffer.size();
      const auto* b0 = req->recv_buffer.data();
      const auto* b1 = b0 + req->recv_buffer.size();
      if (a0 < b1 && b0 < a1) throw ContractViolation("receive buffer aliases a pending receive");
    }
  }

  auto req = std::make_shared<Request>();
  req->id = next_id_++;
  req->owner = owner;
  req->kind = kind;
  req->peer = peer;
  req->tag = tag;
  req->recv_buffer = recv_buffer;
  req->slot = slot;
  RequestHandle handle{req->id, owner, kind, this};
  const auto now = clock::now();

  auto capacity_ok = [](const Request& r, std::size_t bytes) { return r.slot || bytes <= r.recv_buffer.size(); };

  if (kind == RequestKind::Send) {
    auto t = std::make_shared<Transfer>();
    t->src = owner;
    t->dst = peer;
    t->tag = tag;
    t->bytes = payload ? payload->size() : send_data.size();
    t->eager = t->bytes < config_.eager_threshold;
    t->send = req;
    auto& queue = posted_recvs_[peer];
    auto it = std::find_if(queue.begin(), queue.end(),
                           [&](const auto& r) { return r->peer == owner && r->tag == tag; });
    if (it != queue.end() && !capacity_ok(**it, t->bytes)) {
      throw ContractViolation("message of " + std::to_string(t->bytes) + " bytes exceeds the receive buffer");
    }
    if (payload) {
      t->payload = std::move(payload);
    } else if (t->eager) {
      t->staged.assign(send_data.begin(), send_data.end());
    } else {
      t->source = send_data;
    }
    if (t->eager) req->complete = true;
    else requests_.emplace(req->id, req);
    if (it != queue.end()) {
      t->recv = *it;
      queue.erase(it);
      match(t, now);
    } else {
      unexpected_[peer].push_back(t);
    }
  } else {
    requests_.emplace(req->id, req);
    auto& queue = unexpected_[owner];
    auto it = std::find_if(queue.begin(), queue.end(), [&](const auto& t) { return t->src == peer && t->tag == tag; });
    if (it != queue.end()) {
      if (!capacity_ok(*req, (*it)->bytes)) {
        requests_.erase(req->id);
        throw ContractViolation("message of " + std::to_string((*it)->bytes) + " bytes exceeds the receive buffer");
      }
      auto t = *it;
      queue.erase(it);
      t->recv = req;
      match(t, now);
    } else {
      posted_recvs_[owner].push_back(req);
    }
  }
  lock.unlock();
  cv_.notify_all();
  return handle;
}

void Fabric::match(const std::shared_ptr<Transfer>& t, clock::time_point now) {
  active_.push_back(t);
  if (t->bytes == 0) {
    t->started = t->claimed = t->copied = true;
    t->finish = now;
    try_finish(*t, now);
    return;
  }
  try_start(*t, now);
}

void Fabric::try_start(Transfer& t, clock::time_point now) {
  if (t.started || !t.recv) return;
  bool ready = config_.async_progress;
  if (!ready) ready = t.eager ? waiting_[t.dst] > 0 : (waiting_[t.src] > 0 && waiting_[t.dst] > 0);
  if (!ready) return;
  const auto start = std::max(now, link_free_[t.src]);
  auto duration = clock::duration::zero();
  if (config_.synthetic_bandwidth_gbps) {
    duration = std::chrono::duration_cast<clock::duration>(
        std::chrono::duration<double>(static_cast<double>(t.bytes) / (*config_.synthetic_bandwidth_gbps * 1e9)));
  }
  t.finish = start + duration;
  link_free_[t.src] = t.finish;
  t.started = true;
  if (t.payload && t.recv->slot) t.claimed = t.copied = true;
}

void Fabric::try_finish(Transfer& t, clock::time_point now) {
  if (t.done || !t.started || !t.copied || now < t.finish) return;
  t.done = true;
  if (t.payload && t.recv->slot) *t.recv->slot = t.payload;
  for (auto* r : {t.send.get(), t.recv.get()}) {
    r->complete = true;
    requests_.erase(r->id);
  }
  t.staged.clear();
  t.staged.shrink_to_fit();
}

void Fabric::perform_copy(std::unique_lock<std::mutex>& lock, Transfer& t) {
  t.claimed = true;
  lock.unlock();
  std::span<const std::byte> src = t.payload ? std::span<const std::byte>(*t.payload)
                                   : t.eager ? std::span<const std::byte>(t.staged)
                                             : t.source;
  if (t.recv->slot) {
    *t.recv->slot = std::make_shared<const std::vector<std::byte>>(src.begin(), src.end());
  } else if (!src.empty()) {
    std::memcpy(t.recv->recv_buffer.data(), src.data(), src.size());
  }
  lock.lock();
  t.copied = true;
}

void Fabric::wait_all(int owner, std::span<const RequestHandle> handles) {
  std::unique_lock lock(mutex_);
  for (const auto& h : handles) {
    if (h.fabric != this || h.rank != owner || h.id == 0 || h.id >= next_id_) {
      throw ContractViolation("wait on a handle not owned by this endpoint");
    }
  }
  auto pending = [&] {
    return std::any_of(handles.begin(), handles.end(), [&](const auto& h) { return requests_.count(h.id) != 0; });
  };
  if (!pending()) return;

  ++waiting_[owner];
  struct Leave {
    int& counter;
    ~Leave() { --counter; }
  } leave{waiting_[owner]};

  for (;;) {
    auto now = clock::now();
    bool changed = false;
    for (std::size_t i = 0; i < active_.size(); ++i) {
      auto t = active_[i];
      if (t->src != owner && t->dst != owner) continue;
      try_start(*t, now);
      if (t->started && !t->claimed) {
        perform_copy(lock, *t);
        now = clock::now();
        changed = true;
      }
      try_finish(*t, now);
    }
    std::erase_if(active_, [](const auto& t) { return t->done; });
    if (changed) cv_.notify_all();
    if (!pending()) break;

    std::optional<clock::time_point> deadline;
    for (const auto& t : active_) {
      if ((t->src == owner || t->dst == owner) && t->started && t->copied) {
        deadline = deadline ? std::min(*deadline, t->finish) : t->finish;
      }
    }
    if (deadline) cv_.wait_until(lock, *deadline);
    else cv_.wait(lock);
  }
  lock.unlock();
  cv_.notify_all();
}

bool Fabric::is_complete(int owner, const RequestHandle& handle) {
  std::lock_guard lock(mutex_);
  if (handle.fabric != this || handle.rank != owner || handle.id == 0 || handle.id >= next_id_) {
    throw ContractViolation("query on a handle not owned by this endpoint");
  }
  const auto now = clock::now();
  for (auto& t : active_) try_finish(*t, now);
  std::erase_if(active_, [](const auto& t) { return t->done; });
  return requests_.count(handle.id) == 0;
}

void Fabric::progress_agent() {
  std::unique_lock lock(mutex_);
  while (!stop_) {
    auto now = clock::now();
    bool changed = false;
    for (std::size_t i = 0; i < active_.size(); ++i) {
      auto t = active_[i];
      try_start(*t, now);
      if (t->started && !t->claimed) {
        perform_copy(lock, *t);
        now = clock::now();
        changed = true;
      }
      if (!t->done) {
        try_finish(*t, now);
        changed |= t->done;
      }
    }
    std::erase_if(active_, [](const auto& t) { return t->done; });
    if (changed) cv_.notify_all();
    if (stop_) break;

    std::optional<clock::time_point> deadline;
    for (const auto& t : active_) {
      if (t->started && t->copied) deadline = deadline ? std::min(*deadline, t->finish) : t->finish;
    }
    if (deadline) cv_.wait_until(lock, *deadline);
    else cv_.wait(lock);
  }
}

double busy_work(double seconds) {
  using clock = std::chrono::steady_clock;
  const auto end = clock::now() + std::chrono::duration_cast<clock::duration>(std::chrono::duration<double>(seconds));
  double a = 1.0, b = 0.5;
  do {
    for (int i = 0; i < 256; ++i) {
      a = a * 0.999999 + b;
      b = b * 0.999999 + 1e-9;
    }
  } while (clock::now() < end);
  return a + b;
}

std::vector<ProbeSample> probe_overlap(Fabric& fabric, std::size_t message_bytes, std::span<const double> work_seconds,
                                       ProbeDirection direction) {
  require(fabric.size() >= 2, "the overlap probe needs at least two ranks");
  for (double w : work_seconds) require(w >= 0.0, "work durations must be non-negative");

  using clock = std::chrono::steady_clock;
  auto body = std::make_shared<std::vector<std::byte>>(message_bytes);
  for (std::size_t i = 0; i < message_bytes; i += 4096) (*body)[i] = std::byte(i / 4096);
  const Payload message = body;

  Endpoint& self = fabric.endpoint(0);
  Endpoint& peer = fabric.endpoint(1);
  std::barrier<> sync(2);
  std::vector<ProbeSample> samples;
  std::exception_ptr peer_error;
  constexpr int kTag = 7001;

  std::thread partner([&] {
    try {
      for (std::size_t i = 0; i < work_seconds.size(); ++i) {
        Payload incoming;
        // posted ahead so the transfer can begin the moment rank 0 posts
        RequestHandle h = direction == ProbeDirection::Recv ? peer.post_send_payload(0, kTag, message)
                                                            : peer.post_recv_payload(0, kTag, &incoming);
        sync.arrive_and_wait();
        peer.wait(h);
        sync.arrive_and_wait();
      }
    } catch (...) {
      peer_error = std::current_exception();
      sync.arrive_and_drop();
    }
  });

  for (double w : work_seconds) {
    sync.arrive_and_wait();
    Payload incoming;
    const auto t0 = clock::now();
    RequestHandle h = direction == ProbeDirection::Recv ? self.post_recv_payload(1, kTag, &incoming)
                                                        : self.post_send_payload(1, kTag, message);
    busy_work(w);
    self.wait(h);
    const auto t1 = clock::now();
    samples.push_back({w, std::chrono::duration<double>(t1 - t0).count()});
    sync.arrive_and_wait();
  }
  partner.join();
  if (peer_error) std::rethrow_exception(peer_error);
  return samples;
}

double overlap_ratio(std::span<const ProbeSample> samples, double transfer_seconds) {
  require(samples.size() >= 2, "overlap ratio needs at least two samples");
  require(transfer_seconds > 0.0, "transfer time must be positive");
  bool below = false;
  double sum = 0.0;
  for (const auto& s : samples) {
    require(s.work_seconds > 0.0, "work durations must be positive");
    below |= s.work_seconds < transfer_seconds;
    const double hi = std::max(s.work_seconds, transfer_seconds);
    const double lo = std::min(s.work_seconds, transfer_seconds);
    sum += 1.0 - (s.total_seconds - hi) / lo;
  }
  require(below, "at least one sample must have work shorter than the transfer");
  return std::clamp(sum / static_cast<double>(samples.size()), 0.0, 1.0);
}

}  // namespace hspmv::transport
