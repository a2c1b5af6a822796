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

#pragma once

#include <barrier>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <thread>
#include <unordered_map>
#include <vector>

namespace hspmv::transport {

/// Progress and cost knobs of the in-process fabric.
///
/// async_progress=false models a library that only moves data while a rank
/// is inside wait_all: a rendezvous transfer starts once both its sender and
/// its receiver are waiting, an eager one once the receiver is waiting. With
/// async_progress=true a background agent starts transfers as soon as both
/// sides are posted.
///
/// synthetic_bandwidth_gbps, when set, makes an m-byte transfer last
/// m / bandwidth seconds from its start. Transfers leaving the same rank are
/// serialized on that rank's link.
struct TransportConfig {
  bool async_progress = false;
  std::optional<double> synthetic_bandwidth_gbps;
  std::size_t eager_threshold = 64 * 1024;
};

/// Immutable message body that can be handed between ranks without copying.
using Payload = std::shared_ptr<const std::vector<std::byte>>;

enum class RequestKind { Send, Recv };

struct RequestHandle {
  std::uint64_t id = 0;
  int rank = -1;
  RequestKind kind = RequestKind::Send;
  const void* fabric = nullptr;
};

class Fabric;

/// One rank's view of the fabric. Safe to share between one communication
/// agent and other threads of the same rank.
class Endpoint {
 public:
  int rank() const noexcept { return rank_; }
  int size() const noexcept;

  RequestHandle post_send(int dest, int tag, std::span<const std::byte> data);
  RequestHandle post_recv(int source, int tag, std::span<std::byte> buffer);

  /// Zero-copy variants. A payload sent to a payload slot is handed over by
  /// reference; mixing a payload with a span copies.
  RequestHandle post_send_payload(int dest, int tag, Payload data);
  RequestHandle post_recv_payload(int source, int tag, Payload* slot);

  template <class T>
  RequestHandle post_send(int dest, int tag, std::span<const T> data) {
    return post_send(dest, tag, std::as_bytes(data));
  }
  template <class T>
  RequestHandle post_recv(int source, int tag, std::span<T> buffer) {
    return post_recv(source, tag, std::as_writable_bytes(buffer));
  }

  /// Blocks until every handle is complete; this is where transfers progress
  /// when async_progress is off.
  void wait_all(std::span<const RequestHandle> handles);
  void wait(const RequestHandle& handle) { wait_all(std::span(&handle, 1)); }
  bool is_complete(const RequestHandle& handle);

  void barrier();

 private:
  friend class Fabric;
  Endpoint(Fabric* fabric, int rank) : fabric_(fabric), rank_(rank) {}
  Fabric* fabric_;
  int rank_;
};

/// In-process multi-rank transport: one endpoint per rank, shared mailboxes.
class Fabric {
 public:
  Fabric(int n_ranks, TransportConfig config = {});
  ~Fabric();

  Fabric(const Fabric&) = delete;
  Fabric& operator=(const Fabric&) = delete;

  int size() const noexcept { return static_cast<int>(endpoints_.size()); }
  const TransportConfig& config() const noexcept { return config_; }
  Endpoint& endpoint(int rank);

 private:
  friend class Endpoint;
  using clock = std::chrono::steady_clock;

  struct Request;
  struct Transfer;

  RequestHandle post(int owner, RequestKind kind, int peer, int tag, std::span<const std::byte> send_data,
                     std::span<std::byte> recv_buffer, Payload payload, Payload* slot);
  void wait_all(int owner, std::span<const RequestHandle> handles);
  bool is_complete(int owner, const RequestHandle& handle);

  // All below run with mutex_ held.
  void match(const std::shared_ptr<Transfer>& t, clock::time_point now);
  void try_start(Transfer& t, clock::time_point now);
  void try_finish(Transfer& t, clock::time_point now);
  void perform_copy(std::unique_lock<std::mutex>& lock, Transfer& t);
  void progress_agent();

  TransportConfig config_;
  std::vector<std::unique_ptr<Endpoint>> endpoints_;
  std::barrier<> barrier_;

  std::mutex mutex_;
  std::condition_variable cv_;
  std::uint64_t next_id_ = 1;
  std::unordered_map<std::uint64_t, std::shared_ptr<Request>> requests_;
  // per destination rank: unmatched sends and posted receives, FIFO
  std::vector<std::deque<std::shared_ptr<Transfer>>> unexpected_;
  std::vector<std::deque<std::shared_ptr<Request>>> posted_recvs_;
  std::vector<std::shared_ptr<Transfer>> active_;
  std::vector<int> waiting_;  // per rank: number of threads inside wait_all
  std::vector<clock::time_point> link_free_;
  bool stop_ = false;
  std::thread agent_;
};

/// Spins on register-only arithmetic until `seconds` of wall time passed.
double busy_work(double seconds);

enum class ProbeDirection { Recv, Send };

struct ProbeSample {
  double work_seconds = 0.0;
  double total_seconds = 0.0;
};

/// Nonblocking-overlap probe between ranks 0 and 1 of a fabric: for each
/// work duration rank 0 posts its side of one large message, does busy work,
/// then waits. Rank 1's side is posted ahead of time and waited on at once.
/// Throws ContractViolation for fabrics with fewer than two ranks.
std::vector<ProbeSample> probe_overlap(Fabric& fabric, std::size_t message_bytes,
                                       std::span<const double> work_seconds,
                                       ProbeDirection direction = ProbeDirection::Recv);

/// Mean over samples of 1 - (total - max(w, T)) / min(w, T), clamped to
/// [0, 1]. Requires at least two samples, all work times positive, and at
/// least one with w < T.
double overlap_ratio(std::span<const ProbeSample> samples, double transfer_seconds);

}  // namespace hspmv::transport
