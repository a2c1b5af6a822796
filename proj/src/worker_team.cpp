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

#include "hspmv/worker_team.hpp"

#include "hspmv/error.hpp"

namespace hspmv {

WorkerTeam::WorkerTeam(std::size_t n_workers) {
  require(n_workers >= 1, "worker team needs at least one worker");
  threads_.reserve(n_workers);
  for (std::size_t id = 0; id < n_workers; ++id) threads_.emplace_back([this, id] { worker_loop(id); });
}

WorkerTeam::~WorkerTeam() {
  {
    std::unique_lock lock(mutex_);
    done_cv_.wait(lock, [this] { return !running_; });
    stop_ = true;
  }
  start_cv_.notify_all();
  for (auto& t : threads_) t.join();
}

void WorkerTeam::launch(std::function<void(std::size_t)> job) {
  {
    std::lock_guard lock(mutex_);
    require(!running_, "worker team is already running a job");
    job_ = std::move(job);
    remaining_ = threads_.size();
    error_ = nullptr;
    running_ = true;
    ++generation_;
  }
  start_cv_.notify_all();
}

void WorkerTeam::join() {
  std::unique_lock lock(mutex_);
  done_cv_.wait(lock, [this] { return !running_; });
  if (error_) {
    auto e = error_;
    error_ = nullptr;
    std::rethrow_exception(e);
  }
}

void WorkerTeam::worker_loop(std::size_t id) {
  std::size_t seen = 0;
  for (;;) {
    std::function<void(std::size_t)>* job = nullptr;
    {
      std::unique_lock lock(mutex_);
      start_cv_.wait(lock, [&] { return stop_ || generation_ != seen; });
      if (stop_) return;
      seen = generation_;
      job = &job_;
    }
    std::exception_ptr failure;
    try {
      (*job)(id);
    } catch (...) {
      failure = std::current_exception();
    }
    std::lock_guard lock(mutex_);
    if (failure && !error_) error_ = failure;
    if (--remaining_ == 0) {
      running_ = false;
      done_cv_.notify_all();
    }
  }
}

}  // namespace hspmv
