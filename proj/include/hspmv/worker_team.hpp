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

#include <condition_variable>
#include <cstddef>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace hspmv {

/// Fixed set of persistent worker threads. launch() hands every worker the
/// same job (called with the worker id); join() blocks until all finished
/// and rethrows the first exception. run() is launch + join.
class WorkerTeam {
 public:
  explicit WorkerTeam(std::size_t n_workers);
  ~WorkerTeam();

  WorkerTeam(const WorkerTeam&) = delete;
  WorkerTeam& operator=(const WorkerTeam&) = delete;

  std::size_t size() const noexcept { return threads_.size(); }

  void launch(std::function<void(std::size_t)> job);
  void join();
  void run(std::function<void(std::size_t)> job) {
    launch(std::move(job));
    join();
  }

 private:
  void worker_loop(std::size_t id);

  std::mutex mutex_;
  std::condition_variable start_cv_;
  std::condition_variable done_cv_;
  std::function<void(std::size_t)> job_;
  std::size_t generation_ = 0;
  std::size_t remaining_ = 0;
  bool running_ = false;
  bool stop_ = false;
  std::exception_ptr error_;
  std::vector<std::thread> threads_;
};

}  // namespace hspmv
