// Copyright 2026 The ldp-testing Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LDP_PARALLEL_HPP_
#define LDP_PARALLEL_HPP_

#include <atomic>
#include <exception>
#include <functional>
#include <mutex>
#include <thread>
#include <vector>

namespace ldp {

// Runs fn(i) for i in [0, count) on up to `threads` workers. Each index owns
// its output slot and derives its own rng stream, so results cannot depend on
// the schedule. The first exception, if any, is rethrown on the caller.
inline void parallel_for(long long count, int threads, const std::function<void(long long)>& fn) {
  if (count <= 0) return;
  if (threads < 1) threads = 1;
  if (threads == 1 || count == 1) {
    for (long long i = 0; i < count; ++i) fn(i);
    return;
  }
  const int workers = static_cast<int>(std::min<long long>(threads, count));
  std::atomic<long long> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      while (true) {
        const long long i = next.fetch_add(1);
        if (i >= count) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace ldp

#endif  // LDP_PARALLEL_HPP_
