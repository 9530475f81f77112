// Copyright 2026 The extsqd Authors
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

#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <exception>
#include <mutex>
#include <thread>
#include <vector>

namespace extsqd {

/// Worker count from EXTSQD_NUM_WORKERS, or 1 when unset or invalid.
int default_worker_count();

/// Runs fn(i) for every i in [0, n_tasks) on up to `workers` threads.
///
/// Tasks must write only to their own output slots; the result is then
/// independent of the worker count. The first exception thrown by any task is
/// rethrown on the calling thread after all workers join.
template <class Fn>
void parallel_for(std::size_t n_tasks, int workers, Fn&& fn) {
    const std::size_t n_threads = std::min<std::size_t>(n_tasks, static_cast<std::size_t>(std::max(1, workers)));
    if (n_threads <= 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        pool.reserve(n_threads);
        for (std::size_t t = 0; t < n_threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < n_tasks; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                    }
                }
            });
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace extsqd
