// hybridseg - point-cloud primitive segmentation and implicit-field toolkit
// SPDX-License-Identifier: MIT

#pragma once

#include <cstddef>
#include <exception>
#include <thread>
#include <vector>

namespace hybridseg {

/// Number of workers used when a caller passes threads == 0.
inline unsigned default_thread_count() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

/// Runs fn(i) for i in [begin, end) over a static block partition.
/// Each index writes only its own output slots, so results do not depend on
/// the number of threads.
template <typename Fn>
void parallel_for(std::size_t begin, std::size_t end, Fn&& fn,
                  unsigned threads = 0) {
  const std::size_t count = end > begin ? end - begin : 0;
  if (count == 0) return;
  unsigned workers = threads == 0 ? default_thread_count() : threads;
  if (workers > count) workers = static_cast<unsigned>(count);
  if (workers <= 1) {
    for (std::size_t i = begin; i < end; ++i) fn(i);
    return;
  }

  std::exception_ptr error;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const std::size_t chunk = (count + workers - 1) / workers;
  for (unsigned w = 0; w < workers; ++w) {
    const std::size_t lo = begin + chunk * w;
    const std::size_t hi = lo + chunk < end ? lo + chunk : end;
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn, &error]() {
      try {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      } catch (...) {
        if (!error) error = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace hybridseg
