#pragma once

#include <algorithm>
#include <thread>
#include <vector>

namespace forktms {

// Worker cap shared by the voxel-parallel loops; 0 means hardware
// concurrency. Results never depend on the cap.
inline int& max_jobs() {
  static int jobs = 0;
  return jobs;
}

inline int effective_jobs() {
  const int hw = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return max_jobs() > 0 ? std::min(max_jobs(), hw) : hw;
}

/// Calls fn(lo, hi) over disjoint contiguous chunks of [begin, end).
template <typename Fn>
void parallel_for(int begin, int end, Fn&& fn) {
  const int n = end - begin;
  if (n <= 0) return;
  const int jobs = std::min(effective_jobs(), n);
  if (jobs <= 1) {
    fn(begin, end);
    return;
  }
  std::vector<std::thread> workers;
  const int chunk = (n + jobs - 1) / jobs;
  for (int lo = begin; lo < end; lo += chunk) {
    workers.emplace_back([&fn, lo, hi = std::min(end, lo + chunk)] { fn(lo, hi); });
  }
  for (auto& w : workers) w.join();
}

}  // namespace forktms
