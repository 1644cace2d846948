#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include <functional>

namespace polybm {

using Rng = std::mt19937_64;

/// Seed of path `index` under `master`: a splitmix64 hash of the pair.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

inline Rng path_rng(std::uint64_t master, std::uint64_t index) { return Rng(derive_seed(master, index)); }

/// Number of workers used when a caller passes 0.
unsigned default_threads();

/// Runs body(i) for i in [0, count) on `threads` workers. Work items must be
/// independent; results are written by index so output order never depends on
/// scheduling.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

template <class R, class F>
std::vector<R> map_paths(std::size_t count, unsigned threads, F&& fn) {
  std::vector<R> out(count);
  parallel_for(count, threads, [&](std::size_t i) { out[i] = fn(i); });
  return out;
}

}  // namespace polybm
