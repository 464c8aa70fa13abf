#pragma once

#include <cstdint>
#include <functional>

namespace slt {

// Stateless splitmix64-based mixing; gives independent, reproducible streams
// for (master, unit) pairs regardless of scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b);

// requested <= 0 selects hardware concurrency.
int resolve_threads(int requested);

// Runs fn(0..n_units-1) on up to `threads` workers. Work units must be
// independent; the first exception thrown is rethrown on the caller thread.
void parallel_for(long n_units, int threads, const std::function<void(long)>& fn);

}  // namespace slt
