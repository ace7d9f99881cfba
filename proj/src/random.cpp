#include "evolab/random.hpp"

#include <algorithm>
#include <exception>
#include <string>
#include <thread>
#include <vector>

namespace evolab {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

SeedLineage SeedLineage::advanced(std::uint64_t paths) const {
  const std::uint64_t g = shard_index * kShardSize + counter + paths;
  return {master_seed, g / kShardSize, g % kShardSize};
}

SeedLineage SeedLineage::derive(std::uint64_t tag) const {
  const std::uint64_t base = splitmix64(master_seed ^ splitmix64(shard_index * kShardSize + counter));
  return {splitmix64(base ^ splitmix64(tag + 0x5851f42d4c957f2dULL)), 0, 0};
}

std::mt19937_64 path_engine(const SeedLineage& lineage, std::uint64_t path) {
  const std::uint64_t g = lineage.shard_index * kShardSize + lineage.counter + path;
  const std::uint64_t shard = g / kShardSize;
  const std::uint64_t counter = g % kShardSize;
  const std::uint64_t seed = splitmix64(lineage.master_seed ^ splitmix64(shard ^ splitmix64(counter)));
  return std::mt19937_64(seed);
}

int worker_count() {
  if (const char* env = std::getenv("EVOLAB_THREADS")) {
    try {
      const int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
  }
  return 1;
}

void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(worker_count()), std::max<std::size_t>(n, 1));
  if (workers <= 1) {
    body(0, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const std::size_t chunk = (n + workers - 1) / workers;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = w * chunk;
    const std::size_t hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, w, lo, hi] {
      try {
        body(lo, hi);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace evolab
