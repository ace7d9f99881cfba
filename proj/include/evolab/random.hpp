#ifndef EVOLAB_RANDOM_HPP
#define EVOLAB_RANDOM_HPP

#include <cstdint>
#include <cstdlib>
#include <functional>
#include <random>

namespace evolab {

/// Paths per shard. Path g of a run maps to (shard = g / kShardSize, counter = g % kShardSize).
inline constexpr std::uint64_t kShardSize = 4096;

/// (master_seed, shard_index, counter) names the first path of an ensemble;
/// path i of the ensemble is the global path shard_index*kShardSize + counter + i.
struct SeedLineage {
  std::uint64_t master_seed = 0;
  std::uint64_t shard_index = 0;
  std::uint64_t counter = 0;

  /// Lineage of the ensemble starting `paths` paths later.
  SeedLineage advanced(std::uint64_t paths) const;
  /// Independent stream keyed by a tag; used for sub-ensembles.
  SeedLineage derive(std::uint64_t tag) const;
  bool operator==(const SeedLineage&) const = default;
};

std::uint64_t splitmix64(std::uint64_t x);

/// Engine for path i of the ensemble named by `lineage`.
std::mt19937_64 path_engine(const SeedLineage& lineage, std::uint64_t path);

/// Worker count from EVOLAB_THREADS (default 1).
int worker_count();

/// Runs body(begin, end) over [0, n) split into contiguous chunks.
void parallel_chunks(std::size_t n, const std::function<void(std::size_t, std::size_t)>& body);

}  // namespace evolab

#endif  // EVOLAB_RANDOM_HPP
