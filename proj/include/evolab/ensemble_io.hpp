#ifndef EVOLAB_ENSEMBLE_IO_HPP
#define EVOLAB_ENSEMBLE_IO_HPP

// Binary columnar dump for ensembles and particle sets.
//
// Layout (little-endian):
//   char[8]  magic "EVOLENS1"
//   u32      version (1)
//   u32      d
//   u64      n
//   u64      spec hash
//   f64      s, t
//   f64[d]   x (start point)
//   u64[3]   lineage (master_seed, shard_index, counter)
//   u32      kind (0 ensemble, 1 measure)
//   f64      time_tag
//   f64      burn_in
//   u8       has_log_weights
//   then d columns of n f64 (coordinate j of every state), then n f64 log
//   weights when present, then n u8 divergence flags.

#include "evolab/measures.hpp"

#include <string>

namespace evolab {

inline constexpr char kEnsembleMagic[8] = {'E', 'V', 'O', 'L', 'E', 'N', 'S', '1'};

enum class DumpKind : std::uint32_t { Ensemble = 0, Measure = 1 };

struct EnsembleHeader {
  std::uint32_t version = 1;
  std::uint32_t dimension = 0;
  std::uint64_t n = 0;
  std::uint64_t spec_hash = 0;
  double s = 0.0;
  double t = 0.0;
  Vector x;
  SeedLineage lineage;
  DumpKind kind = DumpKind::Ensemble;
  double time_tag = 0.0;
  double burn_in = 0.0;
  bool has_log_weights = false;
};

void write_ensemble(const std::string& path, const Ensemble& ensemble, const Vector& x, std::uint64_t spec_hash);
Ensemble read_ensemble(const std::string& path, EnsembleHeader* header = nullptr);

void write_measure(const std::string& path, const EmpiricalMeasure& measure, std::uint64_t spec_hash);
EmpiricalMeasure read_measure(const std::string& path, EnsembleHeader* header = nullptr);

EnsembleHeader read_header(const std::string& path);

}  // namespace evolab

#endif  // EVOLAB_ENSEMBLE_IO_HPP
