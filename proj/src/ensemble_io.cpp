#include "evolab/ensemble_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace evolab {

static_assert(std::endian::native == std::endian::little, "dump format assumes a little-endian host");

namespace {

template <typename T>
void put(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw RuntimeError("truncated dump file");
  return v;
}

void write_header(std::ostream& os, const EnsembleHeader& h) {
  os.write(kEnsembleMagic, sizeof(kEnsembleMagic));
  put(os, h.version);
  put(os, h.dimension);
  put(os, h.n);
  put(os, h.spec_hash);
  put(os, h.s);
  put(os, h.t);
  for (Eigen::Index j = 0; j < h.x.size(); ++j) put(os, h.x[j]);
  put(os, h.lineage.master_seed);
  put(os, h.lineage.shard_index);
  put(os, h.lineage.counter);
  put(os, static_cast<std::uint32_t>(h.kind));
  put(os, h.time_tag);
  put(os, h.burn_in);
  put(os, static_cast<std::uint8_t>(h.has_log_weights ? 1 : 0));
}

EnsembleHeader parse_header(std::istream& is) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, kEnsembleMagic, sizeof(magic)) != 0) throw RuntimeError("not an evolab dump file");
  EnsembleHeader h;
  h.version = get<std::uint32_t>(is);
  if (h.version != 1) throw RuntimeError("unsupported dump version " + std::to_string(h.version));
  h.dimension = get<std::uint32_t>(is);
  h.n = get<std::uint64_t>(is);
  h.spec_hash = get<std::uint64_t>(is);
  h.s = get<double>(is);
  h.t = get<double>(is);
  h.x.resize(h.dimension);
  for (std::uint32_t j = 0; j < h.dimension; ++j) h.x[j] = get<double>(is);
  h.lineage.master_seed = get<std::uint64_t>(is);
  h.lineage.shard_index = get<std::uint64_t>(is);
  h.lineage.counter = get<std::uint64_t>(is);
  h.kind = static_cast<DumpKind>(get<std::uint32_t>(is));
  h.time_tag = get<double>(is);
  h.burn_in = get<double>(is);
  h.has_log_weights = get<std::uint8_t>(is) != 0;
  return h;
}

void write_columns(std::ostream& os, const Matrix& states) {
  for (Eigen::Index j = 0; j < states.rows(); ++j)
    for (Eigen::Index i = 0; i < states.cols(); ++i) put(os, states(j, i));
}

Matrix read_columns(std::istream& is, const EnsembleHeader& h) {
  Matrix m(h.dimension, static_cast<Eigen::Index>(h.n));
  for (Eigen::Index j = 0; j < m.rows(); ++j)
    for (Eigen::Index i = 0; i < m.cols(); ++i) m(j, i) = get<double>(is);
  return m;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw RuntimeError("cannot open " + path + " for writing");
  return os;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw RuntimeError("cannot open " + path);
  return is;
}

}  // namespace

void write_ensemble(const std::string& path, const Ensemble& ensemble, const Vector& x, std::uint64_t spec_hash) {
  EnsembleHeader h;
  h.dimension = static_cast<std::uint32_t>(ensemble.dimension());
  h.n = static_cast<std::uint64_t>(ensemble.size());
  h.spec_hash = spec_hash;
  h.s = ensemble.s;
  h.t = ensemble.t;
  h.x = x;
  h.lineage = ensemble.lineage;
  h.kind = DumpKind::Ensemble;
  h.time_tag = ensemble.s;
  h.has_log_weights = !ensemble.log_weights.empty();
  auto os = open_out(path);
  write_header(os, h);
  write_columns(os, ensemble.states);
  for (double w : ensemble.log_weights) put(os, w);
  for (std::int64_t i = 0; i < ensemble.size(); ++i) put(os, static_cast<std::uint8_t>(ensemble.valid(i) ? 0 : 1));
  if (!os) throw RuntimeError("write failed for " + path);
}

Ensemble read_ensemble(const std::string& path, EnsembleHeader* header) {
  auto is = open_in(path);
  const EnsembleHeader h = parse_header(is);
  if (h.kind != DumpKind::Ensemble) throw RuntimeError(path + " holds a particle set, not an ensemble");
  Ensemble e;
  e.s = h.s;
  e.t = h.t;
  e.lineage = h.lineage;
  e.states = read_columns(is, h);
  if (h.has_log_weights) {
    e.log_weights.resize(h.n);
    for (auto& w : e.log_weights) w = get<double>(is);
  }
  e.divergent.resize(h.n);
  for (auto& flag : e.divergent) {
    flag = get<std::uint8_t>(is);
    e.divergent_count += flag;
  }
  if (header) *header = h;
  return e;
}

void write_measure(const std::string& path, const EmpiricalMeasure& measure, std::uint64_t spec_hash) {
  EnsembleHeader h;
  h.dimension = static_cast<std::uint32_t>(measure.dimension());
  h.n = static_cast<std::uint64_t>(measure.size());
  h.spec_hash = spec_hash;
  h.s = measure.time_tag;
  h.t = measure.time_tag + measure.burn_in;
  h.x = measure.start.size() == measure.dimension() ? measure.start : Vector::Zero(measure.dimension());
  h.lineage = measure.lineage;
  h.kind = DumpKind::Measure;
  h.time_tag = measure.time_tag;
  h.burn_in = measure.burn_in;
  auto os = open_out(path);
  write_header(os, h);
  write_columns(os, measure.particles);
  for (std::int64_t i = 0; i < measure.size(); ++i) put(os, std::uint8_t{0});
  if (!os) throw RuntimeError("write failed for " + path);
}

EmpiricalMeasure read_measure(const std::string& path, EnsembleHeader* header) {
  auto is = open_in(path);
  const EnsembleHeader h = parse_header(is);
  if (h.kind != DumpKind::Measure) throw RuntimeError(path + " holds an ensemble, not a particle set");
  EmpiricalMeasure m;
  m.time_tag = h.time_tag;
  m.burn_in = h.burn_in;
  m.lineage = h.lineage;
  m.start = h.x;
  m.particles = read_columns(is, h);
  if (header) *header = h;
  return m;
}

EnsembleHeader read_header(const std::string& path) {
  auto is = open_in(path);
  return parse_header(is);
}

}  // namespace evolab
