#include "evolab/kde.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace evolab {

namespace {

constexpr double kCut = 8.0;

struct SortedPoints {
  Matrix pts;  // columns sorted by coordinate 0
  std::vector<double> first;
};

SortedPoints sort_points(const Matrix& points) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(points.cols()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return points(0, a) < points(0, b); });
  SortedPoints sp;
  sp.pts.resize(points.rows(), points.cols());
  sp.first.resize(idx.size());
  for (std::size_t k = 0; k < idx.size(); ++k) {
    sp.pts.col(static_cast<Eigen::Index>(k)) = points.col(idx[k]);
    sp.first[k] = points(0, idx[k]);
  }
  return sp;
}

// density and Laplacian at y
std::pair<double, double> evaluate(const SortedPoints& sp, const Vector& h, const Vector& y) {
  const auto d = y.size();
  const auto lo = std::lower_bound(sp.first.begin(), sp.first.end(), y[0] - kCut * h[0]) - sp.first.begin();
  const auto hi = std::upper_bound(sp.first.begin(), sp.first.end(), y[0] + kCut * h[0]) - sp.first.begin();
  double sum = 0.0, lap = 0.0;
  for (auto i = lo; i < hi; ++i) {
    double q = 0.0, l = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double u = (y[j] - sp.pts(j, i)) / h[j];
      q += u * u;
      l += (u * u - 1.0) / (h[j] * h[j]);
    }
    const double k = std::exp(-0.5 * q);
    sum += k;
    lap += k * l;
  }
  double norm = static_cast<double>(sp.pts.cols());
  for (Eigen::Index j = 0; j < d; ++j) norm *= std::sqrt(2.0 * std::numbers::pi) * h[j];
  return {sum / norm, lap / norm};
}

int default_points(int d) { return d == 1 ? 401 : d == 2 ? 81 : 31; }

struct Grid {
  Matrix query;
  std::vector<int> shape;
  Vector lo, hi;
};

Grid make_grid(const std::vector<const Matrix*>& sets, double window, int per_axis) {
  const auto d = sets.front()->rows();
  Grid g;
  g.lo = Vector::Constant(d, std::numeric_limits<double>::infinity());
  g.hi = -g.lo;
  for (const Matrix* p : sets) {
    const Vector mean = p->rowwise().mean();
    const Vector sd = ((p->colwise() - mean).array().square().rowwise().sum() / double(p->cols() - 1)).sqrt();
    g.lo = g.lo.cwiseMin(mean - window * sd);
    g.hi = g.hi.cwiseMax(mean + window * sd);
  }
  std::int64_t m = 1;
  for (Eigen::Index j = 0; j < d; ++j) {
    g.shape.push_back(per_axis);
    m *= per_axis;
  }
  g.query.resize(d, m);
  for (std::int64_t k = 0; k < m; ++k) {
    std::int64_t r = k;
    for (Eigen::Index j = 0; j < d; ++j) {
      const auto i = r % per_axis;
      r /= per_axis;
      g.query(j, k) = g.lo[j] + (g.hi[j] - g.lo[j]) * static_cast<double>(i) / (per_axis - 1);
    }
  }
  return g;
}

double trapezoid_mass(const Grid& g, const std::vector<double>& f) {
  const auto d = g.query.rows();
  const int per_axis = g.shape.front();
  double total = 0.0;
  for (std::size_t k = 0; k < f.size(); ++k) {
    std::int64_t r = static_cast<std::int64_t>(k);
    double w = 1.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const auto i = r % per_axis;
      r /= per_axis;
      const double dx = (g.hi[j] - g.lo[j]) / (per_axis - 1);
      w *= (i == 0 || i == per_axis - 1) ? 0.5 * dx : dx;
    }
    total += w * f[k];
  }
  return total;
}

void check_points(const Matrix& points) {
  if (points.rows() > 3) throw DimensionTooHigh("kernel density needs d <= 3");
  if (points.rows() < 1 || points.cols() < 2) throw PreconditionError("need at least two points");
}

DensityEstimate estimate_on(const Matrix& points, const Matrix& query, const Vector& h, double bias_tolerance) {
  const SortedPoints sp = sort_points(points);
  DensityEstimate out;
  out.query = query;
  out.bandwidth = h;
  out.n = points.cols();
  out.density.resize(static_cast<std::size_t>(query.cols()));
  std::vector<double> lap(out.density.size());
  parallel_chunks(out.density.size(), [&](std::size_t lo, std::size_t hi) {
    Vector y(query.rows());
    for (std::size_t k = lo; k < hi; ++k) {
      y = query.col(static_cast<Eigen::Index>(k));
      std::tie(out.density[k], lap[k]) = evaluate(sp, h, y);
    }
  });
  const auto best = std::max_element(out.density.begin(), out.density.end()) - out.density.begin();
  out.sup = out.density[static_cast<std::size_t>(best)];
  out.argsup = query.col(best);
  if (out.sup > 0) {
    // E[f_h] - f ~ (h^2/2) Laplacian f; use the estimate's own Laplacian
    const double h2 = h.squaredNorm() / static_cast<double>(h.size());
    out.relative_bias = std::abs(0.5 * h2 * lap[static_cast<std::size_t>(best)]) / out.sup;
  }
  out.bias_caveat = out.relative_bias > bias_tolerance;
  return out;
}

Vector pick_bandwidth(const Matrix& points, const KdeOptions& options) {
  if (options.bandwidth) {
    if (!(*options.bandwidth > 0)) throw PreconditionError("bandwidth must be positive");
    return Vector::Constant(points.rows(), *options.bandwidth);
  }
  return silverman_bandwidth(points);
}

}  // namespace

Vector silverman_bandwidth(const Matrix& points) {
  const double d = static_cast<double>(points.rows());
  const double n = static_cast<double>(points.cols());
  const Vector mean = points.rowwise().mean();
  const Vector sd = ((points.colwise() - mean).array().square().rowwise().sum() / (n - 1)).sqrt();
  const double factor = std::pow(4.0 / (d + 2.0), 1.0 / (d + 4.0)) * std::pow(n, -1.0 / (d + 4.0));
  return factor * sd;
}

DensityEstimate kernel_density(const Matrix& points, const KdeOptions& options) {
  check_points(points);
  const Vector h = pick_bandwidth(points, options);
  if (options.query) {
    DensityEstimate out = estimate_on(points, *options.query, h, options.bias_tolerance);
    out.mass = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  const int per_axis = options.points_per_axis > 1 ? options.points_per_axis : default_points(int(points.rows()));
  const Grid g = make_grid({&points}, options.window, per_axis);
  DensityEstimate out = estimate_on(points, g.query, h, options.bias_tolerance);
  out.mass = trapezoid_mass(g, out.density);
  out.shape = g.shape;
  return out;
}

DensityEstimate kernel_density(const OperatorSpec& spec, double s, double t, const Vector& x, std::int64_t n,
                               const PathConfig& config, const SeedLineage& lineage, const KdeOptions& options) {
  if (spec.dimension > 3) throw DimensionTooHigh("kernel density needs d <= 3");
  const Ensemble e = simulate(spec, s, t, x, n, config, lineage);
  if (e.divergent_count == 0) return kernel_density(e.states, options);
  Matrix kept(spec.dimension, n - e.divergent_count);
  Eigen::Index k = 0;
  for (std::int64_t i = 0; i < n; ++i)
    if (e.valid(i)) kept.col(k++) = e.states.col(i);
  return kernel_density(kept, options);
}

RelativeDensity relative_density(const Matrix& points, const Matrix& reference, const KdeOptions& options,
                                 double core) {
  check_points(points);
  check_points(reference);
  if (points.rows() != reference.rows()) throw PreconditionError("dimension mismatch");
  RelativeDensity out;
  Matrix query;
  Grid g;
  if (options.query) {
    query = *options.query;
  } else {
    const int per_axis = options.points_per_axis > 1 ? options.points_per_axis : default_points(int(points.rows()));
    g = make_grid({&points, &reference}, options.window, per_axis);
    query = g.query;
  }
  out.numerator = estimate_on(points, query, pick_bandwidth(points, options), options.bias_tolerance);
  out.reference = estimate_on(reference, query, pick_bandwidth(reference, options), options.bias_tolerance);
  if (!options.query) {
    out.numerator.mass = trapezoid_mass(g, out.numerator.density);
    out.reference.mass = trapezoid_mass(g, out.reference.density);
    out.numerator.shape = out.reference.shape = g.shape;
  }
  const double floor = core * out.reference.sup;
  out.ratio.assign(out.numerator.density.size(), 0.0);
  Eigen::Index best = -1;
  for (std::size_t k = 0; k < out.ratio.size(); ++k) {
    if (out.reference.density[k] < floor || !(out.reference.density[k] > 0)) continue;
    out.ratio[k] = out.numerator.density[k] / out.reference.density[k];
    ++out.kept;
    if (best < 0 || out.ratio[k] > out.sup) {
      out.sup = out.ratio[k];
      best = static_cast<Eigen::Index>(k);
    }
  }
  if (best >= 0) out.argsup = query.col(best);
  return out;
}

}  // namespace evolab
