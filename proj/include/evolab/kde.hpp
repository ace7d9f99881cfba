#ifndef EVOLAB_KDE_HPP
#define EVOLAB_KDE_HPP

#include "evolab/sde.hpp"

#include <optional>
#include <vector>

namespace evolab {

struct KdeOptions {
  /// Per-axis bandwidth; Silverman's rule when unset.
  std::optional<double> bandwidth;
  /// Query grid: mean +- window * sd per axis.
  double window = 5.0;
  /// Points per axis; 0 picks 401, 81, 31 for d = 1, 2, 3.
  int points_per_axis = 0;
  /// Explicit d x m query points; overrides the grid.
  std::optional<Matrix> query;
  /// Sup is flagged when the estimated smoothing bias at the argmax exceeds this fraction.
  double bias_tolerance = 0.01;
};

/// Gaussian product-kernel density estimate on a query set.
struct DensityEstimate {
  Matrix query;
  std::vector<double> density;
  Vector bandwidth;
  double sup = 0.0;
  Vector argsup;
  /// (h^2/2) Laplacian estimate at argsup, relative to sup.
  double relative_bias = 0.0;
  /// Smoothing bias at the sup is not negligible; the sup is biased low.
  bool bias_caveat = false;
  std::int64_t n = 0;
  /// Tensor trapezoid integral over the grid; NaN for explicit query sets.
  double mass = 0.0;
  /// Grid shape (points per axis), empty for explicit query sets.
  std::vector<int> shape;
};

/// (4/(d+2))^{1/(d+4)} n^{-1/(d+4)} sd_j per axis.
Vector silverman_bandwidth(const Matrix& points);

/// points: d x n, d <= 3.
DensityEstimate kernel_density(const Matrix& points, const KdeOptions& options = {});

/// Density of the law of X at s for the path started at x with the clock at t.
DensityEstimate kernel_density(const OperatorSpec& spec, double s, double t, const Vector& x, std::int64_t n,
                               const PathConfig& config, const SeedLineage& lineage, const KdeOptions& options = {});

/// Ratio of two density estimates on a common grid; used for kernels taken
/// with respect to a reference measure rather than Lebesgue measure.
struct RelativeDensity {
  DensityEstimate numerator;
  DensityEstimate reference;
  std::vector<double> ratio;
  double sup = 0.0;
  Vector argsup;
  /// Grid points kept: reference density >= core * max reference density.
  std::int64_t kept = 0;
};

RelativeDensity relative_density(const Matrix& points, const Matrix& reference, const KdeOptions& options = {},
                                 double core = 1e-3);

}  // namespace evolab

#endif  // EVOLAB_KDE_HPP
