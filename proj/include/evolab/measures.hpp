#ifndef EVOLAB_MEASURES_HPP
#define EVOLAB_MEASURES_HPP

#include "evolab/sde.hpp"

#include <optional>
#include <vector>

namespace evolab {

/// Uniformly weighted particle approximation of mu_t.
///
/// Particles are paths started at start with the clock at t + burn_in and run
/// down to t. Under r0 < 0 two such paths contract at rate e^{r0 T}, which is
/// recorded as coupling_bias = e^{r0 T} |start|.
struct EmpiricalMeasure {
  double time_tag = 0.0;
  Matrix particles;
  double burn_in = 0.0;
  SeedLineage lineage;
  Vector start;
  double coupling_bias = 0.0;
  double step = 0.0;

  std::int64_t size() const { return particles.cols(); }
  int dimension() const { return static_cast<int>(particles.rows()); }
  double weight() const { return 1.0 / static_cast<double>(size()); }
  std::vector<double> values(const ScalarFn& f) const;
};

/// 10/|r0|.
double default_burn_in(const OperatorSpec& spec);

EmpiricalMeasure estimate_measure(const OperatorSpec& spec, double t, double burn_in, std::int64_t n,
                                  const PathConfig& config, const SeedLineage& lineage);
EmpiricalMeasure estimate_measure(const OperatorSpec& spec, double t, double burn_in, std::int64_t n,
                                  const PathConfig& config, const SeedLineage& lineage, const Vector& start);

/// Particle average of f.
McEstimate integrate(const EmpiricalMeasure& measure, const ScalarFn& f);

struct InvarianceResidual {
  /// int G(t,s) f dmu_t: one continued path per mu_t particle.
  McEstimate lhs;
  /// int f dmu_s on independent particles.
  McEstimate rhs;
  McEstimate residual;
  bool pass = false;
};

InvarianceResidual invariance_residual(const OperatorSpec& spec, const ScalarFn& f, double s, double t,
                                       std::int64_t n, const PathConfig& config, const SeedLineage& lineage,
                                       double burn_in = 0.0);

/// One residual per function on shared particle sets.
std::vector<InvarianceResidual> invariance_residuals(const OperatorSpec& spec, const std::vector<ScalarFn>& fs,
                                                     double s, double t, std::int64_t n, const PathConfig& config,
                                                     const SeedLineage& lineage, double burn_in = 0.0);

/// (mean |f|^p)^{1/p} with delta-method standard error.
McEstimate lp_norm(const EmpiricalMeasure& measure, const ScalarFn& f, double p);

struct ExpMoment {
  McEstimate estimate;
  /// log of the estimate, finite even when the estimate overflows.
  double log_value = 0.0;
  /// Prefix-doubling heuristic fired.
  bool heuristic_divergent = false;
  /// Set when a Gaussian oracle for the measure exists.
  std::optional<bool> analytic_divergent;
  /// analytic verdict when available, else the heuristic.
  bool divergent = false;
  /// (prefix size, estimate) pairs of the sweep.
  std::vector<std::pair<std::int64_t, double>> sweep;
};

struct ExpMomentOptions {
  /// Prefix sizes n/2^K, ..., n/2, n.
  int levels = 12;
  double jump = 0.2;
  int consecutive = 2;
};

/// Particle average of exp(lambda |x|^power), power 1 or 2, in log space.
///
/// Divergence heuristic: the estimate on prefixes n/2^k is flagged when two
/// consecutive doublings each move it by more than 20%. Sampling cannot prove
/// divergence; this is a heuristic.
ExpMoment exp_moment(const EmpiricalMeasure& measure, double lambda, int power, const ExpMomentOptions& options = {});

/// As above, with the analytic flag from the OU stationary law of spec when available.
ExpMoment exp_moment(const OperatorSpec& spec, const EmpiricalMeasure& measure, double lambda, int power,
                     const ExpMomentOptions& options = {});

struct TightnessReport {
  std::vector<double> radii;
  /// mass[k][j] = mu_k(B(0, radii[j]))
  std::vector<std::vector<double>> mass;
  /// min over measures, per radius
  std::vector<double> min_mass;
  double epsilon = 0.0;
  bool pass = false;
  /// Smallest grid radius with min_mass >= 1 - epsilon.
  std::optional<double> radius;
  /// Exact empirical radius: max over measures of the (1-eps) quantile of |x|.
  std::optional<double> quantile_radius;
};

/// Radii default to 401 points on [0, max particle norm].
TightnessReport tightness_check(const std::vector<EmpiricalMeasure>& measures, double epsilon,
                                std::vector<double> radii = {});

/// Two-sample Kolmogorov-Smirnov statistic on one coordinate.
double ks_distance(const Matrix& a, const Matrix& b, int coordinate = 0);
/// c(alpha) sqrt((n+m)/(n m)) with c(alpha) = sqrt(-log(alpha/2)/2).
double ks_critical(std::int64_t n, std::int64_t m, double alpha);

}  // namespace evolab

#endif  // EVOLAB_MEASURES_HPP
