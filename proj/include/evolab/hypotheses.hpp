#ifndef EVOLAB_HYPOTHESES_HPP
#define EVOLAB_HYPOTHESES_HPP

#include "evolab/operator.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace evolab {

/// Outcome of a sampled hypothesis check.
struct HypothesisReport {
  std::string name;
  bool pass = false;
  double min_value = 0.0;
  double max_value = 0.0;
  /// Smallest (bound - value) over samples; negative means violated.
  double worst_slack = 0.0;
  double worst_t = 0.0;
  Vector worst_x;
  std::size_t samples = 0;
  std::string detail;
};

struct Tolerance {
  double abs = 1e-8;
  double rel = 1e-8;
  double at(double scale) const { return abs + rel * std::abs(scale); }
};

struct DissipativitySample {
  double t;
  Vector x;
  Vector xi;
};

/// Rayleigh quotients of Q(t) over directions and the eigenvectors of Q(t);
/// tolerance 1e-10 * Lambda. Throws SymmetryViolation past 1e-12 asymmetry.
HypothesisReport check_ellipticity(const OperatorSpec& spec, const std::vector<double>& time_grid,
                                   const std::vector<Vector>& directions);

/// max <J xi, xi>/|xi|^2 <= r0 plus <b(t,x),x> <= sup|b(.,0)| |x| + r0 |x|^2.
HypothesisReport check_dissipativity(const OperatorSpec& spec, const std::vector<DissipativitySample>& samples,
                                     Tolerance tol = {});

/// Time grid x radial shells x random directions; reproducible for a seed.
std::vector<DissipativitySample> dissipativity_samples(const OperatorSpec& spec, const std::vector<double>& times,
                                                       const std::vector<double>& radii, int directions,
                                                       std::uint64_t seed = 7);

/// Unit directions: coordinate axes with both signs, then random ones.
std::vector<Vector> unit_directions(int dimension, int random_count, std::uint64_t seed = 11);

struct GridPoint {
  double t;
  Vector x;
};

/// Points r*e for r in radii, e in directions, t in times.
std::vector<GridPoint> annulus_grid(const std::vector<double>& times, const std::vector<double>& radii,
                                    const std::vector<Vector>& directions);

/// A(t) phi <= a - gamma phi at every grid point. Built-in families use the
/// analytic Hessian; custom phi uses central differences.
HypothesisReport check_lyapunov(const OperatorSpec& spec, const LyapunovSpec& lyap,
                                const std::vector<GridPoint>& grid, Tolerance tol = {});

/// (A(t) phi)(x) for the Lyapunov candidate.
double lyapunov_generator(const OperatorSpec& spec, const LyapunovSpec& lyap, double t, const Vector& x);

/// Convex increasing h, given through k(u) = h(e^u)/e^u so that huge
/// arguments never overflow.
struct ConvexProfile {
  std::string name;
  std::function<double(double)> h_over_y;
  /// Optional closed-form bound on the tail integral of 1/h from e^u.
  std::function<double(double)> tail_bound;
  /// log P: start of the range where the tail bound applies.
  double tail_from = 0.0;
};

ConvexProfile linear_profile();
/// Construction for <b,x> <= -K2 |x|^2 (log|x|)^alpha on |x| >= R0, clipped at its minimum.
ConvexProfile log_drift_profile(double K2, double alpha, double lambda, double Lambda, int dimension, double R0);
/// Construction for <b,x> <= -K3 |x|^kappa, clipped at its minimum.
ConvexProfile power_drift_profile(double K3, double kappa, double lambda, double Lambda, int dimension);

/// A(t) phi_lambda <= -h(phi_lambda) for |x| >= R, phi_lambda = exp(lambda|x|^2).
/// Throws NotConvex or TailNotIntegrable when h fails its own preconditions.
HypothesisReport check_convex_lyapunov(const OperatorSpec& spec, double lambda, const ConvexProfile& h,
                                       double R, const std::vector<GridPoint>& grid, Tolerance tol = {});

struct ClassifierKnobs {
  double radius_span = 1e4;
  int radii = 41;
  double kappa_threshold = 2.5;
  double alpha_ultra_threshold = 1.25;
  double alpha_hyper_threshold = 0.8;
  double snap = 0.02;
  int random_directions = 8;
};

struct RegimeClassification {
  Regime regime;
  double kappa_hat = 0.0;
  double alpha_hat = 0.0;
  std::vector<std::string> ladder;
};

/// Fits the growth of -<b(t,x),x> on a geometric shell grid from R outward.
RegimeClassification classify_regime(const OperatorSpec& spec, double R, const std::vector<double>& times,
                                     ClassifierKnobs knobs = {});

/// c(t,x) >= c0 on the grid.
HypothesisReport check_potential(const PotentialSpec& potential, const std::vector<GridPoint>& grid,
                                 Tolerance tol = {});

}  // namespace evolab

#endif  // EVOLAB_HYPOTHESES_HPP
