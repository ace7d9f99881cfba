#ifndef EVOLAB_SDE_HPP
#define EVOLAB_SDE_HPP

#include "evolab/operator.hpp"
#include "evolab/random.hpp"
#include "evolab/test_function.hpp"

#include <vector>

namespace evolab {

enum class Taming { Auto, On, Off };

struct PathConfig {
  double step = 1e-3;
  double blowup_guard = 1e8;
  /// Auto tames superlinear drifts with b/(1 + h|b|).
  Taming taming = Taming::Auto;
  double max_divergent_fraction = 0.01;
  bool keep_paths = false;
};

/// Terminal states of n Euler-Maruyama paths for G(t,s).
///
/// G(t,s)f solves D_t u = A(t)u with u(s) = f, so each path starts at x with
/// the coefficient clock at t and steps down to s, using coefficients at
/// tau_k = t - k h. The noise is sqrt(2 Q(tau_k)) dW.
struct Ensemble {
  double s = 0.0;
  double t = 0.0;
  /// d x n terminal states.
  Matrix states;
  /// Per-path log Feynman-Kac weight; empty without a potential.
  std::vector<double> log_weights;
  std::vector<std::uint8_t> divergent;
  std::int64_t divergent_count = 0;
  SeedLineage lineage;
  std::int64_t steps = 0;
  double step = 0.0;
  /// d x (steps+1) trajectories, only when PathConfig::keep_paths.
  std::vector<Matrix> paths;

  std::int64_t size() const { return states.cols(); }
  int dimension() const { return static_cast<int>(states.rows()); }
  bool valid(std::int64_t i) const { return divergent.empty() || !divergent[static_cast<std::size_t>(i)]; }
  /// f at every non-divergent terminal state, in path order.
  std::vector<double> values(const ScalarFn& f) const;
};

/// Number of steps for [s,t] at step h: round when within 1e-9, else ceil.
std::int64_t step_count(double s, double t, double h);

Ensemble simulate(const OperatorSpec& spec, double s, double t, const Vector& x, std::int64_t n,
                  const PathConfig& config, const SeedLineage& lineage);

/// replicate paths from each column of starts; path j*replicate + k starts at column j.
Ensemble simulate_from(const OperatorSpec& spec, double s, double t, const Matrix& starts, int replicate,
                       const PathConfig& config, const SeedLineage& lineage);

/// Paths carrying log-weights -int c(tau, X) dtau by left-endpoint quadrature.
Ensemble simulate_weighted(const OperatorSpec& spec, const PotentialSpec& potential, double s, double t,
                           const Vector& x, std::int64_t n, const PathConfig& config, const SeedLineage& lineage);

Ensemble simulate_weighted_from(const OperatorSpec& spec, const PotentialSpec& potential, double s, double t,
                                const Matrix& starts, int replicate, const PathConfig& config,
                                const SeedLineage& lineage);

/// States after each of the given step counts, all on the same noise. The
/// step is exactly config.step and the clock starts at t.
std::vector<Ensemble> simulate_checkpoints(const OperatorSpec& spec, double t, const Vector& x,
                                           const std::vector<std::int64_t>& checkpoints, std::int64_t n,
                                           const PathConfig& config, const SeedLineage& lineage);

/// Mean of f over the ensemble; weighted when the ensemble carries log-weights.
McEstimate apply(const Ensemble& ensemble, const ScalarFn& f);

McEstimate apply(const OperatorSpec& spec, const ScalarFn& f, double s, double t, const Vector& x,
                 std::int64_t n, const PathConfig& config, const SeedLineage& lineage);

/// Central differences at x +- h e_i with h = 1e-4 (1+|x|) on common noise.
std::vector<McEstimate> gradient_apply(const OperatorSpec& spec, const ScalarFn& f, double s, double t,
                                       const Vector& x, std::int64_t n, const PathConfig& config,
                                       const SeedLineage& lineage);

/// Per-path residual (f(X_{N-1}) - f(X_{N+1}))/(2 delta) + (A(s) f)(X_N), delta = step.
/// The returned value is |mean residual|.
McEstimate backward_derivative_check(const OperatorSpec& spec, const TestFunction& f, double s, double t,
                                     const Vector& x, std::int64_t n, const PathConfig& config,
                                     const SeedLineage& lineage);

McEstimate feynman_kac_apply(const OperatorSpec& spec, const PotentialSpec& potential, const ScalarFn& f, double s,
                             double t, const Vector& x, std::int64_t n, const PathConfig& config,
                             const SeedLineage& lineage);

struct ChapmanKolmogorov {
  McEstimate direct;
  McEstimate nested;
  /// |direct - nested| with the combined standard error.
  McEstimate residual;
};

/// G(t,s)f(x) against G(t,r)[G(r,s)f](x) with `inner` paths per outer endpoint.
ChapmanKolmogorov chapman_kolmogorov_check(const OperatorSpec& spec, const ScalarFn& f, double s, double r, double t,
                                           const Vector& x, std::int64_t n, const PathConfig& config,
                                           const SeedLineage& lineage, int inner = 16);

}  // namespace evolab

#endif  // EVOLAB_SDE_HPP
