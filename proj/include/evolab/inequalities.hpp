#ifndef EVOLAB_INEQUALITIES_HPP
#define EVOLAB_INEQUALITIES_HPP

#include "evolab/constants.hpp"
#include "evolab/families.hpp"
#include "evolab/kde.hpp"
#include "evolab/measures.hpp"

#include <optional>
#include <string>
#include <vector>

namespace evolab {

enum class Verdict { Pass, Fail, Inconclusive };
std::string to_string(Verdict v);

struct InequalityParams {
  std::optional<double> p, q, eps, lambda, delta, s, t;
  std::optional<Vector> x, y;
};

struct InequalityReport {
  std::string name;
  InequalityParams params;
  McEstimate lhs;
  McEstimate rhs;
  /// rhs - lhs
  double margin = 0.0;
  /// Standard error of the margin (paired influence when available).
  double margin_stderr = 0.0;
  Verdict verdict = Verdict::Pass;
  std::uint64_t seed = 0;
  std::vector<std::string> notes;
};

/// 3-sigma rule on the margin rhs - lhs.
///   inconclusive: |margin| < 3 se and se > 0.1 |rhs|
///   pass:         margin + 3 se >= -1e-12 max(|lhs|, |rhs|)
///   fail:         otherwise
/// se is margin_stderr when given, else sqrt(lhs.stderr^2 + rhs.stderr^2).
Verdict decide(const McEstimate& lhs, const McEstimate& rhs, std::optional<double> margin_stderr = std::nullopt);

InequalityReport make_report(std::string name, InequalityParams params, const McEstimate& lhs, const McEstimate& rhs,
                             std::uint64_t seed, std::optional<double> margin_stderr = std::nullopt);

// Pointwise checks at a start point.

/// |grad G(t,s) f (x)|^p <= e^{p r0 (t-s)} G(t,s)|grad f|^p (x)
InequalityReport gradient_estimate_check(const OperatorSpec& spec, const TestFunction& f, double p, double s, double t,
                                         const Vector& x, std::int64_t n, const PathConfig& config,
                                         const SeedLineage& lineage);

/// G(|f|^p log|f|^p) <= c G(|f|^{p-2}|grad f|^2) + G|f|^p log G|f|^p, c = p^2 Lambda/|r0| (1 - e^{2 r0 (t-s)})
InequalityReport kernel_lsi_check(const OperatorSpec& spec, const TestFunction& f, double p, double s, double t,
                                  const Vector& x, std::int64_t n, const PathConfig& config,
                                  const SeedLineage& lineage);

/// Same check on a given ensemble from x over [s, t].
InequalityReport kernel_lsi_check(const OperatorSpec& spec, const Ensemble& from_x, const TestFunction& f, double p,
                                  const Vector& x);

/// |G f(x)|^p <= G|f|^p(y) exp(p|x-y|^2 / (4 (p-1) eta0 (t-s))), common noise at x and y.
InequalityReport harnack_check(const OperatorSpec& spec, const TestFunction& f, double p, double s, double t,
                               const Vector& x, const Vector& y, std::int64_t n, const PathConfig& config,
                               const SeedLineage& lineage);

/// Same check on given ensembles from x and y; path i of both must share its noise.
InequalityReport harnack_check(const OperatorSpec& spec, const Ensemble& from_x, const Ensemble& from_y,
                               const TestFunction& f, double p, const Vector& x, const Vector& y);

/// Pointwise G_c f <= e^{-c0 (t-s)} G f on common noise.
InequalityReport potential_contraction_check(const OperatorSpec& spec, const PotentialSpec& potential,
                                             const TestFunction& f, double s, double t, const Vector& x,
                                             std::int64_t n, const PathConfig& config, const SeedLineage& lineage);

// Checks against the evolution system of measures.

/// Budget for measure-based checks. mu_s norms use `particles`; norms of
/// G(t,s)f in L^q(mu_t) use `outer` mu_t particles with `inner` paths each.
struct NormBudget {
  std::int64_t particles = 20000;
  std::int64_t outer = 1000;
  int inner = 256;
  /// 0 means 10/|r0|.
  double burn_in = 0.0;
  PathConfig config = {.step = 1e-2};
  /// Family members whose ||f|| on mu_s has relative stderr above this are dropped.
  double max_relative_stderr = 0.2;
};

/// int f^2 log(|f|/||f||_2) dmu <= eps ||grad f||_2^2 + beta ||f||_2^2
InequalityReport measure_lsi_check(const EmpiricalMeasure& measure, const TestFunction& f, double eps, double beta);

using SuperLsiConstants = constants::SuperLsi<double>;
SuperLsiConstants super_lsi_constants(double p, double q, double t, double s, double norm_bound, double Lambda,
                                      double r0);

/// G(t,s) f evaluated at each mu_t particle for every family member:
/// values(k, j) = estimate of G(t,s) f_k at particle j.
struct NestedValues {
  EmpiricalMeasure mu_t;
  Matrix values;
};
NestedValues nested_apply(const OperatorSpec& spec, const TestFunctionFamily& family, double s, double t,
                          const NormBudget& budget, const SeedLineage& lineage);

/// ||G(t,s) f||_{q(t), mu_t} <= e^{2 beta (1/p - 1/q(t))} ||f||_{p, mu_s}, q(t) = e^{2 eta0 (t-s)/eps}(p-1)+1.
/// One report per family member.
std::vector<InequalityReport> hypercontractivity_recursion_check(const OperatorSpec& spec,
                                                                 const TestFunctionFamily& family, double p,
                                                                 double eps, double beta, double s, double t,
                                                                 const NormBudget& budget,
                                                                 const SeedLineage& lineage);

/// max_f ||G f||^q_{q,mu_t} / ||f||^q_{p,mu_s} <= C_{p,q}(t-s).
/// Throws ExpMomentDiverged when the weight exp(lambda0 |x|^2) is not integrable.
InequalityReport supercontractivity_norm_bound(const OperatorSpec& spec, const TestFunctionFamily& family, double p,
                                               double q, double s, double t, std::optional<double> R_half_mass,
                                               const NormBudget& budget, const SeedLineage& lineage);

enum class MSupplier { Empirical, Analytic };

/// max over family and x_grid of |G f(x)| / ||f||_{2,mu_s} <= C_{2,inf}(t-s).
InequalityReport ultrabounded_bound_check(const OperatorSpec& spec, const TestFunctionFamily& family, double s,
                                          double t, const std::vector<Vector>& x_grid, MSupplier supplier,
                                          std::int64_t n, const NormBudget& budget, const SeedLineage& lineage);

/// max_f ||G f||_{2,mu_t} / ||f||_{1,mu_s} <= exp(C / (2 (t-s)^{kappa/(kappa-2)})) with C frozen.
InequalityReport l1_l2_check(const OperatorSpec& spec, const TestFunctionFamily& family, double s, double t,
                             double C, const NormBudget& budget, const SeedLineage& lineage);

enum class KernelMode {
  /// density of the transition law in dy
  Lebesgue,
  /// density of the transition law with respect to mu_s
  MuRelative
};

struct HeatKernelOptions {
  KernelMode mode = KernelMode::MuRelative;
  std::int64_t n = 200000;
  KdeOptions kde;
};

/// Largest kernel value over x_grid and the query grid <= exp(C/(t-s)^{kappa/(kappa-2)}).
InequalityReport heat_kernel_sup_check(const OperatorSpec& spec, double s, double t, const std::vector<Vector>& x_grid,
                                       double C, const HeatKernelOptions& options, const NormBudget& budget,
                                       const SeedLineage& lineage);

/// Kernel sup over x_grid for one gap; shared by the fit and the check.
struct KernelSup {
  double delta = 0.0;
  double sup = 0.0;
  Vector argsup_x;
  Vector argsup_y;
  bool positive = true;
  bool bias_caveat = false;
};
KernelSup kernel_sup(const OperatorSpec& spec, double s, double t, const std::vector<Vector>& x_grid,
                     const HeatKernelOptions& options, const EmpiricalMeasure* mu_s, const SeedLineage& lineage);

struct BlowupFit {
  /// fitted exponent of log sup ~ C / Delta^slope
  double slope = 0.0;
  double intercept = 0.0;
  double C = 0.0;
  double target = 0.0;
  std::vector<double> deltas;
  std::vector<double> sups;
  std::vector<std::string> notes;
};

/// Least squares of log log sup against log(1/Delta). Needs at least 5
/// points with sup > 1; otherwise FitIllConditioned.
BlowupFit fit_blowup(const std::vector<double>& deltas, const std::vector<double>& sups);

BlowupFit blowup_exponent_fit(const OperatorSpec& spec, const std::vector<double>& delta_grid, double s,
                              const std::vector<Vector>& x_grid, const HeatKernelOptions& options,
                              const NormBudget& budget, const SeedLineage& lineage);

struct BetaProfile {
  std::vector<double> eps;
  std::vector<double> beta;
  bool nonincreasing = true;
  /// slope of log beta against log(1/eps) over eps with beta > 0
  double tail_exponent = 0.0;
  double target = 0.0;
  /// analytic c1 for the supplied delta
  double c1 = 0.0;
  std::vector<std::string> notes;
};

/// beta(eps) = max_f (LSI lhs - eps ||grad f||^2)/||f||^2, clipped at 0.
BetaProfile beta_profile(const OperatorSpec& spec, const EmpiricalMeasure& measure, const std::vector<double>& eps_grid,
                         const TestFunctionFamily& family, double delta = 1.0);

using MtildeBound = constants::MtildeParts<double>;
MtildeBound mtilde_bound(double kappa, double K3, double Lambda, int dimension, double delta, double lambda);

struct UniformIntegrability {
  std::vector<double> r;
  /// sup over the normalized family of int_{|Gf| >= r} |Gf|^2 dmu_t
  std::vector<double> tail;
  std::vector<double> envelope;
  bool nonincreasing = true;
  std::vector<InequalityReport> reports;
};

/// Tail of |G f|^2 under mu_t against (C/r) ||exp(2 lambda0 |x|^2)||_1^{1/2}, C = 2 e^{R^2/(eta0 (t-s))}, lambda0 = 1/(eta0 (t-s)).
UniformIntegrability uniform_integrability_check(const OperatorSpec& spec, const TestFunctionFamily& family, double s,
                                                 double t, const std::vector<double>& r_grid,
                                                 const NormBudget& budget, const SeedLineage& lineage);

/// int G_c f dmu_t <= int f dmu_s for f >= 0 and c0 >= 0.
InequalityReport potential_subinvariance_check(const OperatorSpec& spec, const PotentialSpec& potential,
                                               const TestFunction& f, double s, double t, const NormBudget& budget,
                                               const SeedLineage& lineage);

/// Ultracontractive constants (K3, kappa) or RegimeMismatch.
Ultracontractive require_ultracontractive(const OperatorSpec& spec, const std::string& check);

}  // namespace evolab

#endif  // EVOLAB_INEQUALITIES_HPP
