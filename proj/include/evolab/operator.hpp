#ifndef EVOLAB_OPERATOR_HPP
#define EVOLAB_OPERATOR_HPP

#include "evolab/core.hpp"
#include "evolab/oracle.hpp"

#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace evolab {

using DriftFn = std::function<void(double, Eigen::Ref<const Vector>, Eigen::Ref<Vector>)>;
using JacobianFn = std::function<void(double, Eigen::Ref<const Vector>, Eigen::Ref<Matrix>)>;
using DiffusionFn = std::function<Matrix(double)>;

// <b(t,x),x> <= -K1 |x|^2 log|x|
struct Hyper {
  double K1;
};
// <b(t,x),x> <= -K2 |x|^2 (log|x|)^alpha, alpha > 1
struct Ultrabounded {
  double K2;
  double alpha;
};
// <b(t,x),x> <= -K3 |x|^kappa, kappa > 2
struct Ultracontractive {
  double K3;
  double kappa;
};
struct Unclassified {};

using RegimeTag = std::variant<Unclassified, Hyper, Ultrabounded, Ultracontractive>;

struct Regime {
  RegimeTag tag = Unclassified{};
  double R = 2.0;

  /// 0 unclassified, 1 supercontractive, 2 ultrabounded, 3 ultracontractive.
  int rank() const { return static_cast<int>(tag.index()); }
  std::string to_string() const;
  /// Properties implied by the tag, strongest first.
  std::vector<std::string> ladder() const;
};

/// Generator A(t) = Tr(Q(t) D^2) + <b(t,x), grad>.
struct OperatorSpec {
  std::string name;
  /// Normalized description used for content hashing.
  std::string canonical;
  int dimension = 1;
  DiffusionFn diffusion;
  bool constant_diffusion = false;
  DriftFn drift;
  /// Empty means central finite differences with h = 1e-5 (1 + |x|).
  JacobianFn drift_jacobian;
  double eta0 = 1.0;
  double Lambda = 1.0;
  double r0 = -1.0;
  Regime regime;
  double t_min = -std::numeric_limits<double>::infinity();
  double t_max = std::numeric_limits<double>::infinity();
  /// Drift grows faster than linearly; the engine tames increments by default.
  bool superlinear = false;
  /// Present when the operator is a diagonal OU process with known coefficients.
  std::optional<OUCoefficients> ou;

  Matrix Q(double t) const { return diffusion(t); }
  Vector b(double t, const Vector& x) const;
  Matrix jacobian(double t, const Vector& x) const;
  Matrix jacobian_fd(double t, const Vector& x) const;
  /// (A(t) f)(x) from the gradient and Hessian of f at x.
  double generator(double t, const Vector& x, const Vector& grad, const Matrix& hess) const;

  /// Structural invariants: eta0 <= Lambda, r0 < 0, callables present.
  void validate() const;
  std::uint64_t hash() const;
};

std::uint64_t fnv1a64(std::string_view bytes);

/// Lyapunov candidates with the bound A(t) phi <= a - gamma phi.
struct QuadraticLyapunov {
  double lambda;  // exp(lambda |x|^2)
};
struct LogPowerLyapunov {
  double lambda;  // exp(lambda |x|^2 (log |x|^2)^delta) outside B(0,R)
  double delta;
};
struct PowerExpLyapunov {
  double delta;  // exp(delta |x|^kappa)
  double kappa;
};
struct CustomLyapunov {
  std::function<double(const Vector&)> phi;
};
using LyapunovFamily = std::variant<QuadraticLyapunov, LogPowerLyapunov, PowerExpLyapunov, CustomLyapunov>;

struct LyapunovSpec {
  LyapunovFamily family;
  double a = 1.0;
  double gamma = 1.0;
  double R = 2.0;

  double phi(const Vector& x) const;
};

struct PotentialSpec {
  std::function<double(double, const Vector&)> c;
  double c0 = 0.0;
  std::string description;
  /// c does not depend on (t, x).
  std::optional<double> constant_value;

  static PotentialSpec constant(double value);
};

// Presets.
OperatorSpec make_ou(double theta, double q, int dimension = 1);
/// OU with time-dependent coefficients; theta_min = inf theta, q bounds certify ellipticity.
OperatorSpec make_ou(OUCoefficients coeffs, int dimension, double theta_min, double q_min, double q_max);
/// b = -x - |x|^{kappa-2} x, Q = q I.
OperatorSpec make_power(double kappa, int dimension = 1, double q = 1.0);
/// b = -x (1 + log(1+|x|^2)^alpha), Q = q I.
OperatorSpec make_logpower(double alpha, int dimension = 1, double q = 1.0);
/// b = -x (1 + log(1+|x|^2)), Q = q I.
OperatorSpec make_loglin(int dimension = 1, double q = 1.0);

struct PresetInfo {
  std::string name;
  std::string parameters;
  std::string regime;
  std::string description;
};
std::vector<PresetInfo> list_presets();

/// Look up a preset by name with a parameter map (missing keys take defaults).
OperatorSpec make_preset(const std::string& name, const std::vector<std::pair<std::string, double>>& params,
                         int dimension);

}  // namespace evolab

#endif  // EVOLAB_OPERATOR_HPP
