#ifndef EVOLAB_ORACLE_HPP
#define EVOLAB_ORACLE_HPP

// Closed-form reference for the diagonal Ornstein-Uhlenbeck operator
// b(t,x) = -theta(t) x, Q(t) = q(t) I.

#include "evolab/core.hpp"

#include <functional>
#include <optional>
#include <variant>

namespace evolab {

struct OUCoefficients {
  std::function<double(double)> theta;
  std::function<double(double)> q;
  bool constant = false;

  static OUCoefficients constant_coefficients(double theta, double q);
};

/// Law N(mean, var I) of the terminal state.
template <typename Scalar = double>
struct GaussianLaw {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> mean;
  Scalar var;
};

// Functions whose Gaussian expectation is known exactly.
struct ConstantForm {
  double c;
};
/// sum_k coeff_k * prod_i y_i^{powers_k[i]}, each power at most 4.
struct PolynomialForm {
  struct Term {
    double coeff;
    std::vector<int> powers;
  };
  std::vector<Term> terms;
};
/// exp(-a |y - z|^2)
struct GaussianBumpForm {
  double a;
  Vector z;
};
/// cos(<omega, y> + phase)
struct CosineForm {
  Vector omega;
  double phase;
};
using ClosedForm = std::variant<ConstantForm, PolynomialForm, GaussianBumpForm, CosineForm>;

double evaluate(const ClosedForm& f, const Vector& y);

/// Mean x*exp(-int theta) and per-coordinate variance of G(t,s) started at x.
/// Time-dependent coefficients use adaptive Simpson with tolerance 1e-10.
GaussianLaw<double> ou_mean_var(const OUCoefficients& ou, double s, double t, const Vector& x);

/// Exact E f(Y), Y ~ N(mean, var I), for f in the closed-form class.
template <typename Scalar>
Scalar gaussian_expectation(const ClosedForm& f, const GaussianLaw<Scalar>& law);

double ou_apply(const OUCoefficients& ou, const ClosedForm& f, double s, double t, const Vector& x);

/// Stationary law N(0, q/theta); constant coefficients only.
double ou_invariant_variance(const OUCoefficients& ou);

struct ExactMoment {
  double value;
  bool divergent;
};

/// E exp(lambda |Y|^power) for Y ~ N(0, sigma2 I_d). power 2 any d; power 1 needs d = 1.
template <typename Scalar>
ExactMoment ou_gauss_exp_moment(Scalar sigma2, Scalar lambda, int power, int dimension = 1) {
  using std::erfc;
  using std::exp;
  using std::pow;
  using std::sqrt;
  if (!(sigma2 > 0)) throw PreconditionError("variance must be positive");
  if (lambda == 0) return {1.0, false};
  if (power == 2) {
    const Scalar z = 1 - 2 * lambda * sigma2;
    if (!(z > 0)) return {std::numeric_limits<double>::infinity(), true};
    return {static_cast<double>(pow(z, -Scalar(dimension) / 2)), false};
  }
  if (power == 1) {
    if (dimension != 1) throw UnsupportedFunction("first-power exponential moment is one-dimensional");
    // 2 e^{l^2 s^2/2} Phi(l s), Phi(u) = erfc(-u/sqrt 2)/2
    const Scalar sd = sqrt(sigma2);
    return {static_cast<double>(exp(lambda * lambda * sigma2 / 2) * erfc(-lambda * sd / sqrt(Scalar(2)))), false};
  }
  throw UnsupportedFunction("power must be 1 or 2");
}

/// Gauss-Hermite expectation of an arbitrary f under N(mean, var I), d <= 2.
double gauss_hermite_expectation(const std::function<double(const Vector&)>& f, const Vector& mean,
                                 double var, int order = 64);

/// Adaptive Simpson on [a,b]; throws QuadratureFailure past the depth limit.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol = 1e-10,
                        int max_depth = 48);

}  // namespace evolab

#endif  // EVOLAB_ORACLE_HPP
