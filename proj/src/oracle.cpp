#include "evolab/oracle.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>

namespace evolab {

OUCoefficients OUCoefficients::constant_coefficients(double theta, double q) {
  if (!(theta > 0) || !(q > 0)) throw PreconditionError("OU coefficients must be positive");
  OUCoefficients c;
  c.theta = [theta](double) { return theta; };
  c.q = [q](double) { return q; };
  c.constant = true;
  return c;
}

namespace {

double simpson_step(const std::function<double(double)>& f, double a, double fa, double b, double fb,
                    double m, double fm, double whole, double tol, int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  if (depth <= 0) throw QuadratureFailure("adaptive Simpson did not converge");
  return simpson_step(f, a, fa, m, fm, lm, flm, left, tol / 2, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, tol / 2, depth - 1);
}

double moment_1d(int k, double m, double v) {
  switch (k) {
    case 0:
      return 1.0;
    case 1:
      return m;
    case 2:
      return m * m + v;
    case 3:
      return m * m * m + 3.0 * m * v;
    case 4:
      return m * m * m * m + 6.0 * m * m * v + 3.0 * v * v;
    default:
      throw UnsupportedFunction("polynomial degree above 4");
  }
}

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b, double tol,
                        int max_depth) {
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = f(a);
  const double fb = f(b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

GaussianLaw<double> ou_mean_var(const OUCoefficients& ou, double s, double t, const Vector& x) {
  if (t < s) throw PreconditionError("ou_mean_var needs t >= s");
  if (t == s) return {x, 0.0};
  if (ou.constant) {
    const double th = ou.theta(s);
    const double q = ou.q(s);
    const double dt = t - s;
    return {x * std::exp(-th * dt), q / th * -std::expm1(-2.0 * th * dt)};
  }
  // The coefficient clock runs from t down to s, so noise injected at clock r
  // is damped by the integral of theta over [s, r].
  const double total = adaptive_simpson(ou.theta, s, t);
  auto integrand = [&](double r) {
    const double damp = adaptive_simpson(ou.theta, s, r);
    return 2.0 * ou.q(r) * std::exp(-2.0 * damp);
  };
  return {x * std::exp(-total), adaptive_simpson(integrand, s, t)};
}

double evaluate(const ClosedForm& f, const Vector& y) {
  return std::visit(
      [&](const auto& g) -> double {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, ConstantForm>) {
          return g.c;
        } else if constexpr (std::is_same_v<T, PolynomialForm>) {
          double acc = 0.0;
          for (const auto& term : g.terms) {
            double p = term.coeff;
            for (std::size_t i = 0; i < term.powers.size(); ++i) p *= std::pow(y[static_cast<Eigen::Index>(i)], term.powers[i]);
            acc += p;
          }
          return acc;
        } else if constexpr (std::is_same_v<T, GaussianBumpForm>) {
          return std::exp(-g.a * (y - g.z).squaredNorm());
        } else {
          return std::cos(g.omega.dot(y) + g.phase);
        }
      },
      f);
}

template <typename Scalar>
Scalar gaussian_expectation(const ClosedForm& f, const GaussianLaw<Scalar>& law) {
  using std::cos;
  using std::exp;
  using std::sqrt;
  const Scalar v = law.var;
  return std::visit(
      [&](const auto& g) -> Scalar {
        using T = std::decay_t<decltype(g)>;
        if constexpr (std::is_same_v<T, ConstantForm>) {
          return Scalar(g.c);
        } else if constexpr (std::is_same_v<T, PolynomialForm>) {
          Scalar acc = 0;
          for (const auto& term : g.terms) {
            int degree = 0;
            for (int k : term.powers) degree += k;
            if (degree > 4) throw UnsupportedFunction("polynomial degree above 4");
            Scalar p = Scalar(term.coeff);
            for (std::size_t i = 0; i < term.powers.size(); ++i) {
              p *= moment_1d(term.powers[i], law.mean[static_cast<Eigen::Index>(i)], v);
            }
            acc += p;
          }
          return acc;
        } else if constexpr (std::is_same_v<T, GaussianBumpForm>) {
          const Scalar den = 1 + 2 * Scalar(g.a) * v;
          const Scalar d = static_cast<Scalar>(law.mean.size());
          const Scalar dist2 = (law.mean - g.z.template cast<Scalar>()).squaredNorm();
          return std::pow(den, -d / 2) * exp(-Scalar(g.a) * dist2 / den);
        } else {
          const Scalar w2 = g.omega.squaredNorm();
          return exp(-v * w2 / 2) * cos(g.omega.template cast<Scalar>().dot(law.mean) + Scalar(g.phase));
        }
      },
      f);
}

template double gaussian_expectation<double>(const ClosedForm&, const GaussianLaw<double>&);

double ou_apply(const OUCoefficients& ou, const ClosedForm& f, double s, double t, const Vector& x) {
  return gaussian_expectation(f, ou_mean_var(ou, s, t, x));
}

double ou_invariant_variance(const OUCoefficients& ou) {
  if (!ou.constant) throw NotConstantCoefficient("stationary law needs constant coefficients");
  return ou.q(0.0) / ou.theta(0.0);
}

double gauss_hermite_expectation(const std::function<double(const Vector&)>& f, const Vector& mean,
                                 double var, int order) {
  const auto d = mean.size();
  if (d > 2) throw DimensionTooHigh("Gauss-Hermite oracle supports d <= 2");
  // Golub-Welsch for the probabilists' Hermite weight exp(-u^2/2).
  Matrix jac = Matrix::Zero(order, order);
  for (int i = 1; i < order; ++i) jac(i, i - 1) = jac(i - 1, i) = std::sqrt(static_cast<double>(i));
  Eigen::SelfAdjointEigenSolver<Matrix> es(jac);
  const Vector nodes = es.eigenvalues();
  const Vector weights = es.eigenvectors().row(0).array().square();
  const double sd = std::sqrt(var);
  CompensatedSum acc;
  Vector y(d);
  if (d == 1) {
    for (int i = 0; i < order; ++i) {
      y[0] = mean[0] + sd * nodes[i];
      acc.add(weights[i] * f(y));
    }
  } else {
    for (int i = 0; i < order; ++i) {
      for (int j = 0; j < order; ++j) {
        y[0] = mean[0] + sd * nodes[i];
        y[1] = mean[1] + sd * nodes[j];
        acc.add(weights[i] * weights[j] * f(y));
      }
    }
  }
  return acc.value();
}

}  // namespace evolab
