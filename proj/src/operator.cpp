#include "evolab/operator.hpp"

#include <cstdio>

namespace evolab {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string Regime::to_string() const {
  return std::visit(
      [&](const auto& r) -> std::string {
        using T = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<T, Hyper>) {
          return "Hyper(K1=" + fmt(r.K1) + ", R=" + fmt(R) + ")";
        } else if constexpr (std::is_same_v<T, Ultrabounded>) {
          return "Ultrabounded(K2=" + fmt(r.K2) + ", alpha=" + fmt(r.alpha) + ", R=" + fmt(R) + ")";
        } else if constexpr (std::is_same_v<T, Ultracontractive>) {
          return "Ultracontractive(K3=" + fmt(r.K3) + ", kappa=" + fmt(r.kappa) + ", R=" + fmt(R) + ")";
        } else {
          return "Unclassified";
        }
      },
      tag);
}

std::vector<std::string> Regime::ladder() const {
  static const char* names[] = {"ultracontractive", "ultrabounded", "supercontractive"};
  std::vector<std::string> out;
  for (int r = rank(); r >= 1; --r) out.emplace_back(names[3 - r]);
  return out;
}

Vector OperatorSpec::b(double t, const Vector& x) const {
  Vector out(dimension);
  drift(t, x, out);
  return out;
}

Matrix OperatorSpec::jacobian_fd(double t, const Vector& x) const {
  const double h = 1e-5 * (1.0 + x.norm());
  Matrix J(dimension, dimension);
  Vector xp = x;
  Vector bp(dimension), bm(dimension);
  for (int j = 0; j < dimension; ++j) {
    xp[j] = x[j] + h;
    drift(t, xp, bp);
    xp[j] = x[j] - h;
    drift(t, xp, bm);
    xp[j] = x[j];
    J.col(j) = (bp - bm) / (2.0 * h);
  }
  return J;
}

Matrix OperatorSpec::jacobian(double t, const Vector& x) const {
  if (!drift_jacobian) return jacobian_fd(t, x);
  Matrix J(dimension, dimension);
  drift_jacobian(t, x, J);
  return J;
}

double OperatorSpec::generator(double t, const Vector& x, const Vector& grad, const Matrix& hess) const {
  return (Q(t).cwiseProduct(hess)).sum() + b(t, x).dot(grad);
}

void OperatorSpec::validate() const {
  if (dimension < 1) throw ConfigError("dimension must be positive");
  if (!diffusion || !drift) throw ConfigError("operator needs diffusion and drift");
  if (!(eta0 > 0) || !(Lambda >= eta0)) throw ConfigError("need 0 < eta0 <= Lambda");
  if (!(r0 < 0)) throw ConfigError("dissipativity constant r0 must be negative");
  if (!(t_min <= t_max)) throw ConfigError("empty time window");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t OperatorSpec::hash() const { return fnv1a64(canonical.empty() ? name : canonical); }

double LyapunovSpec::phi(const Vector& x) const {
  const double r2 = x.squaredNorm();
  return std::visit(
      [&](const auto& f) -> double {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, QuadraticLyapunov>) {
          return std::exp(f.lambda * r2);
        } else if constexpr (std::is_same_v<T, LogPowerLyapunov>) {
          if (r2 <= R * R) throw DomainError("log-power Lyapunov function is defined for |x| > R");
          return std::exp(f.lambda * r2 * std::pow(std::log(r2), f.delta));
        } else if constexpr (std::is_same_v<T, PowerExpLyapunov>) {
          return std::exp(f.delta * std::pow(r2, f.kappa / 2));
        } else {
          return f.phi(x);
        }
      },
      family);
}

PotentialSpec PotentialSpec::constant(double value) {
  PotentialSpec p;
  p.c = [value](double, const Vector&) { return value; };
  p.c0 = value;
  p.constant_value = value;
  p.description = "c = " + fmt(value);
  return p;
}

}  // namespace evolab
