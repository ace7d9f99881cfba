#include "evolab/hypotheses.hpp"

#include "evolab/constants.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace evolab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void track_worst(HypothesisReport& rep, double slack, double t, const Vector& x) {
  if (rep.samples == 0 || slack < rep.worst_slack) {
    rep.worst_slack = slack;
    rep.worst_t = t;
    rep.worst_x = x;
  }
}

Vector random_unit(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Vector v(d);
  do {
    for (int i = 0; i < d; ++i) v[i] = normal(rng);
  } while (v.norm() < 1e-12);
  return v / v.norm();
}

// phi = exp(G(|x|^2)); returns (G', G'') in r2.
struct RadialDerivs {
  double g1;
  double g2;
};

std::optional<RadialDerivs> radial_derivs(const LyapunovFamily& fam, double r2) {
  return std::visit(
      [&](const auto& f) -> std::optional<RadialDerivs> {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, QuadraticLyapunov>) {
          return RadialDerivs{f.lambda, 0.0};
        } else if constexpr (std::is_same_v<T, LogPowerLyapunov>) {
          const double L = std::log(r2);
          const double d = f.delta;
          const double g1 = f.lambda * (std::pow(L, d) + d * std::pow(L, d - 1.0));
          const double g2 = f.lambda * (d * std::pow(L, d - 1.0) + d * (d - 1.0) * std::pow(L, d - 2.0)) / r2;
          return RadialDerivs{g1, g2};
        } else if constexpr (std::is_same_v<T, PowerExpLyapunov>) {
          const double h = f.kappa / 2.0;
          if (r2 == 0.0) {
            if (h > 1.0) return RadialDerivs{0.0, 0.0};
            if (h == 1.0) return RadialDerivs{f.delta, 0.0};
            throw DomainError("power-exponential Lyapunov function is not smooth at 0");
          }
          return RadialDerivs{f.delta * h * std::pow(r2, h - 1.0), f.delta * h * (h - 1.0) * std::pow(r2, h - 2.0)};
        } else {
          return std::nullopt;
        }
      },
      fam);
}

// Numerical derivative of k at u.
double dk(const std::function<double(double)>& k, double u) {
  const double h = 1e-6 * (1.0 + std::abs(u));
  return (k(u + h) - k(u - h)) / (2.0 * h);
}

// Root of an increasing function on [lo, hi] by bisection.
double bisect(const std::function<double(double)>& f, double lo, double hi) {
  for (int i = 0; i < 200 && hi - lo > 1e-14 * (1.0 + std::abs(lo)); ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < 0 ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Clip g (given as k = g/y on u >= u_min) at its minimum.
ConvexProfile clip_at_minimum(std::string name, std::function<double(double)> k, double u_min) {
  auto slope = [&](double u) { return k(u) + dk(k, u); };
  double hi = u_min + 1.0;
  while (slope(hi) < 0) {
    hi = u_min + 2.0 * (hi - u_min);
    if (hi > 1e12) throw NotConvex(name + ": no minimum found");
  }
  const double u0 = slope(u_min) < 0 ? bisect(slope, u_min, hi) : u_min;
  const double k0 = k(u0);
  ConvexProfile p;
  p.name = std::move(name);
  p.h_over_y = [k, u0, k0](double u) { return u >= u0 ? k(u) : k0 * std::exp(u0 - u); };
  return p;
}

}  // namespace

HypothesisReport check_ellipticity(const OperatorSpec& spec, const std::vector<double>& time_grid,
                                   const std::vector<Vector>& directions) {
  HypothesisReport rep;
  rep.name = "ellipticity";
  rep.min_value = kInf;
  rep.max_value = -kInf;
  const double tol = 1e-10 * spec.Lambda;
  for (double t : time_grid) {
    const Matrix Q = spec.Q(t);
    if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw SymmetryViolation("diffusion matrix is not symmetric at t = " + std::to_string(t));
    }
    const Matrix Qs = 0.5 * (Q + Q.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> es(Qs);
    std::vector<Vector> dirs = directions;
    for (int i = 0; i < spec.dimension; ++i) dirs.push_back(es.eigenvectors().col(i));
    for (const Vector& xi : dirs) {
      const double rq = xi.dot(Qs * xi) / xi.squaredNorm();
      rep.min_value = std::min(rep.min_value, rq);
      rep.max_value = std::max(rep.max_value, rq);
      const double slack = std::min(rq - (spec.eta0 - tol), (spec.Lambda + tol) - rq);
      track_worst(rep, slack, t, xi);
      ++rep.samples;
    }
  }
  rep.pass = rep.samples > 0 && rep.worst_slack >= 0;
  return rep;
}

std::vector<Vector> unit_directions(int dimension, int random_count, std::uint64_t seed) {
  std::vector<Vector> out;
  for (int i = 0; i < dimension; ++i) {
    out.push_back(Vector::Unit(dimension, i));
    out.push_back(-Vector::Unit(dimension, i));
  }
  std::mt19937_64 rng(seed);
  if (dimension > 1) {
    for (int k = 0; k < random_count; ++k) out.push_back(random_unit(dimension, rng));
  }
  return out;
}

std::vector<DissipativitySample> dissipativity_samples(const OperatorSpec& spec, const std::vector<double>& times,
                                                       const std::vector<double>& radii, int directions,
                                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const int d = spec.dimension;
  std::vector<DissipativitySample> out;
  const auto dirs = unit_directions(d, directions, seed + 1);
  for (double t : times) {
    for (double r : radii) {
      for (const Vector& e : dirs) {
        // probe the axes plus one random direction per point
        out.push_back({t, r * e, e});
        out.push_back({t, r * e, random_unit(d, rng)});
      }
    }
  }
  return out;
}

std::vector<GridPoint> annulus_grid(const std::vector<double>& times, const std::vector<double>& radii,
                                    const std::vector<Vector>& directions) {
  std::vector<GridPoint> out;
  for (double t : times) {
    for (double r : radii) {
      for (const Vector& e : directions) out.push_back({t, r * e});
    }
  }
  return out;
}

HypothesisReport check_dissipativity(const OperatorSpec& spec, const std::vector<DissipativitySample>& samples,
                                     Tolerance tol) {
  HypothesisReport rep;
  rep.name = "dissipativity";
  rep.min_value = kInf;
  rep.max_value = -kInf;
  const Vector origin = Vector::Zero(spec.dimension);
  double b0 = 0.0;
  for (const auto& s : samples) b0 = std::max(b0, spec.b(s.t, origin).norm());
  double radial_slack = kInf;
  for (const auto& s : samples) {
    Matrix J;
    try {
      J = spec.jacobian(s.t, s.x);
    } catch (const DomainError&) {
      throw;
    } catch (const std::exception& e) {
      throw DomainError(std::string("drift Jacobian not evaluable: ") + e.what());
    }
    if (!J.allFinite()) throw DomainError("drift Jacobian not finite");
    const double q = s.xi.dot(J * s.xi) / s.xi.squaredNorm();
    rep.min_value = std::min(rep.min_value, q);
    rep.max_value = std::max(rep.max_value, q);
    track_worst(rep, spec.r0 + tol.at(spec.r0) - q, s.t, s.x);
    ++rep.samples;
    const double r = s.x.norm();
    const double bx = spec.b(s.t, s.x).dot(s.x);
    const double bound = b0 * r + spec.r0 * r * r;
    radial_slack = std::min(radial_slack, bound + tol.at(bound) - bx);
  }
  rep.pass = rep.samples > 0 && rep.worst_slack >= 0 && radial_slack >= 0;
  rep.detail = "max quotient " + std::to_string(rep.max_value) + ", radial slack " + std::to_string(radial_slack);
  return rep;
}

double lyapunov_generator(const OperatorSpec& spec, const LyapunovSpec& lyap, double t, const Vector& x) {
  const double r2 = x.squaredNorm();
  if (std::holds_alternative<LogPowerLyapunov>(lyap.family) && r2 <= lyap.R * lyap.R) {
    throw DomainError("log-power Lyapunov function is defined for |x| > R");
  }
  const Matrix Q = spec.Q(t);
  const auto rd = radial_derivs(lyap.family, r2);
  if (rd) {
    const double phi = lyap.phi(x);
    const double qxx = x.dot(Q * x);
    const double psi = 4.0 * (rd->g1 * rd->g1 + rd->g2) * qxx + 2.0 * rd->g1 * Q.trace() +
                       2.0 * rd->g1 * spec.b(t, x).dot(x);
    return phi * psi;
  }
  const int d = spec.dimension;
  const double hg = 1e-5 * (1.0 + x.norm());
  const double hh = 1e-4 * (1.0 + x.norm());
  Vector grad(d);
  Matrix hess(d, d);
  Vector y = x;
  const double f0 = lyap.phi(x);
  for (int i = 0; i < d; ++i) {
    y[i] = x[i] + hg;
    const double fp = lyap.phi(y);
    y[i] = x[i] - hg;
    const double fm = lyap.phi(y);
    y[i] = x[i];
    grad[i] = (fp - fm) / (2.0 * hg);
    y[i] = x[i] + hh;
    const double hp = lyap.phi(y);
    y[i] = x[i] - hh;
    const double hm = lyap.phi(y);
    y[i] = x[i];
    hess(i, i) = (hp - 2.0 * f0 + hm) / (hh * hh);
    for (int j = 0; j < i; ++j) {
      double acc = 0.0;
      for (int si : {1, -1}) {
        for (int sj : {1, -1}) {
          y[i] = x[i] + si * hh;
          y[j] = x[j] + sj * hh;
          acc += si * sj * lyap.phi(y);
        }
      }
      y[i] = x[i];
      y[j] = x[j];
      hess(i, j) = hess(j, i) = acc / (4.0 * hh * hh);
    }
  }
  return spec.generator(t, x, grad, hess);
}

HypothesisReport check_lyapunov(const OperatorSpec& spec, const LyapunovSpec& lyap,
                                const std::vector<GridPoint>& grid, Tolerance tol) {
  HypothesisReport rep;
  rep.name = "lyapunov";
  rep.min_value = kInf;
  rep.max_value = -kInf;
  for (const auto& g : grid) {
    const double phi = lyap.phi(g.x);
    if (!(phi > 0)) throw DomainError("Lyapunov function must be positive");
    const double Aphi = lyapunov_generator(spec, lyap, g.t, g.x);
    const double bound = lyap.a - lyap.gamma * phi;
    // compare relative to phi so that huge phi values stay finite
    const double scale = std::max(std::abs(Aphi), std::abs(bound));
    double slack;
    if (std::isfinite(phi) && std::isfinite(Aphi)) {
      slack = bound + tol.at(scale) - Aphi;
    } else {
      throw DomainError("Lyapunov function overflows on the grid");
    }
    rep.min_value = std::min(rep.min_value, Aphi);
    rep.max_value = std::max(rep.max_value, Aphi);
    track_worst(rep, slack, g.t, g.x);
    ++rep.samples;
  }
  rep.pass = rep.samples > 0 && rep.worst_slack >= 0;
  return rep;
}

ConvexProfile linear_profile() {
  ConvexProfile p;
  p.name = "linear";
  p.h_over_y = [](double) { return 1.0; };
  return p;
}

ConvexProfile log_drift_profile(double K2, double alpha, double lambda, double Lambda, int dimension, double R0) {
  if (!(alpha > 1) || !(K2 > 0) || !(lambda > 0) || !(R0 > 1)) {
    throw PreconditionError("log-drift profile needs alpha > 1, K2 > 0, lambda > 0, R0 > 1");
  }
  // C_alpha = max over y >= R0 of y^2 (2 lambda Lambda - (K2/2)(log y)^alpha)
  auto F = [=](double y) { return y * y * (2.0 * lambda * Lambda - 0.5 * K2 * std::pow(std::log(y), alpha)); };
  double C_alpha = std::max(0.0, F(R0));
  const double L_hi = std::pow(4.0 * lambda * Lambda / K2, 1.0 / alpha);
  if (L_hi > std::log(R0)) {
    auto dF = [=](double L) {
      return -(4.0 * lambda * Lambda - K2 * std::pow(L, alpha) - 0.5 * K2 * alpha * std::pow(L, alpha - 1.0));
    };
    const double L = dF(std::log(R0)) < 0 ? bisect(dF, std::log(R0), L_hi) : std::log(R0);
    C_alpha = std::max(C_alpha, F(std::exp(L)));
  }
  const double shift = 2.0 * lambda * C_alpha + 2.0 * lambda * Lambda * dimension;
  auto k = [=](double u) {
    const double v = std::max(u / lambda, 1.0);
    return K2 * std::pow(2.0, -alpha) * u * std::pow(std::log(v), alpha) - shift;
  };
  return clip_at_minimum("log-drift", k, lambda);
}

ConvexProfile power_drift_profile(double K3, double kappa, double lambda, double Lambda, int dimension) {
  if (!(kappa > 2) || !(K3 > 0) || !(lambda > 0)) {
    throw PreconditionError("power-drift profile needs kappa > 2, K3 > 0, lambda > 0");
  }
  const double Ck = constants::c_kappa(kappa, Lambda, K3);
  const double shift = 2.0 * std::pow(lambda, kappa * kappa / (2.0 * (kappa - 2.0))) * Ck +
                       2.0 * std::pow(lambda, kappa / 2.0) * Lambda * dimension;
  const double pre = std::pow(lambda, 1.0 - kappa / 2.0);
  auto k = [=](double u) { return pre * (K3 * std::pow(std::max(u, 0.0), kappa / 2.0) - shift); };
  ConvexProfile p = clip_at_minimum("power-drift", k, 0.0);
  p.tail_from = constants::log_p_lambda(kappa, K3, Lambda, dimension, lambda);
  p.tail_bound = [=](double logp) { return constants::power_tail_bound(kappa, K3, lambda, logp); };
  return p;
}

HypothesisReport check_convex_lyapunov(const OperatorSpec& spec, double lambda, const ConvexProfile& h,
                                       double R, const std::vector<GridPoint>& grid, Tolerance tol) {
  // Convexity and monotonicity on a geometric grid in y = e^u.
  const double du = 0.05;
  const double ratio = std::exp(du);
  double prev_slope = -kInf;
  double prev_k = h.h_over_y(-5.0);
  for (double u = -5.0 + du; u <= 60.0; u += du) {
    const double k = h.h_over_y(u);
    const double slope = (ratio * k - prev_k) / (ratio - 1.0);
    const double scale = std::max(1.0, std::abs(slope));
    if (slope < -tol.at(scale)) throw NotConvex(h.name + ": not increasing near log y = " + std::to_string(u));
    if (slope < prev_slope - 1e-6 * scale) {
      throw NotConvex(h.name + ": not convex near log y = " + std::to_string(u));
    }
    prev_slope = slope;
    prev_k = k;
  }
  // Tail integral of 1/h: int dy/h(y) = int du / k(u); per-decade pieces in u.
  std::vector<double> decade;
  for (int j = 1; j <= 12; ++j) {
    const double lo = std::log(std::pow(10.0, j));
    const double hi = std::log(std::pow(10.0, j + 1));
    auto f = [&](double w) {
      const double u = std::exp(w);
      const double k = h.h_over_y(u);
      if (!(k > 0)) throw TailNotIntegrable(h.name + ": h is not positive at infinity");
      return u / k;
    };
    decade.push_back(adaptive_simpson(f, lo, hi, 1e-9 * std::max(1.0, f(lo))));
  }
  // slope of log I_j against log j over the upper half
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int j = 6; j <= 12; ++j) {
    const double X = std::log(static_cast<double>(j));
    const double Y = std::log(decade[j - 1]);
    sx += X;
    sy += Y;
    sxx += X * X;
    sxy += X * Y;
    ++m;
  }
  const double decay = -(m * sxy - sx * sy) / (m * sxx - sx * sx);
  if (!(decay > 1.1)) {
    throw TailNotIntegrable(h.name + ": 1/h decays with exponent " + std::to_string(decay));
  }

  HypothesisReport rep;
  rep.name = "convex-lyapunov";
  rep.min_value = kInf;
  rep.max_value = -kInf;
  for (const auto& g : grid) {
    const double r2 = g.x.squaredNorm();
    if (r2 < R * R) continue;
    const Matrix Q = spec.Q(g.t);
    const double psi = 2.0 * lambda * Q.trace() + 4.0 * lambda * lambda * g.x.dot(Q * g.x) +
                       2.0 * lambda * spec.b(g.t, g.x).dot(g.x);
    const double bound = -h.h_over_y(lambda * r2);
    const double slack = bound + tol.at(std::max(std::abs(psi), std::abs(bound))) - psi;
    rep.min_value = std::min(rep.min_value, psi - bound);
    rep.max_value = std::max(rep.max_value, psi - bound);
    track_worst(rep, slack, g.t, g.x);
    ++rep.samples;
  }
  rep.pass = rep.samples > 0 && rep.worst_slack >= 0;
  rep.detail = "tail decay exponent " + std::to_string(decay);
  if (h.tail_bound) {
    // tail integral from log P against its closed-form bound
    const double start = std::max(h.tail_from, 1e-12);
    auto f = [&](double w) { return std::exp(w) / h.h_over_y(std::exp(w)); };
    double tail = 0.0;
    double lo = std::log(start);
    const double top = std::log(1e12);
    while (lo < top) {
      const double hi = std::min(lo + 1.0, top);
      tail += adaptive_simpson(f, lo, hi, 1e-12);
      lo = hi;
    }
    const double bound = h.tail_bound(start);
    rep.detail += ", tail " + std::to_string(tail) + " <= " + std::to_string(bound);
    if (tail > bound * (1.0 + 1e-9)) rep.pass = false;
  }
  return rep;
}

RegimeClassification classify_regime(const OperatorSpec& spec, double R, const std::vector<double>& times,
                                     ClassifierKnobs knobs) {
  if (!(R > 1)) throw PreconditionError("classifier radius must exceed 1");
  const auto dirs = unit_directions(spec.dimension, knobs.random_directions, 23);
  const int n = knobs.radii;
  std::vector<double> r(n), w(n);
  for (int i = 0; i < n; ++i) {
    r[i] = R * std::pow(knobs.radius_span, static_cast<double>(i) / (n - 1));
    double worst = kInf;
    for (double t : times) {
      for (const Vector& e : dirs) {
        const Vector x = r[i] * e;
        worst = std::min(worst, -spec.b(t, x).dot(x));
      }
    }
    w[i] = worst;
  }
  auto snap = [&](double v) {
    const double s = std::round(2.0 * v) / 2.0;
    return std::abs(v - s) <= knobs.snap ? s : v;
  };
  RegimeClassification out;
  out.regime.R = R;
  const int half = n / 2;
  bool positive = true;
  for (int i = 0; i < n; ++i) positive = positive && w[i] > 0;
  if (!positive) {
    out.regime.tag = Unclassified{};
    return out;
  }
  double kappa = kInf;
  for (int i = half; i + 1 < n; ++i) {
    kappa = std::min(kappa, (std::log(w[i + 1]) - std::log(w[i])) / (std::log(r[i + 1]) - std::log(r[i])));
  }
  out.kappa_hat = kappa;
  kappa = snap(kappa);
  if (kappa >= knobs.kappa_threshold) {
    double K3 = kInf;
    for (int i = 0; i < n; ++i) K3 = std::min(K3, w[i] / std::pow(r[i], kappa));
    if (K3 > 0) {
      out.regime.tag = Ultracontractive{K3, kappa};
      out.ladder = out.regime.ladder();
      return out;
    }
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int m = 0;
  for (int i = half; i < n; ++i) {
    const double X = std::log(std::log(r[i]));
    const double Y = std::log(w[i] / (r[i] * r[i]));
    sx += X;
    sy += Y;
    sxx += X * X;
    sxy += X * Y;
    ++m;
  }
  const double alpha = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  out.alpha_hat = alpha;
  if (alpha > knobs.alpha_ultra_threshold) {
    const double a = snap(alpha);
    double K2 = kInf;
    for (int i = 0; i < n; ++i) K2 = std::min(K2, w[i] / (r[i] * r[i] * std::pow(std::log(r[i]), a)));
    if (K2 > 0) {
      out.regime.tag = Ultrabounded{K2, a};
      out.ladder = out.regime.ladder();
      return out;
    }
  }
  if (alpha >= knobs.alpha_hyper_threshold) {
    double K1 = kInf;
    for (int i = 0; i < n; ++i) K1 = std::min(K1, w[i] / (r[i] * r[i] * std::log(r[i])));
    if (K1 > 0) {
      out.regime.tag = Hyper{K1};
      out.ladder = out.regime.ladder();
      return out;
    }
  }
  out.regime.tag = Unclassified{};
  return out;
}

HypothesisReport check_potential(const PotentialSpec& potential, const std::vector<GridPoint>& grid, Tolerance tol) {
  HypothesisReport rep;
  rep.name = "potential";
  rep.min_value = kInf;
  rep.max_value = -kInf;
  for (const auto& g : grid) {
    const double c = potential.c(g.t, g.x);
    rep.min_value = std::min(rep.min_value, c);
    rep.max_value = std::max(rep.max_value, c);
    track_worst(rep, c - potential.c0 + tol.at(potential.c0), g.t, g.x);
    ++rep.samples;
  }
  rep.pass = rep.samples > 0 && rep.worst_slack >= 0;
  return rep;
}

}  // namespace evolab
