#include "evolab/measures.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace evolab {

std::vector<double> EmpiricalMeasure::values(const ScalarFn& f) const {
  std::vector<double> out(static_cast<std::size_t>(size()));
  Vector y(dimension());
  for (std::int64_t i = 0; i < size(); ++i) {
    y = particles.col(i);
    out[static_cast<std::size_t>(i)] = f(y);
  }
  return out;
}

double default_burn_in(const OperatorSpec& spec) { return 10.0 / std::abs(spec.r0); }

EmpiricalMeasure estimate_measure(const OperatorSpec& spec, double t, double burn_in, std::int64_t n,
                                  const PathConfig& config, const SeedLineage& lineage) {
  return estimate_measure(spec, t, burn_in, n, config, lineage, Vector::Zero(spec.dimension));
}

EmpiricalMeasure estimate_measure(const OperatorSpec& spec, double t, double burn_in, std::int64_t n,
                                  const PathConfig& config, const SeedLineage& lineage, const Vector& start) {
  if (!(burn_in > 0)) throw PreconditionError("burn-in must be positive");
  if (n < 2) throw PreconditionError("need at least two particles");
  const Ensemble e = simulate(spec, t, t + burn_in, start, n, config, lineage);
  EmpiricalMeasure m;
  m.time_tag = t;
  m.burn_in = burn_in;
  m.lineage = lineage;
  m.start = start;
  m.coupling_bias = std::exp(spec.r0 * burn_in) * start.norm();
  m.step = e.step;
  if (e.divergent_count == 0) {
    m.particles = e.states;
  } else {
    m.particles.resize(spec.dimension, n - e.divergent_count);
    Eigen::Index k = 0;
    for (std::int64_t i = 0; i < n; ++i)
      if (e.valid(i)) m.particles.col(k++) = e.states.col(i);
  }
  return m;
}

McEstimate integrate(const EmpiricalMeasure& measure, const ScalarFn& f) {
  const auto v = measure.values(f);
  return estimate_mean(v);
}

InvarianceResidual invariance_residual(const OperatorSpec& spec, const ScalarFn& f, double s, double t,
                                       std::int64_t n, const PathConfig& config, const SeedLineage& lineage,
                                       double burn_in) {
  return invariance_residuals(spec, {f}, s, t, n, config, lineage, burn_in).front();
}

std::vector<InvarianceResidual> invariance_residuals(const OperatorSpec& spec, const std::vector<ScalarFn>& fs,
                                                     double s, double t, std::int64_t n, const PathConfig& config,
                                                     const SeedLineage& lineage, double burn_in) {
  if (!(t >= s)) throw PreconditionError("need t >= s");
  const double T = burn_in > 0 ? burn_in : default_burn_in(spec);
  const EmpiricalMeasure mu_t = estimate_measure(spec, t, T, n, config, lineage.derive(1));
  const EmpiricalMeasure mu_s = estimate_measure(spec, s, T, n, config, lineage.derive(2));
  std::optional<Ensemble> moved;
  if (t > s) moved = simulate_from(spec, s, t, mu_t.particles, 1, config, lineage.derive(3));
  std::vector<InvarianceResidual> res;
  for (const auto& f : fs) {
    InvarianceResidual out;
    out.lhs = moved ? evolab::apply(*moved, f) : integrate(mu_t, f);
    out.rhs = integrate(mu_s, f);
    out.residual.value = std::abs(out.lhs.value - out.rhs.value);
    out.residual.stderr = std::hypot(out.lhs.stderr, out.rhs.stderr);
    out.residual.n = std::min(out.lhs.n, out.rhs.n);
    out.pass = out.residual.value == 0.0 || out.residual.value < 3.0 * out.residual.stderr;
    res.push_back(out);
  }
  return res;
}

McEstimate lp_norm(const EmpiricalMeasure& measure, const ScalarFn& f, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw PreconditionError("need p in [1, inf)");
  std::vector<double> v = measure.values(f);
  for (double& x : v) x = std::pow(std::abs(x), p);
  const McEstimate m = estimate_mean(v);
  McEstimate out;
  out.n = m.n;
  out.value = std::pow(m.value, 1.0 / p);
  out.stderr = m.value > 0 ? out.value / (p * m.value) * m.stderr : 0.0;
  return out;
}

namespace {

// exp(ref) * mean(exp(v - ref)) over v[0..m)
struct LogMean {
  double log_value;
  McEstimate scaled;
  double ref;
};

LogMean log_mean_exp(const std::vector<double>& v, std::size_t m) {
  const double ref = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(m));
  std::vector<double> w(m);
  for (std::size_t i = 0; i < m; ++i) w[i] = std::exp(v[i] - ref);
  const McEstimate e = estimate_mean(w);
  return {ref + std::log(e.value), e, ref};
}

}  // namespace

ExpMoment exp_moment(const EmpiricalMeasure& measure, double lambda, int power, const ExpMomentOptions& options) {
  if (!(lambda > 0)) throw PreconditionError("need lambda > 0");
  if (power != 1 && power != 2) throw PreconditionError("power must be 1 or 2");
  const std::int64_t n = measure.size();
  std::vector<double> v(static_cast<std::size_t>(n));
  for (std::int64_t i = 0; i < n; ++i) {
    const double r2 = measure.particles.col(i).squaredNorm();
    v[static_cast<std::size_t>(i)] = lambda * (power == 2 ? r2 : std::sqrt(r2));
  }
  ExpMoment out;
  const LogMean full = log_mean_exp(v, static_cast<std::size_t>(n));
  out.log_value = full.log_value;
  const double scale = std::exp(full.ref);
  out.estimate = {full.scaled.value * scale, full.scaled.stderr * scale, full.scaled.n};

  int run = 0;
  double previous = std::numeric_limits<double>::quiet_NaN();
  for (int k = options.levels; k >= 0; --k) {
    const std::int64_t m = n >> k;
    if (m < 2) continue;
    const double lv = log_mean_exp(v, static_cast<std::size_t>(m)).log_value;
    out.sweep.emplace_back(m, std::exp(lv));
    if (std::isfinite(previous)) {
      // relative change of the estimate, |e^{lv - prev} - 1|
      const double change = std::abs(std::expm1(lv - previous));
      run = change > options.jump ? run + 1 : 0;
      if (run >= options.consecutive) out.heuristic_divergent = true;
    }
    previous = lv;
  }
  out.divergent = out.heuristic_divergent;
  return out;
}

ExpMoment exp_moment(const OperatorSpec& spec, const EmpiricalMeasure& measure, double lambda, int power,
                     const ExpMomentOptions& options) {
  ExpMoment out = exp_moment(measure, lambda, power, options);
  if (spec.ou && spec.ou->constant && (power == 2 || measure.dimension() == 1)) {
    const double sigma2 = ou_invariant_variance(*spec.ou);
    out.analytic_divergent = ou_gauss_exp_moment(sigma2, lambda, power, measure.dimension()).divergent;
    out.divergent = *out.analytic_divergent;
  }
  return out;
}

TightnessReport tightness_check(const std::vector<EmpiricalMeasure>& measures, double epsilon,
                                std::vector<double> radii) {
  if (measures.empty()) throw PreconditionError("no measures");
  TightnessReport rep;
  rep.epsilon = epsilon;
  std::vector<std::vector<double>> norms;
  double max_norm = 0.0;
  for (const auto& m : measures) {
    std::vector<double> r(static_cast<std::size_t>(m.size()));
    for (std::int64_t i = 0; i < m.size(); ++i) r[static_cast<std::size_t>(i)] = m.particles.col(i).norm();
    std::sort(r.begin(), r.end());
    max_norm = std::max(max_norm, r.back());
    norms.push_back(std::move(r));
  }
  if (radii.empty()) {
    for (int j = 0; j <= 400; ++j) radii.push_back(max_norm * j / 400.0);
  }
  std::sort(radii.begin(), radii.end());
  rep.radii = radii;
  rep.min_mass.assign(radii.size(), 1.0);
  for (const auto& r : norms) {
    std::vector<double> mass;
    for (std::size_t j = 0; j < radii.size(); ++j) {
      const auto inside = std::upper_bound(r.begin(), r.end(), radii[j]) - r.begin();
      mass.push_back(static_cast<double>(inside) / static_cast<double>(r.size()));
      rep.min_mass[j] = std::min(rep.min_mass[j], mass.back());
    }
    rep.mass.push_back(std::move(mass));
  }
  // full mass would need an infinite radius
  if (!(epsilon > 0)) return rep;
  const double target = 1.0 - epsilon;
  for (std::size_t j = 0; j < radii.size(); ++j) {
    if (rep.min_mass[j] >= target) {
      rep.radius = radii[j];
      rep.pass = true;
      break;
    }
  }
  double q = 0.0;
  for (const auto& r : norms) {
    const auto need = static_cast<std::int64_t>(std::ceil(target * static_cast<double>(r.size()) - 1e-9));
    if (need > 0) q = std::max(q, r[static_cast<std::size_t>(std::min<std::int64_t>(need, r.size()) - 1)]);
  }
  rep.quantile_radius = q;
  return rep;
}

double ks_distance(const Matrix& a, const Matrix& b, int coordinate) {
  std::vector<double> x(static_cast<std::size_t>(a.cols()));
  for (Eigen::Index i = 0; i < a.cols(); ++i) x[static_cast<std::size_t>(i)] = a(coordinate, i);
  std::vector<double> y(static_cast<std::size_t>(b.cols()));
  for (Eigen::Index i = 0; i < b.cols(); ++i) y[static_cast<std::size_t>(i)] = b(coordinate, i);
  std::sort(x.begin(), x.end());
  std::sort(y.begin(), y.end());
  const double n = static_cast<double>(x.size()), m = static_cast<double>(y.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < x.size() && j < y.size()) {
    const double v = std::min(x[i], y[j]);
    while (i < x.size() && x[i] == v) ++i;
    while (j < y.size() && y[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / n - static_cast<double>(j) / m));
  }
  return d;
}

double ks_critical(std::int64_t n, std::int64_t m, double alpha) {
  const double c = std::sqrt(-0.5 * std::log(alpha / 2.0));
  const double nn = static_cast<double>(n), mm = static_cast<double>(m);
  return c * std::sqrt((nn + mm) / (nn * mm));
}

}  // namespace evolab
