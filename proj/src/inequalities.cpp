#include "evolab/inequalities.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace evolab {

namespace {

constexpr double kLogFloor = 1e-12;

double sgn(double v) { return (v > 0) - (v < 0); }

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

McEstimate scaled_estimate(const McEstimate& e, double k) { return {e.value * k, e.stderr * std::abs(k), e.n}; }

double margin_se_from(const std::vector<double>& influence) {
  if (influence.size() < 2) return 0.0;
  return estimate_mean(influence).stderr;
}

// (mean |v|^q)^{1/q} with delta-method stderr
McEstimate lq_of(const std::vector<double>& v, double q) {
  std::vector<double> w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = std::pow(std::abs(v[i]), q);
  const McEstimate m = estimate_mean(w);
  McEstimate out{std::pow(m.value, 1.0 / q), 0.0, m.n};
  if (m.value > 0) out.stderr = out.value / (q * m.value) * m.stderr;
  return out;
}

// ratio a/b raised to k, delta-method stderr with independent a, b
McEstimate ratio_power(const McEstimate& a, const McEstimate& b, double k) {
  const double r = std::pow(std::abs(a.value) / b.value, k);
  double rel = 0.0;
  if (a.value != 0) rel += std::pow(a.stderr / a.value, 2);
  rel += std::pow(b.stderr / b.value, 2);
  return {r, k * r * std::sqrt(rel), std::min(a.n, b.n)};
}

double half_mass_radius(const EmpiricalMeasure& m, double mass) {
  const TightnessReport rep = tightness_check({m}, 1.0 - mass);
  return rep.quantile_radius.value_or(0.0);
}

double burn_in_of(const OperatorSpec& spec, const NormBudget& budget) {
  return budget.burn_in > 0 ? budget.burn_in : default_burn_in(spec);
}

EmpiricalMeasure measure_at(const OperatorSpec& spec, double time, const NormBudget& budget,
                            const SeedLineage& lineage) {
  return estimate_measure(spec, time, burn_in_of(spec, budget), budget.particles, budget.config, lineage);
}

// ||f||_{p,mu} for a member, or nullopt when too noisy to divide by
std::optional<McEstimate> denominator(const EmpiricalMeasure& mu, const TestFunction& f, double p,
                                      const NormBudget& budget) {
  const McEstimate d = lp_norm(mu, f.value, p);
  if (!(d.value > 0) || d.stderr > budget.max_relative_stderr * d.value) return std::nullopt;
  return d;
}

std::vector<double> row(const Matrix& m, Eigen::Index k) {
  std::vector<double> v(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j) v[static_cast<std::size_t>(j)] = m(k, j);
  return v;
}

void check_gap(double s, double t) {
  if (!(t > s)) throw PreconditionError("need t > s");
}

}  // namespace

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::Pass:
      return "pass";
    case Verdict::Fail:
      return "fail";
    default:
      return "inconclusive";
  }
}

Verdict decide(const McEstimate& lhs, const McEstimate& rhs, std::optional<double> margin_stderr) {
  const double margin = rhs.value - lhs.value;
  const double se = margin_stderr ? *margin_stderr : std::hypot(lhs.stderr, rhs.stderr);
  if (std::isnan(margin)) return Verdict::Inconclusive;
  if (std::abs(margin) < 3.0 * se && se > 0.1 * std::abs(rhs.value)) return Verdict::Inconclusive;
  const double slack = 1e-12 * std::max(std::abs(lhs.value), std::abs(rhs.value));
  if (margin + 3.0 * se >= -slack) return Verdict::Pass;
  return Verdict::Fail;
}

InequalityReport make_report(std::string name, InequalityParams params, const McEstimate& lhs, const McEstimate& rhs,
                             std::uint64_t seed, std::optional<double> margin_stderr) {
  InequalityReport r;
  r.name = std::move(name);
  r.params = std::move(params);
  r.lhs = lhs;
  r.rhs = rhs;
  r.margin = rhs.value - lhs.value;
  r.margin_stderr = margin_stderr ? *margin_stderr : std::hypot(lhs.stderr, rhs.stderr);
  r.verdict = decide(lhs, rhs, margin_stderr);
  r.seed = seed;
  return r;
}

InequalityReport gradient_estimate_check(const OperatorSpec& spec, const TestFunction& f, double p, double s, double t,
                                         const Vector& x, std::int64_t n, const PathConfig& config,
                                         const SeedLineage& lineage) {
  if (!(p >= 1)) throw PreconditionError("need p >= 1");
  if (!f.gradient) throw PreconditionError("test function needs a gradient");
  const auto grad = gradient_apply(spec, f.value, s, t, x, n, config, lineage);
  double g2 = 0.0, var = 0.0;
  for (const auto& g : grad) {
    g2 += g.value * g.value;
    var += g.value * g.value * g.stderr * g.stderr;
  }
  const double norm = std::sqrt(g2);
  McEstimate lhs{std::pow(norm, p), 0.0, grad.front().n};
  if (norm > 0) lhs.stderr = p * std::pow(norm, p - 1) * std::sqrt(var) / norm;

  const Ensemble e = simulate(spec, s, t, x, n, config, lineage);
  const auto gp = e.values([&](const Vector& y) { return std::pow(f.gradient(y).norm(), p); });
  const McEstimate rhs = scaled_estimate(estimate_mean(gp), std::exp(p * spec.r0 * (t - s)));
  InequalityParams prm;
  prm.p = p;
  prm.s = s;
  prm.t = t;
  prm.x = x;
  auto r = make_report("gradient_estimate", prm, lhs, rhs, lineage.master_seed);
  r.notes.push_back(f.name);
  return r;
}

InequalityReport kernel_lsi_check(const OperatorSpec& spec, const TestFunction& f, double p, double s, double t,
                                  const Vector& x, std::int64_t n, const PathConfig& config,
                                  const SeedLineage& lineage) {
  if (!(p >= 2)) throw PreconditionError("kernel LSI needs p >= 2");
  if (!f.gradient) throw PreconditionError("test function needs a gradient");
  return kernel_lsi_check(spec, simulate(spec, s, t, x, n, config, lineage), f, p, x);
}

InequalityReport kernel_lsi_check(const OperatorSpec& spec, const Ensemble& e, const TestFunction& f, double p,
                                  const Vector& x) {
  if (!(p >= 2)) throw PreconditionError("kernel LSI needs p >= 2");
  if (!f.gradient) throw PreconditionError("test function needs a gradient");
  const double s = e.s, t = e.t;
  std::vector<double> A, B, C;
  Vector y(spec.dimension);
  for (std::int64_t i = 0; i < e.size(); ++i) {
    if (!e.valid(i)) continue;
    y = e.states.col(i);
    const double v = std::abs(f(y));
    const double vp = std::pow(v, p);
    A.push_back(vp * std::log(std::max(vp, kLogFloor)));
    B.push_back(std::pow(v, p - 2) * f.gradient(y).squaredNorm());
    C.push_back(vp);
  }
  const McEstimate ma = estimate_mean(A), mb = estimate_mean(B), mc = estimate_mean(C);
  const double c = constants::kernel_lsi(p, spec.Lambda, spec.r0, t - s);
  const double log_mc = std::log(std::max(mc.value, kLogFloor));
  const McEstimate lhs = ma;
  McEstimate rhs{c * mb.value + mc.value * log_mc, 0.0, mc.n};
  rhs.stderr = std::hypot(c * mb.stderr, (log_mc + 1.0) * mc.stderr);
  std::vector<double> infl(A.size());
  for (std::size_t i = 0; i < A.size(); ++i)
    infl[i] = c * (B[i] - mb.value) + (log_mc + 1.0) * (C[i] - mc.value) - (A[i] - ma.value);
  InequalityParams prm;
  prm.p = p;
  prm.s = s;
  prm.t = t;
  prm.x = x;
  auto r = make_report("kernel_lsi", prm, lhs, rhs, e.lineage.master_seed, margin_se_from(infl));
  r.notes.push_back(f.name);
  r.notes.push_back("constant=" + fmt(c));
  return r;
}

InequalityReport harnack_check(const OperatorSpec& spec, const TestFunction& f, double p, double s, double t,
                               const Vector& x, const Vector& y, std::int64_t n, const PathConfig& config,
                               const SeedLineage& lineage) {
  if (!(p > 1)) throw PreconditionError("Harnack needs p > 1");
  check_gap(s, t);
  return harnack_check(spec, simulate(spec, s, t, x, n, config, lineage), simulate(spec, s, t, y, n, config, lineage),
                       f, p, x, y);
}

InequalityReport harnack_check(const OperatorSpec& spec, const Ensemble& ex, const Ensemble& ey,
                               const TestFunction& f, double p, const Vector& x, const Vector& y) {
  if (!(p > 1)) throw PreconditionError("Harnack needs p > 1");
  if (ex.size() != ey.size() || !(ex.lineage == ey.lineage) || ex.s != ey.s || ex.t != ey.t)
    throw PreconditionError("Harnack ensembles must share lineage, size and interval");
  const double s = ex.s, t = ex.t;
  check_gap(s, t);
  const std::int64_t n = ex.size();
  std::vector<double> fx, fy;
  Vector z(spec.dimension);
  for (std::int64_t i = 0; i < n; ++i) {
    if (!ex.valid(i) || !ey.valid(i)) continue;
    z = ex.states.col(i);
    fx.push_back(f(z));
    z = ey.states.col(i);
    fy.push_back(std::pow(std::abs(f(z)), p));
  }
  const McEstimate m1 = estimate_mean(fx), m2 = estimate_mean(fy);
  const double F = constants::harnack_factor(p, (x - y).squaredNorm(), spec.eta0, t - s);
  const double dl = p * std::pow(std::abs(m1.value), p - 1) * sgn(m1.value);
  const McEstimate lhs{std::pow(std::abs(m1.value), p), std::abs(dl) * m1.stderr, m1.n};
  const McEstimate rhs = scaled_estimate(m2, F);
  std::vector<double> infl(fx.size());
  for (std::size_t i = 0; i < fx.size(); ++i) infl[i] = F * (fy[i] - m2.value) - dl * (fx[i] - m1.value);
  InequalityParams prm;
  prm.p = p;
  prm.s = s;
  prm.t = t;
  prm.x = x;
  prm.y = y;
  auto r = make_report("harnack", prm, lhs, rhs, ex.lineage.master_seed, margin_se_from(infl));
  r.notes.push_back(f.name);
  return r;
}

InequalityReport potential_contraction_check(const OperatorSpec& spec, const PotentialSpec& potential,
                                             const TestFunction& f, double s, double t, const Vector& x,
                                             std::int64_t n, const PathConfig& config, const SeedLineage& lineage) {
  const Ensemble ec = simulate_weighted(spec, potential, s, t, x, n, config, lineage);
  const Ensemble e = simulate(spec, s, t, x, n, config, lineage);
  const double decay = std::exp(-potential.c0 * (t - s));
  const McEstimate lhs = evolab::apply(ec, f.value);
  const McEstimate plain = evolab::apply(e, f.value);
  const McEstimate rhs{plain.value * decay, plain.stderr * decay, plain.n};
  std::vector<double> infl;
  Vector y(spec.dimension);
  for (std::int64_t i = 0; i < n; ++i) {
    if (!e.valid(i)) continue;
    y = e.states.col(i);
    const double v = f(y);
    infl.push_back(decay * v - v * std::exp(ec.log_weights[static_cast<std::size_t>(i)]));
  }
  InequalityParams prm;
  prm.s = s;
  prm.t = t;
  prm.x = x;
  auto r = make_report("potential_contraction", prm, lhs, rhs, lineage.master_seed, margin_se_from(infl));
  r.notes.push_back(f.name);
  r.notes.push_back("c0=" + fmt(potential.c0));
  return r;
}

InequalityReport measure_lsi_check(const EmpiricalMeasure& measure, const TestFunction& f, double eps, double beta) {
  if (!f.gradient) throw PreconditionError("test function needs a gradient");
  const std::int64_t n = measure.size();
  std::vector<double> f2(static_cast<std::size_t>(n)), g2(f2.size());
  Vector y(measure.dimension());
  for (std::int64_t i = 0; i < n; ++i) {
    y = measure.particles.col(i);
    const double v = f(y);
    f2[static_cast<std::size_t>(i)] = v * v;
    g2[static_cast<std::size_t>(i)] = f.gradient(y).squaredNorm();
  }
  const McEstimate mf = estimate_mean(f2), mg = estimate_mean(g2);
  // f^2 log(|f|/||f||) = (1/2) f^2 log(f^2/||f||^2); zero where f = 0
  std::vector<double> ent(f2.size()), a(f2.size());
  for (std::size_t i = 0; i < f2.size(); ++i) {
    ent[i] = f2[i] > 0 ? 0.5 * f2[i] * std::log(f2[i] / mf.value) : 0.0;
    a[i] = f2[i] > 0 ? 0.5 * f2[i] * std::log(f2[i]) : 0.0;
  }
  const McEstimate lhs_raw = estimate_mean(ent);
  const McEstimate ma = estimate_mean(a);
  const double log_mf = mf.value > 0 ? std::log(mf.value) : 0.0;
  std::vector<double> infl(f2.size());
  for (std::size_t i = 0; i < f2.size(); ++i) {
    const double l = (a[i] - ma.value) - 0.5 * (log_mf + 1.0) * (f2[i] - mf.value);
    const double r = eps * (g2[i] - mg.value) + beta * (f2[i] - mf.value);
    infl[i] = r - l;
  }
  const double lhs_se = [&] {
    std::vector<double> li(f2.size());
    for (std::size_t i = 0; i < f2.size(); ++i) li[i] = (a[i] - ma.value) - 0.5 * (log_mf + 1.0) * (f2[i] - mf.value);
    return margin_se_from(li);
  }();
  const McEstimate lhs{lhs_raw.value, lhs_se, lhs_raw.n};
  const McEstimate rhs{eps * mg.value + beta * mf.value, std::hypot(eps * mg.stderr, beta * mf.stderr), mf.n};
  InequalityParams prm;
  prm.eps = eps;
  prm.t = measure.time_tag;
  auto r = make_report("measure_lsi", prm, lhs, rhs, measure.lineage.master_seed, margin_se_from(infl));
  r.notes.push_back(f.name);
  r.notes.push_back("beta=" + fmt(beta));
  return r;
}

SuperLsiConstants super_lsi_constants(double p, double q, double t, double s, double norm_bound, double Lambda,
                                      double r0) {
  if (!(t > s)) throw PreconditionError("need t > s");
  return constants::super_lsi(p, q, t - s, norm_bound, Lambda, r0);
}

NestedValues nested_apply(const OperatorSpec& spec, const TestFunctionFamily& family, double s, double t,
                          const NormBudget& budget, const SeedLineage& lineage) {
  if (!(t >= s)) throw PreconditionError("need t >= s");
  NestedValues out;
  out.mu_t = estimate_measure(spec, t, burn_in_of(spec, budget), budget.outer, budget.config, lineage.derive(11));
  const auto K = static_cast<Eigen::Index>(family.size());
  const auto J = out.mu_t.size();
  out.values.resize(K, J);
  Vector y(spec.dimension);
  if (t == s) {
    for (Eigen::Index j = 0; j < J; ++j) {
      y = out.mu_t.particles.col(j);
      for (Eigen::Index k = 0; k < K; ++k) out.values(k, j) = family.members[static_cast<std::size_t>(k)](y);
    }
    return out;
  }
  const Ensemble in = simulate_from(spec, s, t, out.mu_t.particles, budget.inner, budget.config, lineage.derive(12));
  std::vector<CompensatedSum> acc(static_cast<std::size_t>(K));
  for (Eigen::Index j = 0; j < J; ++j) {
    for (auto& a : acc) a = CompensatedSum{};
    int count = 0;
    for (int r = 0; r < budget.inner; ++r) {
      const std::int64_t idx = j * budget.inner + r;
      if (!in.valid(idx)) continue;
      y = in.states.col(idx);
      for (Eigen::Index k = 0; k < K; ++k) acc[static_cast<std::size_t>(k)].add(family.members[static_cast<std::size_t>(k)](y));
      ++count;
    }
    for (Eigen::Index k = 0; k < K; ++k)
      out.values(k, j) = count > 0 ? acc[static_cast<std::size_t>(k)].value() / count : 0.0;
  }
  return out;
}

std::vector<InequalityReport> hypercontractivity_recursion_check(const OperatorSpec& spec,
                                                                 const TestFunctionFamily& family, double p,
                                                                 double eps, double beta, double s, double t,
                                                                 const NormBudget& budget,
                                                                 const SeedLineage& lineage) {
  if (!(p > 1) || !(eps > 0)) throw PreconditionError("need p > 1 and eps > 0");
  if (!(beta >= 0)) throw PreconditionError("need beta >= 0");
  const double q = constants::hypercontractive_exponent(p, spec.eta0, eps, t - s);
  const double factor = constants::hypercontractive_factor(beta, p, q);
  const NestedValues nv = nested_apply(spec, family, s, t, budget, lineage);
  const EmpiricalMeasure mu_s = measure_at(spec, s, budget, lineage.derive(13));
  std::vector<InequalityReport> out;
  int dropped = 0;
  for (std::size_t k = 0; k < family.size(); ++k) {
    const auto d = denominator(mu_s, family.members[k], p, budget);
    if (!d) {
      ++dropped;
      continue;
    }
    const McEstimate lhs = lq_of(row(nv.values, static_cast<Eigen::Index>(k)), q);
    InequalityParams prm;
    prm.p = p;
    prm.q = q;
    prm.eps = eps;
    prm.s = s;
    prm.t = t;
    auto r = make_report("hypercontractivity", prm, lhs, scaled_estimate(*d, factor), lineage.master_seed);
    r.notes.push_back(family.members[k].name);
    r.notes.push_back("beta=" + fmt(beta));
    out.push_back(std::move(r));
  }
  if (dropped > 0 && !out.empty()) out.front().notes.push_back("dropped " + std::to_string(dropped) + " members");
  return out;
}

InequalityReport supercontractivity_norm_bound(const OperatorSpec& spec, const TestFunctionFamily& family, double p,
                                               double q, double s, double t, std::optional<double> R_half_mass,
                                               const NormBudget& budget, const SeedLineage& lineage) {
  check_gap(s, t);
  if (!(p > 1) || !(q > p)) throw DegenerateExponents("need 1 < p < q");
  const double delta = t - s;
  const double lambda0 = constants::supercontractive_lambda(p, q, spec.eta0, delta);
  const EmpiricalMeasure mu_s = measure_at(spec, s, budget, lineage.derive(13));
  const ExpMoment phi = exp_moment(spec, mu_s, lambda0, 2);
  if (phi.divergent) {
    throw ExpMomentDiverged("exp(" + fmt(lambda0) + "|x|^2) is not integrable under mu_s at gap " + fmt(delta) +
                            (phi.analytic_divergent ? " (Gaussian threshold)" : " (sample sweep)"));
  }
  const NestedValues nv = nested_apply(spec, family, s, t, budget, lineage);
  const double R = R_half_mass ? *R_half_mass : half_mass_radius(nv.mu_t, std::pow(2.0, -p));
  const double C = constants::supercontractive_norm(p, q, R, spec.eta0, delta, phi.estimate.value);
  const McEstimate rhs{C, C / phi.estimate.value * phi.estimate.stderr, phi.estimate.n};
  McEstimate lhs{-1.0, 0.0, 0};
  std::string arg;
  int dropped = 0;
  for (std::size_t k = 0; k < family.size(); ++k) {
    const auto d = denominator(mu_s, family.members[k], p, budget);
    if (!d) {
      ++dropped;
      continue;
    }
    const McEstimate num = lq_of(row(nv.values, static_cast<Eigen::Index>(k)), q);
    const McEstimate ratio = ratio_power(num, *d, q);
    if (ratio.value > lhs.value) {
      lhs = ratio;
      arg = family.members[k].name;
    }
  }
  if (lhs.n == 0) throw RuntimeError("every family member was dropped");
  InequalityParams prm;
  prm.p = p;
  prm.q = q;
  prm.lambda = lambda0;
  prm.s = s;
  prm.t = t;
  auto r = make_report("supercontractivity", prm, lhs, rhs, lineage.master_seed);
  r.notes.push_back("argmax " + arg);
  r.notes.push_back("R=" + fmt(R));
  if (dropped) r.notes.push_back("dropped " + std::to_string(dropped) + " members");
  r.notes.push_back("family maximum is a lower bound on the operator norm");
  return r;
}

InequalityReport ultrabounded_bound_check(const OperatorSpec& spec, const TestFunctionFamily& family, double s,
                                          double t, const std::vector<Vector>& x_grid, MSupplier supplier,
                                          std::int64_t n, const NormBudget& budget, const SeedLineage& lineage) {
  if (spec.regime.rank() < 2) throw RegimeMismatch("ultrabounded check needs an ultrabounded or ultracontractive spec");
  check_gap(s, t);
  if (x_grid.empty()) throw PreconditionError("empty x grid");
  const double delta = t - s;
  const double lambda = constants::ultrabounded_lambda(spec.eta0, delta);
  const EmpiricalMeasure mu_s = measure_at(spec, s, budget, lineage.derive(13));
  const double R = half_mass_radius(mu_s, 0.5);
  std::vector<std::string> notes;

  McEstimate M;
  const auto* uc = std::get_if<Ultracontractive>(&spec.regime.tag);
  if (supplier == MSupplier::Analytic && uc) {
    M = McEstimate::exact(constants::mtilde(uc->kappa, uc->K3, spec.Lambda, spec.dimension, delta / 2, lambda).bound);
    notes.push_back("M analytic");
  } else {
    if (supplier == MSupplier::Analytic) notes.push_back("no analytic M for this regime; using empirical");
    const ScalarFn phi = [lambda](const Vector& y) { return std::exp(lambda * y.squaredNorm()); };
    M = McEstimate{0.0, 0.0, 0};
    for (std::size_t i = 0; i < x_grid.size(); ++i) {
      const McEstimate e =
          evolab::apply(spec, phi, s, s + delta / 2, x_grid[i], n, budget.config, lineage.derive(300 + i));
      if (e.value > M.value) M = e;
    }
    notes.push_back("M empirical");
  }
  const double C = constants::ultrabounded_norm(R, spec.eta0, delta, M.value);
  const McEstimate rhs{C, M.value > 0 ? C / M.value * M.stderr : 0.0, std::max<std::int64_t>(M.n, 2)};

  std::vector<std::optional<McEstimate>> norms(family.size());
  for (std::size_t k = 0; k < family.size(); ++k) norms[k] = denominator(mu_s, family.members[k], 2.0, budget);
  McEstimate lhs{-1.0, 0.0, 0};
  std::string arg;
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    const Ensemble e = simulate(spec, s, t, x_grid[i], n, budget.config, lineage.derive(400 + i));
    for (std::size_t k = 0; k < family.size(); ++k) {
      if (!norms[k]) continue;
      const McEstimate g = evolab::apply(e, family.members[k].value);
      const McEstimate ratio = ratio_power(g, *norms[k], 1.0);
      if (ratio.value > lhs.value) {
        lhs = ratio;
        arg = family.members[k].name + " at x0=" + fmt(x_grid[i][0]);
      }
    }
  }
  if (lhs.n == 0) throw RuntimeError("every family member was dropped");
  InequalityParams prm;
  prm.lambda = lambda;
  prm.delta = delta / 2;
  prm.s = s;
  prm.t = t;
  auto r = make_report("ultrabounded", prm, lhs, rhs, lineage.master_seed);
  r.notes = notes;
  r.notes.push_back("argmax " + arg);
  r.notes.push_back("R=" + fmt(R));
  return r;
}

Ultracontractive require_ultracontractive(const OperatorSpec& spec, const std::string& check) {
  if (const auto* uc = std::get_if<Ultracontractive>(&spec.regime.tag)) return *uc;
  throw RegimeMismatch(check + " needs an ultracontractive spec, got " + spec.regime.to_string());
}

InequalityReport l1_l2_check(const OperatorSpec& spec, const TestFunctionFamily& family, double s, double t,
                             double C, const NormBudget& budget, const SeedLineage& lineage) {
  const Ultracontractive uc = require_ultracontractive(spec, "l1_l2");
  check_gap(s, t);
  const double delta = t - s;
  const NestedValues nv = nested_apply(spec, family, s, t, budget, lineage);
  const EmpiricalMeasure mu_s = measure_at(spec, s, budget, lineage.derive(13));
  McEstimate lhs{-1.0, 0.0, 0};
  std::string arg;
  for (std::size_t k = 0; k < family.size(); ++k) {
    const auto d = denominator(mu_s, family.members[k], 1.0, budget);
    if (!d) continue;
    const McEstimate ratio = ratio_power(lq_of(row(nv.values, static_cast<Eigen::Index>(k)), 2.0), *d, 1.0);
    if (ratio.value > lhs.value) {
      lhs = ratio;
      arg = family.members[k].name;
    }
  }
  if (lhs.n == 0) throw RuntimeError("every family member was dropped");
  const double bound = std::exp(C / (2.0 * std::pow(delta, constants::blowup_exponent(uc.kappa))));
  InequalityParams prm;
  prm.s = s;
  prm.t = t;
  auto r = make_report("l1_l2", prm, lhs, McEstimate::exact(bound), lineage.master_seed);
  r.notes.push_back("argmax " + arg);
  r.notes.push_back("C=" + fmt(C) + " (fitted, frozen)");
  return r;
}

KernelSup kernel_sup(const OperatorSpec& spec, double s, double t, const std::vector<Vector>& x_grid,
                     const HeatKernelOptions& options, const EmpiricalMeasure* mu_s, const SeedLineage& lineage) {
  if (spec.dimension > 3) throw DimensionTooHigh("kernel estimates need d <= 3");
  check_gap(s, t);
  if (options.mode == KernelMode::MuRelative && !mu_s) throw PreconditionError("mu-relative kernel needs mu_s");
  KernelSup out;
  out.delta = t - s;
  out.sup = -1.0;
  // one noise stream per x; the same streams serve every gap
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    const Ensemble e = simulate(spec, s, t, x_grid[i], options.n, {.step = std::min(1e-3, (t - s) / 10)},
                                lineage.derive(500 + i));
    Matrix pts(spec.dimension, e.size() - e.divergent_count);
    Eigen::Index k = 0;
    for (std::int64_t j = 0; j < e.size(); ++j)
      if (e.valid(j)) pts.col(k++) = e.states.col(j);
    if (options.mode == KernelMode::Lebesgue) {
      const DensityEstimate d = kernel_density(pts, options.kde);
      // the kernel is cut at 8 bandwidths, so positivity is only asserted inside the sample range
      const Vector lo = pts.rowwise().minCoeff(), hi = pts.rowwise().maxCoeff();
      for (std::size_t q = 0; q < d.density.size(); ++q) {
        const auto y = d.query.col(static_cast<Eigen::Index>(q));
        const bool inside = (y.array() >= lo.array()).all() && (y.array() <= hi.array()).all();
        if (inside && !(d.density[q] > 0)) out.positive = false;
      }
      if (d.sup > out.sup) {
        out.sup = d.sup;
        out.argsup_x = x_grid[i];
        out.argsup_y = d.argsup;
        out.bias_caveat = d.bias_caveat;
      }
    } else {
      const RelativeDensity r = relative_density(pts, mu_s->particles, options.kde);
      for (std::size_t q = 0; q < r.ratio.size(); ++q) {
        if (r.reference.density[q] >= 1e-3 * r.reference.sup && !(r.ratio[q] > 0)) out.positive = false;
      }
      if (r.sup > out.sup) {
        out.sup = r.sup;
        out.argsup_x = x_grid[i];
        out.argsup_y = r.argsup;
        out.bias_caveat = r.numerator.bias_caveat;
      }
    }
  }
  return out;
}

InequalityReport heat_kernel_sup_check(const OperatorSpec& spec, double s, double t, const std::vector<Vector>& x_grid,
                                       double C, const HeatKernelOptions& options, const NormBudget& budget,
                                       const SeedLineage& lineage) {
  const Ultracontractive uc = require_ultracontractive(spec, "heat_kernel");
  if (spec.dimension > 3) throw DimensionTooHigh("kernel estimates need d <= 3");
  check_gap(s, t);
  std::optional<EmpiricalMeasure> mu_s;
  if (options.mode == KernelMode::MuRelative) mu_s = measure_at(spec, s, budget, lineage.derive(13));
  const KernelSup ks = kernel_sup(spec, s, t, x_grid, options, mu_s ? &*mu_s : nullptr, lineage);
  const double bound = std::exp(C / std::pow(t - s, constants::blowup_exponent(uc.kappa)));
  InequalityParams prm;
  prm.s = s;
  prm.t = t;
  prm.x = ks.argsup_x;
  prm.y = ks.argsup_y;
  auto r = make_report("heat_kernel", prm, McEstimate::exact(ks.sup, options.n), McEstimate::exact(bound),
                       lineage.master_seed);
  r.notes.push_back(options.mode == KernelMode::Lebesgue ? "kernel in dy" : "kernel relative to mu_s");
  r.notes.push_back("C=" + fmt(C) + " (fitted, frozen)");
  if (ks.bias_caveat) r.notes.push_back("bandwidth bias: sup may be underestimated");
  if (!ks.positive) {
    r.verdict = Verdict::Fail;
    r.notes.push_back("kernel estimate not positive on the query grid");
  }
  return r;
}

BlowupFit fit_blowup(const std::vector<double>& deltas, const std::vector<double>& sups) {
  if (deltas.size() != sups.size()) throw PreconditionError("deltas and sups differ in length");
  BlowupFit fit;
  fit.deltas = deltas;
  fit.sups = sups;
  if (deltas.size() < 5) throw FitIllConditioned("need at least 5 gaps, got " + std::to_string(deltas.size()));
  std::vector<double> X, Y;
  for (std::size_t i = 0; i < deltas.size(); ++i) {
    if (!(deltas[i] > 0)) throw PreconditionError("gaps must be positive");
    if (!(sups[i] > 1)) {
      fit.notes.push_back("gap " + fmt(deltas[i]) + ": sup " + fmt(sups[i]) + " <= 1, log log undefined");
      continue;
    }
    X.push_back(std::log(1.0 / deltas[i]));
    Y.push_back(std::log(std::log(sups[i])));
  }
  if (X.size() < 5) {
    std::string why = "only " + std::to_string(X.size()) + " gaps with sup > 1";
    for (const auto& n : fit.notes) why += "; " + n;
    throw FitIllConditioned(why);
  }
  const double m = static_cast<double>(X.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    mx += X[i];
    my += Y[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    sxx += (X[i] - mx) * (X[i] - mx);
    sxy += (X[i] - mx) * (Y[i] - my);
  }
  if (!(sxx > 1e-12)) throw FitIllConditioned("gaps do not vary");
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.C = std::exp(fit.intercept);
  return fit;
}

BlowupFit blowup_exponent_fit(const OperatorSpec& spec, const std::vector<double>& delta_grid, double s,
                              const std::vector<Vector>& x_grid, const HeatKernelOptions& options,
                              const NormBudget& budget, const SeedLineage& lineage) {
  const Ultracontractive uc = require_ultracontractive(spec, "blowup_exponent_fit");
  if (delta_grid.size() < 5) throw FitIllConditioned("need at least 5 gaps");
  std::optional<EmpiricalMeasure> mu_s;
  if (options.mode == KernelMode::MuRelative) mu_s = measure_at(spec, s, budget, lineage.derive(13));
  std::vector<double> sups;
  for (double d : delta_grid) {
    sups.push_back(kernel_sup(spec, s, s + d, x_grid, options, mu_s ? &*mu_s : nullptr, lineage).sup);
  }
  BlowupFit fit = fit_blowup(delta_grid, sups);
  fit.target = constants::blowup_exponent(uc.kappa);
  const double span = *std::max_element(delta_grid.begin(), delta_grid.end()) /
                      *std::min_element(delta_grid.begin(), delta_grid.end());
  if (span < 10) fit.notes.push_back("gap grid spans " + fmt(span) + "x, less than a decade");
  return fit;
}

BetaProfile beta_profile(const OperatorSpec& spec, const EmpiricalMeasure& measure, const std::vector<double>& eps_grid,
                         const TestFunctionFamily& family, double delta) {
  const Ultracontractive uc = require_ultracontractive(spec, "beta_profile");
  BetaProfile out;
  out.eps = eps_grid;
  std::sort(out.eps.begin(), out.eps.end());
  out.target = constants::blowup_exponent(uc.kappa);
  out.c1 = constants::c1(uc.kappa, delta);
  struct Terms {
    double ent, grad, norm2;
  };
  std::vector<Terms> terms;
  const std::int64_t n = measure.size();
  Vector y(measure.dimension());
  for (const auto& f : family.members) {
    if (!f.gradient) continue;
    CompensatedSum f2, g2;
    std::vector<double> vals(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i) {
      y = measure.particles.col(i);
      const double v = f(y);
      vals[static_cast<std::size_t>(i)] = v * v;
      f2.add(v * v);
      g2.add(f.gradient(y).squaredNorm());
    }
    const double m2 = f2.value() / static_cast<double>(n);
    if (!(m2 > 0)) continue;
    CompensatedSum ent;
    for (double v2 : vals)
      if (v2 > 0) ent.add(0.5 * v2 * std::log(v2 / m2));
    terms.push_back({ent.value() / static_cast<double>(n), g2.value() / static_cast<double>(n), m2});
  }
  for (double e : out.eps) {
    double b = 0.0;
    for (const auto& t : terms) b = std::max(b, (t.ent - e * t.grad) / t.norm2);
    out.beta.push_back(b);
  }
  for (std::size_t i = 1; i < out.beta.size(); ++i)
    if (out.beta[i] > out.beta[i - 1]) out.nonincreasing = false;
  std::vector<double> X, Y;
  for (std::size_t i = 0; i < out.eps.size(); ++i) {
    if (out.beta[i] > 0) {
      X.push_back(std::log(1.0 / out.eps[i]));
      Y.push_back(std::log(out.beta[i]));
    }
  }
  if (X.size() < 2) {
    out.notes.push_back("fewer than two eps with beta > 0; tail exponent not fitted");
    return out;
  }
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    mx += X[i];
    my += Y[i];
  }
  mx /= static_cast<double>(X.size());
  my /= static_cast<double>(X.size());
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    sxx += (X[i] - mx) * (X[i] - mx);
    sxy += (X[i] - mx) * (Y[i] - my);
  }
  out.tail_exponent = sxy / sxx;
  out.notes.push_back("family lower bound; fitted over " + std::to_string(X.size()) + " eps values");
  return out;
}

MtildeBound mtilde_bound(double kappa, double K3, double Lambda, int dimension, double delta, double lambda) {
  return constants::mtilde(kappa, K3, Lambda, dimension, delta, lambda);
}

UniformIntegrability uniform_integrability_check(const OperatorSpec& spec, const TestFunctionFamily& family, double s,
                                                 double t, const std::vector<double>& r_grid,
                                                 const NormBudget& budget, const SeedLineage& lineage) {
  const Ultracontractive uc = require_ultracontractive(spec, "uniform_integrability");
  check_gap(s, t);
  const double delta = t - s;
  const NestedValues nv = nested_apply(spec, family, s, t, budget, lineage);
  const EmpiricalMeasure mu_s = measure_at(spec, s, budget, lineage.derive(13));
  const double lambda0 = constants::ultrabounded_lambda(spec.eta0, delta);
  const double R = half_mass_radius(nv.mu_t, 0.5);
  const double log_C = std::log(2.0) + R * R / (spec.eta0 * delta);
  // log ||exp(2 lambda0 |x|^2)||_{1,mu_t}: particles when they resolve it, else the
  // analytic bound, since int phi dmu_t = int G(t',t) phi dmu_t' <= sup G(t',t) phi
  const ExpMoment phi = exp_moment(spec, nv.mu_t, 2 * lambda0, 2);
  double log_phi = phi.log_value;
  std::string phi_note = "weight moment from particles";
  if (phi.divergent) {
    log_phi = constants::mtilde(uc.kappa, uc.K3, spec.Lambda, spec.dimension, delta, 2 * lambda0).log_bound;
    phi_note = "weight moment not resolved by particles; analytic bound used";
  }

  std::vector<std::vector<double>> normalized;
  for (std::size_t k = 0; k < family.size(); ++k) {
    const auto d = denominator(mu_s, family.members[k], 2.0, budget);
    if (!d) continue;
    auto v = row(nv.values, static_cast<Eigen::Index>(k));
    for (double& x : v) x /= d->value;
    normalized.push_back(std::move(v));
  }
  if (normalized.empty()) throw RuntimeError("every family member was dropped");
  UniformIntegrability out;
  out.r = r_grid;
  std::sort(out.r.begin(), out.r.end());
  for (double r : out.r) {
    McEstimate best{-1.0, 0.0, 0};
    for (const auto& v : normalized) {
      std::vector<double> tail(v.size());
      for (std::size_t j = 0; j < v.size(); ++j) tail[j] = std::abs(v[j]) >= r ? v[j] * v[j] : 0.0;
      const McEstimate e = estimate_mean(tail);
      if (e.value > best.value) best = e;
    }
    const double env = std::exp(log_C - std::log(r) + 0.5 * log_phi);
    out.tail.push_back(best.value);
    out.envelope.push_back(env);
    InequalityParams prm;
    prm.lambda = lambda0;
    prm.s = s;
    prm.t = t;
    auto rep = make_report("uniform_integrability", prm, best, McEstimate::exact(env), lineage.master_seed);
    rep.notes.push_back("r=" + fmt(r));
    rep.notes.push_back(phi_note);
    out.reports.push_back(std::move(rep));
  }
  for (std::size_t i = 1; i < out.tail.size(); ++i)
    if (out.tail[i] > out.tail[i - 1]) out.nonincreasing = false;
  return out;
}

InequalityReport potential_subinvariance_check(const OperatorSpec& spec, const PotentialSpec& potential,
                                               const TestFunction& f, double s, double t, const NormBudget& budget,
                                               const SeedLineage& lineage) {
  if (!(potential.c0 >= 0)) throw PreconditionError("sub-invariance needs c0 >= 0");
  check_gap(s, t);
  const EmpiricalMeasure mu_t = measure_at(spec, t, budget, lineage.derive(21));
  const EmpiricalMeasure mu_s = measure_at(spec, s, budget, lineage.derive(22));
  const Ensemble moved =
      simulate_weighted_from(spec, potential, s, t, mu_t.particles, 1, budget.config, lineage.derive(23));
  const McEstimate lhs = evolab::apply(moved, f.value);
  const McEstimate rhs = integrate(mu_s, f.value);
  InequalityParams prm;
  prm.s = s;
  prm.t = t;
  auto r = make_report("potential_subinvariance", prm, lhs, rhs, lineage.master_seed);
  r.notes.push_back(f.name);
  return r;
}

}  // namespace evolab
