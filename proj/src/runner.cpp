#include "evolab/runner.hpp"

#include "evolab/ensemble_io.hpp"
#include "evolab/hypotheses.hpp"

#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <set>

namespace evolab {

namespace fs = std::filesystem;

namespace {

const std::vector<CheckInfo>& catalog() {
  static const std::vector<CheckInfo> c = {
      {"hypotheses", "", "ellipticity, dissipativity, Lyapunov and potential bounds on sample grids"},
      {"gradient", "", "|grad G f|^p <= e^{p r0 Delta} G|grad f|^p, p in {1, 2}"},
      {"harnack", "", "two-point Harnack bound, p in {1.5, 2, 4}"},
      {"kernel_lsi", "", "log-Sobolev inequality for the transition kernel, p in {2, 4}"},
      {"invariance", "", "int G(t,s) f dmu_t = int f dmu_s"},
      {"chapman_kolmogorov", "", "G(t,s) = G(t,r) G(r,s) at r = (s+t)/2"},
      {"measures", "", "mu_0 particles, exp moments and tightness radii (estimates.csv)"},
      {"measure_lsi", "", "LSI_eps on mu_0; Gaussian constants for OU, else norm-bound constants from gaps 1, 2, 4, 8"},
      {"hypercontractivity", "", "L^p(mu_s) -> L^q(t)(mu_t) recursion bound"},
      {"supercontractivity", "", "max_f ||G f||_q^q / ||f||_p^q <= C_{p,q}, p = 2, q = 3"},
      {"ultrabounded", "ultrabounded", "L^2(mu_s) -> L^inf bound"},
      {"blowup", "ultracontractive", "small-gap kernel blow-up exponent fit (needs 5 gaps)"},
      {"heat_kernel", "ultracontractive", "kernel sup <= exp(C/Delta^{kappa/(kappa-2)}), C fitted over the gap grid"},
      {"l1_l2", "ultracontractive", "L^1 -> L^2 bound with the fitted C"},
      {"beta_profile", "ultracontractive", "beta(eps) profile and tail exponent"},
      {"uniform_integrability", "ultracontractive", "tails of |G f|^2 under mu_t"},
      {"potential_contraction", "potential", "G_c f <= e^{-c0 Delta} G f for f >= 0"},
      {"potential_subinvariance", "potential", "int G_c f dmu_t <= int f dmu_s for f >= 0"},
  };
  return c;
}

std::string hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::vector<Vector> start_grid(int d) {
  const Vector u = Vector::Ones(d) / std::sqrt(static_cast<double>(d));
  return {-u, Vector::Zero(d), u};
}

// equality-type check: lhs = |difference|, rhs = 3 se, verdict from the 3-sigma rule
InequalityReport equality_report(const std::string& name, InequalityParams prm, const McEstimate& diff,
                                 std::uint64_t seed, double sigmas = 3.0) {
  const McEstimate lhs{std::abs(diff.value), diff.stderr, diff.n};
  const McEstimate rhs = McEstimate::exact(sigmas * diff.stderr);
  InequalityReport r = make_report(name, std::move(prm), lhs, rhs, seed, 0.0);
  r.verdict = lhs.value <= rhs.value || lhs.value == 0.0 ? Verdict::Pass : Verdict::Fail;
  return r;
}

InequalityReport hypothesis_report(const HypothesisReport& h, std::uint64_t seed) {
  InequalityReport r = make_report("hypothesis_" + h.name, {}, McEstimate::exact(0.0),
                                   McEstimate::exact(h.worst_slack), seed, 0.0);
  r.verdict = h.pass ? Verdict::Pass : Verdict::Fail;
  if (!h.detail.empty()) r.notes.push_back(h.detail);
  return r;
}

bool nonnegative(const TestFunction& f, int d) {
  if (f.constant) return *f.constant >= 0;
  Vector y(d);
  for (int k = 0; k <= 240; ++k) {
    const double a = -6.0 + 0.05 * k;
    for (int j = 0; j < d; ++j) y[j] = j % 2 ? -a : a;
    if (f(y) < 0) return false;
  }
  return true;
}

std::string short_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::vector<double> geomspace(double a, double b, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = a * std::pow(b / a, double(i) / (n - 1));
  return out;
}

struct Context {
  const RunManifest& m;
  const LoadedConfig& cfg;
  const OperatorSpec& spec;
  TestFunctionFamily family;
  PathConfig path;
  NormBudget budget;
  std::vector<Vector> xs;
  Artifacts out;

  Context(const RunManifest& manifest, const LoadedConfig& config)
      : m(manifest), cfg(config), spec(config.spec), family(family_by_name(manifest.family, config.spec.dimension)) {
    path.step = m.step;
    budget.particles = m.samples;
    budget.outer = std::clamp<std::int64_t>(m.samples / 20, 100, 1000);
    budget.burn_in = m.burn_in;
    budget.config = path;
    xs = start_grid(spec.dimension);
  }

  SeedLineage lineage(const std::string& check, std::uint64_t point) const {
    return SeedLineage{m.seed, 0, 0}.derive(fnv1a64(check)).derive(point);
  }

  double burn_in() const { return m.burn_in > 0 ? m.burn_in : default_burn_in(spec); }

  std::vector<const TestFunction*> with_gradient() const {
    std::vector<const TestFunction*> v;
    for (const auto& f : family.members)
      if (f.gradient) v.push_back(&f);
    return v;
  }

  void add(InequalityReport r) { out.reports.push_back(std::move(r)); }
  void add(std::vector<InequalityReport> rs) {
    for (auto& r : rs) out.reports.push_back(std::move(r));
  }
};

void run_hypotheses(Context& c) {
  const std::vector<double> times = {0.0, 0.5, 1.0};
  const int d = c.spec.dimension;
  const auto dirs = unit_directions(d, 8);
  c.add(hypothesis_report(check_ellipticity(c.spec, times, dirs), c.m.seed));
  const auto samples = dissipativity_samples(c.spec, times, geomspace(0.1, 10.0, 12), 8, c.m.seed);
  c.add(hypothesis_report(check_dissipativity(c.spec, samples), c.m.seed));
  if (c.cfg.lyapunov) {
    const double r0 = std::max(c.cfg.lyapunov->R, 0.1) * 1.01;
    const auto grid = annulus_grid(times, geomspace(r0, r0 * 4, 12), dirs);
    c.add(hypothesis_report(check_lyapunov(c.spec, *c.cfg.lyapunov, grid), c.m.seed));
  }
  if (c.cfg.potential) {
    std::vector<double> radii = geomspace(0.1, 8.0, 10);
    radii.insert(radii.begin(), 0.0);
    c.add(hypothesis_report(check_potential(*c.cfg.potential, annulus_grid(times, radii, dirs)), c.m.seed));
  }
}

void run_gradient(Context& c) {
  std::uint64_t k = 0;
  for (double delta : c.m.delta_grid)
    for (const auto* f : c.with_gradient())
      for (const auto& x : c.xs)
        for (double p : {1.0, 2.0})
          c.add(gradient_estimate_check(c.spec, *f, p, 0.0, delta, x, c.m.samples, c.path, c.lineage("gradient", k++)));
}

// one ensemble per start point and gap, shared by every f and p; common noise across start points
std::vector<Ensemble> start_ensembles(const Context& c, double delta, const SeedLineage& lineage) {
  std::vector<Ensemble> es;
  for (const auto& x : c.xs) es.push_back(simulate(c.spec, 0.0, delta, x, c.m.samples, c.path, lineage));
  return es;
}

void run_harnack(Context& c) {
  std::uint64_t k = 0;
  for (double delta : c.m.delta_grid) {
    const auto es = start_ensembles(c, delta, c.lineage("harnack", k++));
    for (const auto& f : c.family.members)
      for (std::size_t i = 0; i < c.xs.size(); ++i)
        for (std::size_t j = 0; j < c.xs.size(); ++j)
          for (double p : {1.5, 2.0, 4.0}) c.add(harnack_check(c.spec, es[i], es[j], f, p, c.xs[i], c.xs[j]));
  }
}

void run_kernel_lsi(Context& c) {
  std::uint64_t k = 0;
  for (double delta : c.m.delta_grid) {
    const auto es = start_ensembles(c, delta, c.lineage("kernel_lsi", k++));
    for (const auto* f : c.with_gradient())
      for (std::size_t i = 0; i < c.xs.size(); ++i)
        for (double p : {2.0, 4.0}) c.add(kernel_lsi_check(c.spec, es[i], *f, p, c.xs[i]));
  }
}

void run_invariance(Context& c) {
  std::uint64_t k = 0;
  std::vector<ScalarFn> fs;
  for (const auto& f : c.family.members) fs.push_back(f.value);
  for (double delta : c.m.delta_grid) {
    const auto res =
        invariance_residuals(c.spec, fs, 0.0, delta, c.m.samples, c.path, c.lineage("invariance", k++), c.burn_in());
    for (std::size_t i = 0; i < fs.size(); ++i) {
      InequalityParams prm;
      prm.s = 0.0;
      prm.t = delta;
      auto r = equality_report("invariance", prm, res[i].residual, c.m.seed);
      r.verdict = res[i].pass ? Verdict::Pass : Verdict::Fail;
      r.notes.push_back(c.family.members[i].name);
      c.add(std::move(r));
    }
  }
}

void run_chapman_kolmogorov(Context& c) {
  std::uint64_t k = 0;
  for (double delta : c.m.delta_grid) {
    for (const auto& f : c.family.members) {
      for (const auto& x : c.xs) {
        const auto ck = chapman_kolmogorov_check(c.spec, f.value, 0.0, delta / 2, delta, x, c.m.samples, c.path,
                                                 c.lineage("chapman_kolmogorov", k++));
        InequalityParams prm;
        prm.s = 0.0;
        prm.t = delta;
        prm.x = x;
        auto r = equality_report("chapman_kolmogorov", prm, ck.residual, c.m.seed);
        r.notes.push_back(f.name);
        c.add(std::move(r));
      }
    }
  }
}

EmpiricalMeasure mu_at(const Context& c, double t, const std::string& tag) {
  return estimate_measure(c.spec, t, c.burn_in(), c.m.samples, c.path, c.lineage(tag, 0));
}

void run_measures(Context& c) {
  const EmpiricalMeasure mu = mu_at(c, 0.0, "measures");
  for (const auto& f : c.family.members) c.out.estimates.emplace_back("int " + f.name + " dmu_0", integrate(mu, f.value));
  for (double lambda : {0.05, 0.1, 0.2, 0.3, 0.6}) {
    const ExpMoment e = exp_moment(c.spec, mu, lambda, 2);
    c.out.estimates.emplace_back("exp_moment lambda=" + format_number(lambda) + (e.divergent ? " divergent" : ""),
                                 e.estimate);
  }
  const TightnessReport tight = tightness_check({mu}, 0.05);
  c.out.estimates.emplace_back("radius mass 0.95", McEstimate::exact(tight.quantile_radius.value_or(0.0), mu.size()));
  c.out.measures.emplace_back("mu_0.bin", mu);
}

struct LsiConstants {
  double eps;
  double beta;
  std::string source;
};

// Gaussian LSI for OU, otherwise the norm-bound route with p = 2, q = 3
LsiConstants lsi_constants(const Context& c, const EmpiricalMeasure& mu, double delta) {
  if (c.spec.ou && c.spec.ou->constant) return {ou_invariant_variance(*c.spec.ou), 0.0, "Gaussian LSI"};
  const double p = 2.0, q = 3.0;
  const double lambda0 = constants::supercontractive_lambda(p, q, c.spec.eta0, delta);
  const ExpMoment phi = exp_moment(c.spec, mu, lambda0, 2);
  if (phi.divergent) throw ExpMomentDiverged("no L^2 -> L^3 bound at gap " + format_number(delta));
  const double R = tightness_check({mu}, 1.0 - std::pow(2.0, -p)).quantile_radius.value_or(0.0);
  const double C = constants::supercontractive_norm(p, q, R, c.spec.eta0, delta, phi.estimate.value);
  const auto lsi = super_lsi_constants(p, q, delta, 0.0, std::max(1.0, std::pow(C, 1.0 / q)), c.spec.Lambda, c.spec.r0);
  return {lsi.M1, lsi.M2, "norm bound C_{2,3}"};
}

// Constants from the gaps 1, 2, 4, 8; small gaps need exp(lambda0 |x|^2) with
// lambda0 too large to estimate from particles. Divergent gaps are skipped.
std::vector<std::pair<double, LsiConstants>> lsi_grid(const Context& c, const EmpiricalMeasure& mu) {
  std::vector<std::pair<double, LsiConstants>> out;
  std::string last;
  for (double delta : {1.0, 2.0, 4.0, 8.0}) {
    try {
      out.emplace_back(delta, lsi_constants(c, mu, delta));
    } catch (const ExpMomentDiverged& e) {
      last = e.what();
    }
    if (c.spec.ou && c.spec.ou->constant) break;
  }
  if (out.empty()) throw ExpMomentDiverged(last + "; no gap gives LSI constants");
  return out;
}

void run_measure_lsi(Context& c) {
  const EmpiricalMeasure mu = mu_at(c, 0.0, "measure_lsi");
  for (const auto& [delta, k] : lsi_grid(c, mu)) {
    for (const auto* f : c.with_gradient()) {
      auto r = measure_lsi_check(mu, *f, k.eps, k.beta);
      r.params.delta = delta;
      r.notes.push_back(k.source);
      r.notes.push_back("family maximum is a lower bound; the check is conservative");
      c.add(std::move(r));
    }
  }
}

void run_hypercontractivity(Context& c) {
  const EmpiricalMeasure mu = mu_at(c, 0.0, "hypercontractivity_lsi");
  std::uint64_t k = 0;
  // one LSI pair serves every gap; take the first gap that yields one
  const LsiConstants lsi = lsi_grid(c, mu).front().second;
  for (double delta : c.m.delta_grid) {
    auto reports = hypercontractivity_recursion_check(c.spec, c.family, 2.0, lsi.eps, lsi.beta, 0.0, delta, c.budget,
                                                      c.lineage("hypercontractivity", k++));
    for (auto& r : reports) r.notes.push_back(lsi.source);
    c.add(std::move(reports));
  }
}

void run_supercontractivity(Context& c) {
  std::uint64_t k = 0;
  for (double delta : c.m.delta_grid)
    c.add(supercontractivity_norm_bound(c.spec, c.family, 2.0, 3.0, 0.0, delta, std::nullopt, c.budget,
                                        c.lineage("supercontractivity", k++)));
}

void run_ultrabounded(Context& c) {
  std::uint64_t k = 0;
  const MSupplier supplier =
      std::holds_alternative<Ultracontractive>(c.spec.regime.tag) ? MSupplier::Analytic : MSupplier::Empirical;
  for (double delta : c.m.delta_grid)
    c.add(ultrabounded_bound_check(c.spec, c.family, 0.0, delta, c.xs, supplier, c.m.samples, c.budget,
                                   c.lineage("ultrabounded", k++)));
}

HeatKernelOptions kernel_options(const Context& c) {
  HeatKernelOptions o;
  o.n = c.m.samples;
  return o;
}

BlowupFit fit(Context& c) {
  const std::vector<Vector> x0 = {Vector::Zero(c.spec.dimension)};
  BlowupFit f =
      blowup_exponent_fit(c.spec, c.m.delta_grid, 0.0, x0, kernel_options(c), c.budget, c.lineage("blowup", 0));
  std::vector<double> X, Y;
  for (std::size_t i = 0; i < f.deltas.size(); ++i) {
    if (!(f.sups[i] > 1)) continue;
    X.push_back(std::log(1.0 / f.deltas[i]));
    Y.push_back(std::log(std::log(f.sups[i])));
  }
  c.out.plots.push_back({"blowup.dat", "log(1/Delta) log(log(sup kernel))", X, Y});
  return f;
}

void run_blowup(Context& c) {
  const BlowupFit f = fit(c);
  InequalityParams prm;
  prm.s = 0.0;
  auto r = make_report("blowup_exponent", prm, McEstimate::exact(std::abs(f.slope - f.target)),
                       McEstimate::exact(0.3 * f.target), c.m.seed);
  r.notes.push_back("slope=" + format_number(f.slope) + " target=" + format_number(f.target));
  r.notes.push_back("C=" + format_number(f.C));
  for (const auto& n : f.notes) r.notes.push_back(n);
  c.add(std::move(r));
}

void run_heat_kernel(Context& c) {
  const BlowupFit f = fit(c);
  std::uint64_t k = 0;
  for (double delta : c.m.delta_grid)
    c.add(heat_kernel_sup_check(c.spec, 0.0, delta, {Vector::Zero(c.spec.dimension)}, f.C, kernel_options(c), c.budget,
                                c.lineage("heat_kernel", k++)));
}

void run_l1_l2(Context& c) {
  const BlowupFit f = fit(c);
  std::uint64_t k = 0;
  for (double delta : c.m.delta_grid)
    c.add(l1_l2_check(c.spec, c.family, 0.0, delta, f.C, c.budget, c.lineage("l1_l2", k++)));
}

void run_beta_profile(Context& c) {
  const EmpiricalMeasure mu = mu_at(c, 0.0, "beta_profile");
  const BetaProfile b = beta_profile(c.spec, mu, geomspace(0.02, 0.5, 10), c.family);
  c.out.plots.push_back({"beta_profile.dat", "eps beta_hat(eps)", b.eps, b.beta});
  InequalityParams prm;
  prm.s = 0.0;
  auto tail = make_report("beta_tail_exponent", prm, McEstimate::exact(std::abs(b.tail_exponent - b.target)),
                          McEstimate::exact(0.5 * b.target), c.m.seed);
  tail.notes.push_back("tail=" + format_number(b.tail_exponent) + " target=" + format_number(b.target));
  for (const auto& n : b.notes) tail.notes.push_back(n);
  c.add(std::move(tail));
  auto mono = make_report("beta_nonincreasing", prm, McEstimate::exact(0.0), McEstimate::exact(0.0), c.m.seed);
  mono.verdict = b.nonincreasing ? Verdict::Pass : Verdict::Fail;
  c.add(std::move(mono));
  c.out.estimates.emplace_back("c1 delta=1", McEstimate::exact(b.c1));
}

void run_uniform_integrability(Context& c) {
  std::uint64_t k = 0;
  for (double delta : c.m.delta_grid) {
    const auto ui = uniform_integrability_check(c.spec, c.family, 0.0, delta, {0.5, 1.0, 2.0, 4.0, 8.0}, c.budget,
                                                c.lineage("uniform_integrability", k++));
    c.out.plots.push_back({"ui_tail_" + short_number(delta) + ".dat", "r tail", ui.r, ui.tail});
    c.add(ui.reports);
    auto mono = make_report("ui_tail_nonincreasing", {}, McEstimate::exact(0.0), McEstimate::exact(0.0), c.m.seed);
    mono.params.t = delta;
    mono.verdict = ui.nonincreasing ? Verdict::Pass : Verdict::Fail;
    c.add(std::move(mono));
  }
}

void run_potential_contraction(Context& c) {
  std::uint64_t k = 0;
  for (double delta : c.m.delta_grid)
    for (const auto& f : c.family.members) {
      if (!nonnegative(f, c.spec.dimension)) continue;
      for (const auto& x : c.xs)
        c.add(potential_contraction_check(c.spec, *c.cfg.potential, f, 0.0, delta, x, c.m.samples, c.path,
                                          c.lineage("potential_contraction", k++)));
    }
}

void run_potential_subinvariance(Context& c) {
  std::uint64_t k = 0;
  for (double delta : c.m.delta_grid)
    for (const auto& f : c.family.members) {
      if (!nonnegative(f, c.spec.dimension)) continue;
      c.add(potential_subinvariance_check(c.spec, *c.cfg.potential, f, 0.0, delta, c.budget,
                                          c.lineage("potential_subinvariance", k++)));
    }
}

void run_oracle(Context& c) {
  std::uint64_t k = 0;
  for (double delta : c.m.delta_grid)
    for (const auto& f : c.family.members) {
      if (!f.closed_form) continue;
      for (const auto& x : c.xs) {
        const McEstimate mc = evolab::apply(c.spec, f.value, 0.0, delta, x, c.m.samples, c.path, c.lineage("oracle", k++));
        const double exact = ou_apply(*c.spec.ou, *f.closed_form, 0.0, delta, x);
        InequalityParams prm;
        prm.s = 0.0;
        prm.t = delta;
        prm.x = x;
        auto r = equality_report("oracle", prm, {mc.value - exact, mc.stderr, mc.n}, c.m.seed, 4.0);
        r.notes.push_back(f.name);
        c.add(std::move(r));
        c.out.estimates.emplace_back("G f " + f.name + " exact=" + format_number(exact), mc);
      }
    }
}

using Runner = void (*)(Context&);

const std::map<std::string, Runner>& runners() {
  static const std::map<std::string, Runner> r = {
      {"hypotheses", run_hypotheses},
      {"gradient", run_gradient},
      {"harnack", run_harnack},
      {"kernel_lsi", run_kernel_lsi},
      {"invariance", run_invariance},
      {"chapman_kolmogorov", run_chapman_kolmogorov},
      {"measures", run_measures},
      {"measure_lsi", run_measure_lsi},
      {"hypercontractivity", run_hypercontractivity},
      {"supercontractivity", run_supercontractivity},
      {"ultrabounded", run_ultrabounded},
      {"blowup", run_blowup},
      {"heat_kernel", run_heat_kernel},
      {"l1_l2", run_l1_l2},
      {"beta_profile", run_beta_profile},
      {"uniform_integrability", run_uniform_integrability},
      {"potential_contraction", run_potential_contraction},
      {"potential_subinvariance", run_potential_subinvariance},
  };
  return r;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw RuntimeError("cannot write " + path.string());
  os << text;
  if (!os) throw RuntimeError("write failed for " + path.string());
}

std::string now_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string RunManifest::canonical_json() const {
  nlohmann::ordered_json j;
  j["config_hash"] = hex(config_hash);
  j["checks"] = checks;
  j["samples"] = samples;
  j["seed"] = seed;
  j["step"] = format_number(step);
  j["burn_in"] = format_number(burn_in);
  j["family"] = family;
  std::vector<std::string> grid;
  for (double d : delta_grid) grid.push_back(format_number(d));
  j["delta_grid"] = grid;
  j["oracle"] = oracle;
  return j.dump();
}

std::uint64_t RunManifest::hash() const { return fnv1a64(canonical_json()); }

std::string RunManifest::hash_hex() const { return hex(hash()); }

std::vector<CheckInfo> available_checks() { return catalog(); }

void check_compatibility(const RunManifest& m, const LoadedConfig& cfg) {
  if (m.samples < 2) throw ConfigError("--samples must be at least 2");
  if (!(m.step > 0)) throw ConfigError("--step must be positive");
  if (m.burn_in < 0) throw ConfigError("--burn-in must be nonnegative");
  if (m.delta_grid.empty()) throw ConfigError("--delta-grid is empty");
  for (double d : m.delta_grid)
    if (!(d > 0)) throw ConfigError("gaps in --delta-grid must be positive");
  family_by_name(m.family, cfg.spec.dimension);
  if (m.checks.empty() && !m.oracle) throw ConfigError("no checks selected");
  std::set<std::string> seen;
  for (const auto& name : m.checks) {
    if (!seen.insert(name).second) throw ConfigError("check '" + name + "' listed twice");
    auto it = std::find_if(catalog().begin(), catalog().end(), [&](const CheckInfo& c) { return c.name == name; });
    if (it == catalog().end()) throw ConfigError("unknown check '" + name + "'");
    if (it->needs == "ultracontractive") require_ultracontractive(cfg.spec, name);
    if (it->needs == "ultrabounded" && cfg.spec.regime.rank() < 2)
      throw RegimeMismatch(name + " needs an ultrabounded or ultracontractive spec, got " +
                           cfg.spec.regime.to_string());
    if (it->needs == "potential" && !cfg.potential) throw ConfigError(name + " needs a [potential] section");
    if ((name == "blowup" || name == "heat_kernel" || name == "l1_l2") && m.delta_grid.size() < 5)
      throw ConfigError(name + " fits the blow-up constant and needs at least 5 gaps in --delta-grid");
    if ((name == "blowup" || name == "heat_kernel") && cfg.spec.dimension > 3)
      throw DimensionTooHigh(name + " needs d <= 3");
  }
  if (m.oracle && !(cfg.spec.ou && cfg.spec.ou->constant)) throw ConfigError("--oracle needs a constant OU spec");
}

Artifacts run_checks(const RunManifest& m, const LoadedConfig& cfg) {
  check_compatibility(m, cfg);
  Context c(m, cfg);
  for (const auto& name : m.checks) runners().at(name)(c);
  if (m.oracle) run_oracle(c);
  c.out.reports = sort_reports(std::move(c.out.reports));
  return std::move(c.out);
}

RunResult run(RunManifest m, bool force) {
  RunResult result;
  fs::path created;
  try {
    const LoadedConfig cfg = load_config(m.config_path);
    m.config_hash = cfg.content_hash;
    if (m.timestamp.empty()) m.timestamp = now_utc();
    check_compatibility(m, cfg);
    const fs::path dir = fs::path(m.out) / m.hash_hex();
    result.directory = dir.string();
    if (fs::exists(dir) && !force)
      throw ConfigError("output directory " + dir.string() + " exists; refusing to overwrite (use --force)");
    fs::create_directories(dir);
    created = dir;
    nlohmann::ordered_json manifest = nlohmann::ordered_json::parse(m.canonical_json());
    manifest["config_path"] = m.config_path;
    manifest["spec"] = cfg.spec.canonical;
    manifest["hash"] = m.hash_hex();
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");
    write_text(dir / "timestamp.txt", m.timestamp + "\n");

    Artifacts art = run_checks(m, cfg);
    write_text(dir / "reports.csv", report_csv(art.reports));
    write_text(dir / "summary.json", summary_json(art.reports));
    if (!art.estimates.empty()) {
      std::ofstream os(dir / "estimates.csv", std::ios::binary | std::ios::trunc);
      write_estimate_csv(os, art.estimates, m.seed);
    }
    for (const auto& p : art.plots) {
      std::ofstream os(dir / p.file, std::ios::binary | std::ios::trunc);
      write_plot(os, p.header, p.x, p.y);
    }
    for (const auto& [file, mu] : art.measures) write_measure((dir / file).string(), mu, cfg.spec.hash());
    result.exit_code = exit_code(art.reports);
    result.reports = std::move(art.reports);
  } catch (const ConfigError& e) {
    result.exit_code = kExitConfig;
    result.diagnostic = e.what();
  } catch (const std::exception& e) {
    result.exit_code = kExitRuntime;
    result.diagnostic = e.what();
  }
  // no half-written artifact sets
  if (result.exit_code >= kExitConfig && !created.empty()) {
    std::error_code ec;
    fs::remove_all(created, ec);
  }
  return result;
}

}  // namespace evolab
