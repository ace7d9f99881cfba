#include "helpers.hpp"

#include "evolab/inequalities.hpp"
#include "evolab/oracle.hpp"

#include <doctest.h>

using namespace evolab;
using testing::scalar;
using testing::vec;

namespace {

const PathConfig cfg{.step = 1e-2};

NormBudget small_budget() {
  NormBudget b;
  b.particles = 4000;
  b.outer = 200;
  b.inner = 64;
  return b;
}

// one-variable golden-section maximizer, independent of the library
double golden_max(const std::function<double(double)>& g, double a, double b) {
  const double r = (std::sqrt(5.0) - 1) / 2;
  double c = b - r * (b - a), d = a + r * (b - a);
  for (int i = 0; i < 200 && b - a > 1e-15 * (1 + std::abs(a)); ++i) {
    if (g(c) > g(d)) {
      b = d;
    } else {
      a = c;
    }
    c = b - r * (b - a);
    d = a + r * (b - a);
  }
  return g((a + b) / 2);
}

}  // namespace

TEST_CASE("verdict rule") {
  CHECK(decide({1.0, 0.0, 10}, {2.0, 0.0, 10}) == Verdict::Pass);
  CHECK(decide({2.0, 0.0, 10}, {1.0, 0.0, 10}) == Verdict::Fail);
  CHECK(decide({1.0, 0.0, 10}, {1.0, 0.0, 10}) == Verdict::Pass);
  // within 3 se but se small relative to rhs
  CHECK(decide({1.02, 0.01, 10}, {1.0, 0.0, 10}) == Verdict::Pass);
  CHECK(decide({1.04, 0.01, 10}, {1.0, 0.0, 10}) == Verdict::Fail);
  // error bars dominate
  CHECK(decide({1.1, 0.5, 10}, {1.0, 0.5, 10}) == Verdict::Inconclusive);
  // a paired margin se overrides the independent one
  CHECK(decide({1.1, 0.5, 10}, {1.0, 0.5, 10}, 0.001) == Verdict::Fail);
  // rounding noise on an exact equality
  CHECK(decide({1.0 + 1e-15, 0.0, 10}, {1.0, 0.0, 10}) == Verdict::Pass);
  const auto r = make_report("x", {}, {1.0, 0.1, 10}, {2.0, 0.2, 10}, 3);
  CHECK(r.margin == 1.0);
  CHECK(r.margin_stderr == doctest::Approx(std::hypot(0.1, 0.2)));
  CHECK(to_string(Verdict::Inconclusive) == "inconclusive");
}

TEST_CASE("gradient estimate") {
  const auto ou = make_ou(1.0, 1.0);
  const auto lin = linear_function(scalar(1.0));
  for (double delta : {0.5, 1.0}) {
    const auto r = gradient_estimate_check(ou, lin, 1.0, 0.0, delta, scalar(0.3), 2000, {.step = 1e-3}, {40});
    CHECK(r.rhs.value == doctest::Approx(std::exp(-delta)).epsilon(1e-12));
    CHECK(r.lhs.value == doctest::Approx(std::exp(-delta)).epsilon(0.01));
    CHECK(r.verdict != Verdict::Fail);
  }
  const auto c = gradient_estimate_check(ou, constant_function(3.0, 1), 2.0, 0.0, 1.0, scalar(0.3), 200, cfg, {41});
  CHECK(c.lhs.value == 0.0);
  CHECK(c.rhs.value == 0.0);
  CHECK(c.verdict == Verdict::Pass);

  const auto p = make_power(4.0);
  const auto bump = gaussian_bump(1.0, scalar(0.5));
  for (double x : {-2.0, -1.0, 0.0, 1.0, 2.0}) {
    const auto r = gradient_estimate_check(p, bump, 2.0, 0.0, 0.5, scalar(x), 2000, cfg, {42});
    CHECK(r.verdict != Verdict::Fail);
  }
}

TEST_CASE("homogeneous checks are scale invariant") {
  const auto p = make_power(4.0);
  const auto f = gaussian_bump(2.0, scalar(0.3));
  const auto g = scaled(f, 3.0);
  const double pw = 2.0;
  const auto a = gradient_estimate_check(p, f, pw, 0.0, 0.5, scalar(0.4), 500, cfg, {43});
  const auto b = gradient_estimate_check(p, g, pw, 0.0, 0.5, scalar(0.4), 500, cfg, {43});
  CHECK(b.margin / std::pow(3.0, pw) == doctest::Approx(a.margin).epsilon(1e-12));
  CHECK(a.verdict == b.verdict);

  const auto h1 = harnack_check(p, f, pw, 0.0, 0.5, scalar(0.0), scalar(1.0), 500, cfg, {44});
  const auto h2 = harnack_check(p, g, pw, 0.0, 0.5, scalar(0.0), scalar(1.0), 500, cfg, {44});
  CHECK(h2.margin / std::pow(3.0, pw) == doctest::Approx(h1.margin).epsilon(1e-12));
  CHECK(h1.verdict == h2.verdict);
}

TEST_CASE("kernel LSI") {
  const auto ou = make_ou(1.0, 1.0);
  const auto c = kernel_lsi_check(ou, constant_function(1.7, 1), 2.0, 0.0, 1.0, scalar(0.2), 300, cfg, {45});
  CHECK(c.lhs.value == doctest::Approx(c.rhs.value).epsilon(1e-14));
  CHECK(c.lhs.value == doctest::Approx(1.7 * 1.7 * std::log(1.7 * 1.7)).epsilon(1e-14));
  CHECK(c.verdict == Verdict::Pass);

  const auto f = shifted(gaussian_bump(1.0, scalar(0.0)), 0.1);
  const auto r = kernel_lsi_check(ou, f, 2.0, 0.0, 1.0, scalar(0.3), 20000, cfg, {46});
  CHECK(r.verdict == Verdict::Pass);
  // the four terms against quadrature under the exact OU law
  const auto law = ou_mean_var(*ou.ou, 0.0, 1.0, scalar(0.3));
  auto gh = [&](const std::function<double(const Vector&)>& g) {
    return gauss_hermite_expectation(g, law.mean, law.var);
  };
  const double A = gh([&](const Vector& y) { const double v = f(y) * f(y); return v * std::log(v); });
  const double B = gh([&](const Vector& y) { return f.gradient(y).squaredNorm(); });
  const double C = gh([&](const Vector& y) { return f(y) * f(y); });
  const double k = 4.0 * (1 - std::exp(-2.0));
  CHECK(A <= k * B + C * std::log(C));
  CHECK(std::abs(r.lhs.value - A) <= 4.0 * r.lhs.stderr + 0.01);
  CHECK(std::abs(r.rhs.value - (k * B + C * std::log(C))) <= 4.0 * r.rhs.stderr + 0.01);

  CHECK(constants::kernel_lsi(2.0, 1.0, -1.0, 50.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(constants::kernel_lsi(3.0, 2.0, -0.5, 1e3) == doctest::Approx(36.0).epsilon(1e-15));
  CHECK_THROWS_AS(kernel_lsi_check(ou, f, 1.5, 0.0, 1.0, scalar(0.0), 10, cfg, {1}), PreconditionError);
}

TEST_CASE("Harnack") {
  const auto ou = make_ou(1.0, 1.0);
  const auto f = lorentzian(1.0, scalar(0.0));

  // x = y: factor 1 and the report is Jensen's inequality
  const auto j = harnack_check(ou, f, 2.0, 0.0, 0.5, scalar(0.4), scalar(0.4), 2000, cfg, {47});
  const auto e = simulate(ou, 0.0, 0.5, scalar(0.4), 2000, cfg, {47});
  const auto g = apply(e, f.value);
  const auto g2 = apply(e, [&](const Vector& y) { return f(y) * f(y); });
  CHECK(j.lhs.value == doctest::Approx(g.value * g.value).epsilon(1e-14));
  CHECK(j.rhs.value == doctest::Approx(g2.value).epsilon(1e-14));
  CHECK(j.verdict == Verdict::Pass);

  const auto c = harnack_check(ou, constant_function(2.0, 1), 2.0, 0.0, 0.5, scalar(0.0), scalar(1.0), 100, cfg, {48});
  CHECK(c.margin == doctest::Approx(4.0 * (std::exp(2.0 / (4.0 * 0.5)) - 1.0)).epsilon(1e-12));

  const auto r = harnack_check(ou, f, 2.0, 0.0, 0.5, scalar(0.0), scalar(1.0), 20000, cfg, {49});
  CHECK(r.verdict == Verdict::Pass);
  const auto lx = ou_mean_var(*ou.ou, 0.0, 0.5, scalar(0.0));
  const auto ly = ou_mean_var(*ou.ou, 0.0, 0.5, scalar(1.0));
  const double gx = gauss_hermite_expectation(f.value, lx.mean, lx.var);
  const double gy = gauss_hermite_expectation([&](const Vector& y) { return f(y) * f(y); }, ly.mean, ly.var);
  const double F = std::exp(2.0 * 1.0 / (4.0 * 1.0 * 1.0 * 0.5));
  CHECK(gx * gx <= gy * F);
  CHECK(std::abs(r.lhs.value - gx * gx) <= 4.0 * r.lhs.stderr + 0.005);
  CHECK(std::abs(r.rhs.value - gy * F) <= 4.0 * r.rhs.stderr + 0.005);

  const auto ex = simulate(ou, 0.0, 0.5, scalar(0.0), 50, cfg, {1});
  const auto ey = simulate(ou, 0.0, 0.5, scalar(1.0), 50, cfg, {2});
  CHECK_THROWS_AS(harnack_check(ou, ex, ey, f, 2.0, scalar(0.0), scalar(1.0)), PreconditionError);
}

TEST_CASE("measure LSI") {
  const auto ou = make_ou(1.0, 1.0);
  const auto mu = estimate_measure(ou, 0.0, 10.0, 5000, cfg, {50});
  const auto c = measure_lsi_check(mu, constant_function(2.5, 1), 0.5, 0.1);
  CHECK(c.lhs.value == 0.0);
  CHECK(c.verdict == Verdict::Pass);

  // Gaussian LSI for N(0,1): eps = 1 (sigma^2), beta = 0
  const auto fam = standard_family(1, 4, 3);
  for (const auto& f : fam.members) {
    const auto a = measure_lsi_check(mu, f, 1.0, 0.0);
    CHECK(a.verdict != Verdict::Fail);
    const auto b = measure_lsi_check(mu, scaled(f, 2.0), 1.0, 0.0);
    CHECK(b.verdict == a.verdict);
    CHECK(b.margin / 4.0 == doctest::Approx(a.margin).epsilon(1e-12).scale(1e-12));
  }
}

TEST_CASE("LSI constants from a norm bound") {
  const auto m = super_lsi_constants(2.0, 3.0, 1e3, 0.0, 5.0, 1.0, -1.0);
  CHECK(m.M1 == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(m.M2 == doctest::Approx(3.0 * std::log(5.0)));
  CHECK(super_lsi_constants(2.0, 3.0, 1.0, 0.0, 1.0, 1.0, -1.0).M2 == 0.0);
  CHECK(super_lsi_constants(2.0, 3.0, 1e-9, 0.0, 1.0, 1.0, -1.0).M1 < 1e-7);
  CHECK_THROWS_AS(super_lsi_constants(3.0, 3.0, 1.0, 0.0, 1.0, 1.0, -1.0), DegenerateExponents);
  CHECK_THROWS_AS(super_lsi_constants(3.0, 2.0, 1.0, 0.0, 1.0, 1.0, -1.0), DegenerateExponents);
}

TEST_CASE("hypercontractive exponent and recursion") {
  CHECK(constants::hypercontractive_exponent(2.0, 1.0, 2.0, 1.0) == doctest::Approx(std::exp(1.0) + 1.0));
  CHECK(constants::hypercontractive_exponent(2.0, 1.0, 2.0, 0.0) == 2.0);
  CHECK(constants::hypercontractive_factor(0.7, 2.0, 2.0) == 1.0);

  const auto ou = make_ou(1.0, 1.0);
  TestFunctionFamily fam{"c", {constant_function(1.5, 1), gaussian_bump(1.0, scalar(0.0))}};
  // Gaussian LSI: eps = 1, beta = 0
  const auto reps = hypercontractivity_recursion_check(ou, fam, 2.0, 1.0, 0.0, 0.0, 0.5, small_budget(), {51});
  REQUIRE(reps.size() == 2);
  for (const auto& r : reps) CHECK(r.verdict != Verdict::Fail);
  CHECK(reps[0].lhs.value == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(reps[0].rhs.value == doctest::Approx(1.5).epsilon(1e-12));

  const auto zero = hypercontractivity_recursion_check(ou, fam, 2.0, 1.0, 0.3, 0.0, 0.0, small_budget(), {52});
  for (const auto& r : zero) CHECK(*r.params.q == 2.0);
}

TEST_CASE("supercontractivity") {
  const auto ou = make_ou(1.0, 1.0);
  const auto fam = gaussian_family(1, {0.0, 1.0}, {1.0});
  // lambda0 = q/(2 (p-1) Delta) >= 1/2 for Delta <= 3
  CHECK_THROWS_AS(supercontractivity_norm_bound(ou, fam, 2.0, 3.0, 0.0, 0.5, std::nullopt, small_budget(), {53}),
                  ExpMomentDiverged);

  const auto p = make_power(4.0);
  TestFunctionFamily with_const = fam;
  with_const.members.push_back(constant_function(1.0, 1));
  const auto r = supercontractivity_norm_bound(p, with_const, 2.0, 3.0, 0.0, 1.0, std::nullopt, small_budget(), {54});
  CHECK(r.verdict == Verdict::Pass);
  CHECK(std::isfinite(r.rhs.value));
  CHECK(r.rhs.value >= 8.0);
  CHECK(r.lhs.value >= 1.0 - 1e-12);
}

TEST_CASE("ultrabounded bound") {
  const auto p = make_power(4.0);
  const auto fam = standard_family(1, 2, 5);
  const std::vector<Vector> xs{scalar(-1.0), scalar(0.0), scalar(1.0)};
  const auto r = ultrabounded_bound_check(p, fam, 0.0, 1.0, xs, MSupplier::Analytic, 1000, small_budget(), {55});
  CHECK(r.verdict == Verdict::Pass);
  double last = std::numeric_limits<double>::infinity();
  for (double d : {0.25, 0.5, 1.0, 2.0}) {
    const double C = constants::ultrabounded_norm(1.0, 1.0, d, mtilde_bound(4.0, 1.0, 1.0, 1, d / 2, 1.0 / d).bound);
    CHECK(C < last);
    last = C;
  }
  CHECK_THROWS_AS(ultrabounded_bound_check(make_ou(1.0, 1.0), fam, 0.0, 1.0, xs, MSupplier::Analytic, 10,
                                           small_budget(), {1}),
                  RegimeMismatch);
}

TEST_CASE("L1 to L2 and heat kernel preconditions") {
  const auto ou = make_ou(1.0, 1.0);
  const auto fam = gaussian_family(1, {0.0}, {1.0});
  CHECK_THROWS_AS(l1_l2_check(ou, fam, 0.0, 1.0, 1.0, small_budget(), {1}), RegimeMismatch);
  CHECK_THROWS_AS(heat_kernel_sup_check(ou, 0.0, 1.0, {scalar(0.0)}, 1.0, {}, small_budget(), {1}), RegimeMismatch);
  CHECK_THROWS_AS(blowup_exponent_fit(ou, {0.1, 0.2, 0.3, 0.4, 0.5}, 0.0, {scalar(0.0)}, {}, small_budget(), {1}),
                  RegimeMismatch);
  const auto p4 = make_power(4.0, 4);
  CHECK_THROWS_AS(heat_kernel_sup_check(p4, 0.0, 1.0, {Vector::Zero(4)}, 1.0, {}, small_budget(), {1}),
                  DimensionTooHigh);

  const auto p = make_power(4.0);
  TestFunctionFamily one{"c", {constant_function(1.0, 1)}};
  const auto r = l1_l2_check(p, one, 0.0, 0.5, 0.5, small_budget(), {56});
  CHECK(r.lhs.value == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(r.verdict == Verdict::Pass);
}

TEST_CASE("kernel sup grows as the gap shrinks") {
  const auto p = make_power(4.0);
  HeatKernelOptions opt;
  opt.mode = KernelMode::Lebesgue;
  opt.n = 20000;
  const std::vector<Vector> xs{scalar(0.0)};
  const auto near = kernel_sup(p, 0.0, 0.25, xs, opt, nullptr, {57});
  const auto far = kernel_sup(p, 0.0, 1.0, xs, opt, nullptr, {57});
  CHECK(near.sup >= far.sup);
  CHECK(near.positive);
  const auto r = heat_kernel_sup_check(p, 0.0, 0.25, xs, 1.0, opt, small_budget(), {57});
  CHECK(r.lhs.value == near.sup);
}

TEST_CASE("blow-up fit") {
  const std::vector<double> d{0.1, 0.15, 0.22, 0.33, 0.5, 0.75};
  std::vector<double> s;
  for (double x : d) s.push_back(std::exp(0.7 / (x * x)));
  const auto fit = fit_blowup(d, s);
  CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(std::abs(fit.C - 0.7) <= 1e-6);
  CHECK_THROWS_AS(fit_blowup({0.1, 0.2, 0.3, 0.4}, {5, 4, 3, 2}), FitIllConditioned);
  CHECK_THROWS_AS(fit_blowup(d, {5, 4, 3, 2, 1, 0.5}), FitIllConditioned);
}

TEST_CASE("beta profile") {
  const auto p = make_power(4.0);
  const auto mu = estimate_measure(p, 0.0, 10.0, 5000, cfg, {58});
  const auto fam = standard_family(1, 4, 7);
  std::vector<double> eps{0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0, 1e3};
  const auto b = beta_profile(p, mu, eps, fam, 1.0);
  CHECK(b.nonincreasing);
  CHECK(b.beta.back() == 0.0);
  CHECK(b.target == 2.0);
  // min_t (t^4 - lambda t^2) = -lambda^2/4 => c1 = 1/4
  const double lambda = 1.7;
  const double c1_oracle =
      golden_max([&](double t) { return -(std::pow(t, 4) - lambda * t * t); }, 0.0, 10.0) / std::pow(lambda, 2.0);
  CHECK(std::abs(b.c1 - c1_oracle) <= 1e-10);
  CHECK_THROWS_AS(beta_profile(make_ou(1.0, 1.0), mu, eps, fam), RegimeMismatch);
}

TEST_CASE("mtilde bound") {
  const auto m = mtilde_bound(4.0, 1.0, 1.0, 1, 1.0, 0.5);
  // max_y 2 lambda y^2 - y^4/2 = 2 lambda^2
  const double lambda = 0.8;
  const double ck_oracle =
      golden_max([&](double y) { return 2 * lambda * y * y - 0.5 * std::pow(y, 4); }, 0.0, 10.0) / (lambda * lambda);
  CHECK(std::abs(m.C_kappa - ck_oracle) <= 1e-10);
  CHECK(std::abs(m.K0 - 2.0) <= 1e-12);
  CHECK(m.C1 == doctest::Approx(4.0 * m.C_kappa));
  CHECK(m.C2 == doctest::Approx(4.0));
  double last = std::numeric_limits<double>::infinity();
  for (double l : {1.0, 0.3, 0.1, 1e-2, 1e-4, 1e-8}) {
    const double v = mtilde_bound(4.0, 1.0, 1.0, 1, 1.0, l).bound;
    CHECK(v >= 1.0);
    CHECK(v <= last);
    last = v;
  }
  CHECK(last == doctest::Approx(1.0).epsilon(1e-3));
  CHECK_THROWS_AS(mtilde_bound(2.0, 1.0, 1.0, 1, 1.0, 0.5), PreconditionError);
}

TEST_CASE("uniform integrability") {
  const auto p = make_power(4.0);
  const auto fam = standard_family(1, 2, 5);
  const auto ui = uniform_integrability_check(p, fam, 0.0, 1.0, {0.5, 1.0, 2.0, 1e6}, small_budget(), {59});
  CHECK(ui.nonincreasing);
  CHECK(ui.tail.back() == 0.0);
  for (const auto& r : ui.reports) CHECK(r.verdict == Verdict::Pass);
  for (std::size_t i = 1; i < ui.envelope.size(); ++i) CHECK(ui.envelope[i] < ui.envelope[i - 1]);
}

TEST_CASE("potential terms") {
  const auto p = make_power(4.0);
  const auto f = gaussian_bump(1.0, scalar(0.0));
  const auto zero = potential_contraction_check(p, PotentialSpec::constant(0.0), f, 0.0, 1.0, scalar(0.5), 500, cfg, {60});
  CHECK(zero.margin == 0.0);
  CHECK(zero.verdict == Verdict::Pass);

  const auto one = potential_contraction_check(p, PotentialSpec::constant(1.0), f, 0.0, 1.0, scalar(0.5), 500, cfg, {61});
  CHECK(one.lhs.value == doctest::Approx(one.rhs.value).epsilon(1e-12));
  CHECK(one.verdict == Verdict::Pass);

  PotentialSpec c;
  c.c = [](double, const Vector& y) { return 1.0 + y.squaredNorm(); };
  c.c0 = 1.0;
  const auto strict = potential_contraction_check(p, c, f, 0.0, 1.0, scalar(0.5), 5000, cfg, {62});
  CHECK(strict.verdict == Verdict::Pass);
  CHECK(strict.margin > 3.0 * strict.margin_stderr);

  const auto sub = potential_subinvariance_check(p, c, f, 0.0, 1.0, small_budget(), {63});
  CHECK(sub.verdict == Verdict::Pass);
  CHECK(sub.margin > 0.0);
  PotentialSpec neg = PotentialSpec::constant(-1.0);
  CHECK_THROWS_AS(potential_subinvariance_check(p, neg, f, 0.0, 1.0, small_budget(), {1}), PreconditionError);
}
