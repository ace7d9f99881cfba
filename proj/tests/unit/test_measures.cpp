#include "helpers.hpp"

#include "evolab/ensemble_io.hpp"
#include "evolab/families.hpp"
#include "evolab/measures.hpp"
#include "evolab/oracle.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <numbers>

using namespace evolab;
using testing::scalar;
using testing::vec;

namespace {

const PathConfig coarse{.step = 1e-2};

OperatorSpec periodic_ou() {
  OUCoefficients c;
  c.theta = [](double t) { return 2.0 + std::sin(t); };
  c.q = [](double) { return 1.0; };
  return make_ou(c, 1, 1.0, 1.0, 1.0);
}

const EmpiricalMeasure& stationary() {
  static const EmpiricalMeasure mu = estimate_measure(make_ou(1.0, 1.0), 0.0, 10.0, 40000, coarse, {101});
  return mu;
}

}  // namespace

TEST_CASE("OU stationary variance") {
  const auto& mu = stationary();
  CHECK(mu.size() == 40000);
  CHECK(mu.weight() * static_cast<double>(mu.size()) == 1.0);
  const auto v = integrate(mu, [](const Vector& y) { return y.squaredNorm(); });
  CHECK(std::abs(v.value - 1.0) <= 4.0 * v.stderr);
  CHECK(mu.coupling_bias == 0.0);
}

TEST_CASE("periodic coefficients give a periodic measure") {
  const auto spec = periodic_ou();
  const double t = 0.7;
  const auto a = estimate_measure(spec, t, 10.0, 5000, coarse, {102});
  const auto b = estimate_measure(spec, t + 2 * std::numbers::pi, 10.0, 5000, coarse, {103});
  CHECK(ks_distance(a.particles, b.particles) < 3.0 * ks_critical(5000, 5000, 0.05));
}

TEST_CASE("burn-in saturation and forgetting") {
  const auto p = make_power(4.0);
  const auto t10 = estimate_measure(p, 0.0, 10.0, 10000, coarse, {104});
  const auto t20 = estimate_measure(p, 0.0, 20.0, 10000, coarse, {105});
  const ScalarFn id = [](const Vector& y) { return y[0]; };
  const auto m10 = integrate(t10, id), m20 = integrate(t20, id);
  CHECK(std::abs(m10.value - m20.value) < 3.0 * std::hypot(m10.stderr, m20.stderr));

  // synchronous coupling: same noise, different starts
  const double T = 3.0;
  const auto a = estimate_measure(p, 0.0, T, 4000, coarse, {106}, scalar(-2.0));
  const auto b = estimate_measure(p, 0.0, T, 4000, coarse, {106}, scalar(2.0));
  const auto ma = integrate(a, id), mb = integrate(b, id);
  CHECK(std::abs(ma.value - mb.value) <= std::exp(p.r0 * T) * 4.0 + 3.0 * std::hypot(ma.stderr, mb.stderr));
  CHECK(a.coupling_bias == doctest::Approx(std::exp(p.r0 * T) * 2.0));

  const auto c = estimate_measure(p, 0.0, 10.0, 4000, coarse, {107});
  const auto d = estimate_measure(p, 0.0, 10.0, 4000, coarse, {108});
  CHECK(ks_distance(c.particles, d.particles) < ks_critical(4000, 4000, 0.01));
}

TEST_CASE("invariance residuals") {
  const auto ou = make_ou(1.0, 1.0);
  const auto k = invariance_residual(ou, [](const Vector&) { return 0.25; }, 0.0, 1.0, 2000, coarse, {109});
  CHECK(k.residual.value == 0.0);
  CHECK(k.pass);

  const std::vector<ScalarFn> fs{[](const Vector& y) { return std::cos(y[0]); },
                                 [](const Vector& y) { return y.squaredNorm(); }};
  const auto r = invariance_residuals(ou, fs, 0.0, 1.0, 20000, coarse, {110});
  REQUIRE(r.size() == 2);
  // Re E e^{iY}, Y ~ N(0,1)
  CHECK(std::abs(r[0].rhs.value - std::exp(-0.5)) <= 4.0 * r[0].rhs.stderr + 0.005);
  CHECK(r[0].residual.value < 3.0 * r[0].residual.stderr);
  CHECK(std::abs(r[1].lhs.value - 1.0) <= 4.0 * r[1].lhs.stderr + 0.01);
  CHECK(std::abs(r[1].rhs.value - 1.0) <= 4.0 * r[1].rhs.stderr + 0.01);
}

TEST_CASE("L^p norms") {
  const auto& mu = stationary();
  for (double p : {1.0, 2.0, 3.5}) {
    const auto c = lp_norm(mu, [](const Vector&) { return -2.5; }, p);
    CHECK(c.value == doctest::Approx(2.5).epsilon(1e-14));
    CHECK(c.stderr == 0.0);
  }
  const ScalarFn id = [](const Vector& y) { return y[0]; };
  const auto two = lp_norm(mu, id, 2.0);
  CHECK(std::abs(two.value - 1.0) <= 4.0 * two.stderr + 0.005);
  const auto four = lp_norm(mu, id, 4.0);
  CHECK(std::pow(3.0, 0.25) == doctest::Approx(1.3161).epsilon(1e-4));
  CHECK(std::abs(four.value - std::pow(3.0, 0.25)) <= 4.0 * four.stderr + 0.005);
  CHECK_THROWS_AS(lp_norm(mu, id, 0.5), PreconditionError);
}

TEST_CASE("exponential moments") {
  const auto ou = make_ou(1.0, 1.0);
  const auto& mu = stationary();
  const auto m3 = exp_moment(ou, mu, 0.3, 2);
  CHECK(std::abs(m3.estimate.value - 1.0 / std::sqrt(0.4)) <= 3.0 * m3.estimate.stderr + 0.01);
  CHECK_FALSE(m3.divergent);

  const auto m6 = exp_moment(ou, mu, 0.6, 2);
  CHECK(m6.divergent);
  REQUIRE(m6.analytic_divergent);
  CHECK(*m6.analytic_divergent);

  const auto m1 = exp_moment(mu, 1.0, 1);
  const double phi1 = 0.5 * std::erfc(-1.0 / std::sqrt(2.0));
  // 2.7743 exactly; the commonly quoted 2.7724 is off in the fourth digit
  CHECK(2.0 * std::exp(0.5) * phi1 == doctest::Approx(2.7724).epsilon(1e-3));
  CHECK(std::abs(m1.estimate.value - 2.0 * std::exp(0.5) * phi1) <= 4.0 * m1.estimate.stderr + 0.01);

  double last = 0.0;
  for (double lambda : {0.05, 0.1, 0.2, 0.3, 0.45, 0.6, 1.0}) {
    const auto m = exp_moment(mu, lambda, 2);
    CHECK(m.log_value >= last);
    last = m.log_value;
  }
  // overflow stays finite in log space
  const auto huge = exp_moment(mu, 200.0, 2);
  CHECK(std::isfinite(huge.log_value));
}

TEST_CASE("tightness") {
  const auto& mu = stationary();
  const auto rep = tightness_check({mu}, 0.05);
  CHECK(rep.pass);
  REQUIRE(rep.quantile_radius);
  CHECK(*rep.quantile_radius == doctest::Approx(1.96).epsilon(0.03));
  for (std::size_t j = 1; j < rep.min_mass.size(); ++j) CHECK(rep.min_mass[j] >= rep.min_mass[j - 1]);

  const auto all = tightness_check({mu}, 1.0);
  CHECK(all.pass);
  REQUIRE(all.radius);
  CHECK(*all.radius == 0.0);

  CHECK_FALSE(tightness_check({mu}, 0.0).pass);
}

TEST_CASE("ensemble and measure dumps round-trip") {
  const auto dir = std::filesystem::temp_directory_path() / "evolab_unit_io";
  std::filesystem::create_directories(dir);
  const auto p = make_power(4.0, 2);
  const auto e = simulate_weighted(p, PotentialSpec::constant(0.5), 0.0, 0.3, vec({1.0, 0.5}), 64, coarse, {5, 1, 2});
  write_ensemble((dir / "e.bin").string(), e, vec({1.0, 0.5}), p.hash());
  EnsembleHeader h;
  const auto back = read_ensemble((dir / "e.bin").string(), &h);
  CHECK(back.states == e.states);
  CHECK(back.log_weights == e.log_weights);
  CHECK(h.spec_hash == p.hash());
  CHECK(h.lineage == SeedLineage{5, 1, 2});
  CHECK(h.x == vec({1.0, 0.5}));
  CHECK(h.kind == DumpKind::Ensemble);

  const auto mu = estimate_measure(p, 1.0, 2.0, 50, coarse, {9});
  write_measure((dir / "m.bin").string(), mu, p.hash());
  const auto mu2 = read_measure((dir / "m.bin").string(), &h);
  CHECK(mu2.particles == mu.particles);
  CHECK(h.kind == DumpKind::Measure);
  CHECK(h.time_tag == 1.0);
  CHECK(h.burn_in == 2.0);
  CHECK_THROWS_AS(read_ensemble((dir / "m.bin").string()), Error);

  std::FILE* f = std::fopen((dir / "bad.bin").string().c_str(), "wb");
  std::fputs("NOTMAGIC", f);
  std::fclose(f);
  CHECK_THROWS_AS(read_header((dir / "bad.bin").string()), Error);
  std::filesystem::remove_all(dir);
}
