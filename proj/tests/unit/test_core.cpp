#include "evolab/core.hpp"
#include "evolab/random.hpp"

#include <doctest.h>

#include <cstdlib>
#include <numeric>
#include <random>

using namespace evolab;

TEST_CASE("sample mean and stderr") {
  const std::vector<double> v{1.0, 2.0, 3.0, 4.0};
  const auto e = estimate_mean(v);
  CHECK(e.value == 2.5);
  CHECK(e.stderr == doctest::Approx(std::sqrt(5.0 / 3.0 / 4.0)));
  CHECK(e.n == 4);
  const std::vector<double> c(1000, 0.1);
  const auto k = estimate_mean(c);
  CHECK(k.value == 0.1);
  CHECK(k.stderr == 0.0);
}

TEST_CASE("combining splits reproduces the whole") {
  std::mt19937_64 rng(1);
  std::lognormal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(10007);
  for (double& x : v) x = d(rng);
  const auto whole = estimate_mean(v);
  for (std::size_t cut : {std::size_t{2}, std::size_t{500}, std::size_t{10000}}) {
    const auto a = estimate_mean(std::span<const double>(v).first(cut));
    const auto b = estimate_mean(std::span<const double>(v).subspan(cut));
    const auto m = combine(a, b);
    CHECK(m.n == whole.n);
    CHECK(std::abs(m.value - whole.value) <= 1e-12 * whole.value);
    CHECK(std::abs(m.stderr - whole.stderr) <= 1e-10 * whole.stderr);
  }
}

TEST_CASE("compensated sum") {
  CompensatedSum s;
  s.add(1e16);
  for (int i = 0; i < 1000; ++i) s.add(1.0);
  s.add(-1e16);
  CHECK(s.value() == 1000.0);
  CompensatedSum a, b;
  a.add(0.1);
  b.add(0.2);
  a.merge(b);
  CHECK(a.value() == doctest::Approx(0.3).epsilon(1e-16));
}

TEST_CASE("weighted mean") {
  const std::vector<double> v{1.0, 3.0};
  const std::vector<double> same{-2.0, -2.0};
  const auto e = estimate_weighted_mean(v, same);
  CHECK(e.value == std::exp(-2.0) * 2.0);
  const std::vector<double> w{0.0, std::log(3.0)};
  CHECK(estimate_weighted_mean(v, w).value == doctest::Approx((1.0 + 9.0) / 2.0));
}

TEST_CASE("seed lineage") {
  const SeedLineage a{5, 0, 0};
  const auto b = a.advanced(kShardSize + 3);
  CHECK(b == SeedLineage{5, 1, 3});
  CHECK(a.advanced(0) == a);
  CHECK(b.advanced(kShardSize - 3) == SeedLineage{5, 2, 0});
  // path i of an advanced lineage is global path i + offset
  auto e1 = path_engine(a, kShardSize + 10);
  auto e2 = path_engine(b, 7);
  CHECK(e1() == e2());
  CHECK(a.derive(1) != a.derive(2));
  CHECK(a.derive(1) == a.derive(1));
  auto e3 = path_engine(a, 0);
  auto e4 = path_engine(a.derive(1), 0);
  CHECK(e3() != e4());
}

TEST_CASE("parallel chunks cover the range once") {
  for (const char* threads : {"1", "3", "8"}) {
    setenv("EVOLAB_THREADS", threads, 1);
    CHECK(worker_count() == std::atoi(threads));
    std::vector<int> hits(1001, 0);
    parallel_chunks(hits.size(), [&](std::size_t lo, std::size_t hi) {
      for (std::size_t i = lo; i < hi; ++i) ++hits[i];
    });
    CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  }
  setenv("EVOLAB_THREADS", "junk", 1);
  CHECK(worker_count() == 1);
  unsetenv("EVOLAB_THREADS");
  CHECK(worker_count() == 1);
}
