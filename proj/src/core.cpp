#include "evolab/core.hpp"

#include <algorithm>

namespace evolab {

namespace {

// Mean as v0 + sum(v - v0)/n, plus sample variance from a second pass.
struct Moments {
  double mean;
  double var;
};

Moments sample_moments(std::span<const double> v) {
  const double v0 = v.front();
  CompensatedSum dev;
  for (double x : v) dev.add(x - v0);
  const double n = static_cast<double>(v.size());
  const double mean = v0 + dev.value() / n;
  CompensatedSum sq;
  for (double x : v) {
    const double e = x - mean;
    sq.add(e * e);
  }
  return {mean, v.size() > 1 ? sq.value() / (n - 1.0) : 0.0};
}

}  // namespace

McEstimate estimate_mean(std::span<const double> values) {
  if (values.size() < 2) throw RuntimeError("estimate needs at least two samples");
  const Moments m = sample_moments(values);
  const double n = static_cast<double>(values.size());
  return {m.mean, std::sqrt(m.var / n), static_cast<std::int64_t>(values.size())};
}

McEstimate combine(const McEstimate& a, const McEstimate& b) {
  if (a.n == 0) return b;
  if (b.n == 0) return a;
  const double na = static_cast<double>(a.n);
  const double nb = static_cast<double>(b.n);
  const double n = na + nb;
  const double delta = b.value - a.value;
  const double mean = a.value + delta * (nb / n);
  const double m2a = a.stderr * a.stderr * na * (na - 1.0);
  const double m2b = b.stderr * b.stderr * nb * (nb - 1.0);
  const double m2 = m2a + m2b + delta * delta * na * nb / n;
  return {mean, std::sqrt(m2 / (n - 1.0) / n), a.n + b.n};
}

McEstimate estimate_weighted_mean(std::span<const double> values,
                                  std::span<const double> log_weights) {
  if (values.size() != log_weights.size())
    throw PreconditionError("values and log-weights differ in length");
  if (values.size() < 2) throw RuntimeError("estimate needs at least two samples");
  const double ref = *std::max_element(log_weights.begin(), log_weights.end());
  std::vector<double> scaled(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    scaled[i] = log_weights[i] == ref ? values[i] : values[i] * std::exp(log_weights[i] - ref);
  }
  McEstimate e = estimate_mean(scaled);
  const double w = std::exp(ref);
  e.value *= w;
  e.stderr *= w;
  return e;
}

}  // namespace evolab
