#include "evolab/sde.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace evolab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct RunRequest {
  double clock0 = 0.0;
  double h = 0.0;
  double span = 0.0;
  std::int64_t steps = 0;
  const Matrix* starts = nullptr;
  int replicate = 1;
  std::int64_t n = 0;
  std::vector<std::int64_t> checkpoints;
  const PotentialSpec* potential = nullptr;
};

struct RunResult {
  std::vector<Matrix> states;
  std::vector<std::uint8_t> divergent;
  std::int64_t divergent_count = 0;
  std::vector<double> log_weights;
  std::vector<Matrix> paths;
};

Matrix noise_factor(const Matrix& Q, double h) {
  const Matrix Qs = 0.5 * (Q + Q.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(2.0 * Qs);
  const Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return std::sqrt(h) * es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

bool use_taming(const OperatorSpec& spec, const PathConfig& config) {
  switch (config.taming) {
    case Taming::On:
      return true;
    case Taming::Off:
      return false;
    default:
      return spec.superlinear;
  }
}

RunResult run_paths(const OperatorSpec& spec, const RunRequest& req, const PathConfig& config,
                    const SeedLineage& lineage) {
  const int d = spec.dimension;
  const std::int64_t n = req.n;
  const std::int64_t steps = req.steps;
  const double h = req.h;
  const bool tame = use_taming(spec, config);
  const double guard2 = config.blowup_guard * config.blowup_guard;

  // sqrt(2 Q(tau_k) h) per step, or once when Q is constant.
  std::vector<Matrix> factors;
  if (spec.constant_diffusion || steps == 0) {
    factors.push_back(noise_factor(spec.Q(req.clock0), h));
  } else {
    factors.reserve(static_cast<std::size_t>(steps));
    for (std::int64_t k = 0; k < steps; ++k) factors.push_back(noise_factor(spec.Q(req.clock0 - k * h), h));
  }
  const bool scalar = d == 1 && spec.constant_diffusion;
  const double sigma = factors.front()(0, 0);

  RunResult out;
  out.states.assign(req.checkpoints.size(), Matrix(d, n));
  out.divergent.assign(static_cast<std::size_t>(n), 0);
  if (req.potential) out.log_weights.assign(static_cast<std::size_t>(n), 0.0);
  if (config.keep_paths) out.paths.assign(static_cast<std::size_t>(n), Matrix());

  parallel_chunks(static_cast<std::size_t>(n), [&](std::size_t lo, std::size_t hi) {
    Vector X(d), drift(d), z(d);
    for (std::size_t i = lo; i < hi; ++i) {
      auto rng = path_engine(lineage, i);
      std::normal_distribution<double> normal;
      X = req.starts->col(static_cast<Eigen::Index>(i / static_cast<std::size_t>(req.replicate)));
      std::size_t cp = 0;
      while (cp < req.checkpoints.size() && req.checkpoints[cp] == 0) out.states[cp++].col(i) = X;
      Matrix* path = nullptr;
      if (config.keep_paths) {
        out.paths[i].resize(d, steps + 1);
        path = &out.paths[i];
        path->col(0) = X;
      }
      double csum = 0.0;
      bool diverged = false;
      for (std::int64_t k = 0; k < steps; ++k) {
        const double tau = req.clock0 - static_cast<double>(k) * h;
        if (req.potential) csum += req.potential->c(tau, X);
        spec.drift(tau, X, drift);
        if (tame) drift /= 1.0 + h * drift.norm();
        if (scalar) {
          X[0] += h * drift[0] + sigma * normal(rng);
        } else {
          for (int j = 0; j < d; ++j) z[j] = normal(rng);
          const Matrix& S = factors.size() == 1 ? factors.front() : factors[static_cast<std::size_t>(k)];
          X.noalias() += h * drift;
          X.noalias() += S * z;
        }
        if (!(X.squaredNorm() < guard2)) {
          diverged = true;
          break;
        }
        while (cp < req.checkpoints.size() && req.checkpoints[cp] == k + 1) out.states[cp++].col(i) = X;
        if (path) path->col(k + 1) = X;
      }
      if (diverged) {
        out.divergent[i] = 1;
        for (; cp < req.checkpoints.size(); ++cp) out.states[cp].col(i).setConstant(kNaN);
      }
      if (req.potential) {
        // exact when c is constant: -span * (N c / N)
        out.log_weights[i] = steps > 0 ? -req.span * (csum / static_cast<double>(steps)) : 0.0;
      }
    }
  });
  for (auto flag : out.divergent) out.divergent_count += flag;
  if (static_cast<double>(out.divergent_count) > config.max_divergent_fraction * static_cast<double>(n)) {
    throw BlowupError(std::to_string(out.divergent_count) + " of " + std::to_string(n) +
                      " paths diverged; reduce the step or check dissipativity");
  }
  return out;
}

void check_interval(double s, double t, const PathConfig& config) {
  if (!(t >= s)) throw PreconditionError("need t >= s");
  if (!(config.step > 0)) throw PreconditionError("step must be positive");
  if (t > s && config.step > (t - s) * (1.0 + 1e-12)) throw PreconditionError("step exceeds the interval");
}

Ensemble package(RunResult&& r, std::size_t which, double s, double t, std::int64_t steps, double h,
                 const SeedLineage& lineage) {
  Ensemble e;
  e.s = s;
  e.t = t;
  e.states = std::move(r.states[which]);
  e.divergent = r.divergent;
  e.divergent_count = r.divergent_count;
  e.log_weights = r.log_weights;
  e.lineage = lineage;
  e.steps = steps;
  e.step = h;
  e.paths = std::move(r.paths);
  return e;
}

Ensemble run_interval(const OperatorSpec& spec, double s, double t, const Matrix& starts, int replicate,
                      const PathConfig& config, const SeedLineage& lineage, const PotentialSpec* potential) {
  check_interval(s, t, config);
  RunRequest req;
  req.steps = step_count(s, t, config.step);
  req.h = req.steps > 0 ? (t - s) / static_cast<double>(req.steps) : 0.0;
  req.clock0 = t;
  req.span = t - s;
  req.starts = &starts;
  req.replicate = replicate;
  req.n = starts.cols() * replicate;
  req.checkpoints = {req.steps};
  req.potential = potential;
  return package(run_paths(spec, req, config, lineage), 0, s, t, req.steps, req.h, lineage);
}

}  // namespace

std::int64_t step_count(double s, double t, double h) {
  if (t <= s) return 0;
  const double ratio = (t - s) / h;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) <= 1e-9 * std::max(1.0, ratio)) return std::max<std::int64_t>(1, std::llround(ratio));
  return static_cast<std::int64_t>(std::ceil(ratio));
}

std::vector<double> Ensemble::values(const ScalarFn& f) const {
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(size()));
  Vector y(dimension());
  for (std::int64_t i = 0; i < size(); ++i) {
    if (!valid(i)) continue;
    y = states.col(i);
    out.push_back(f(y));
  }
  return out;
}

Ensemble simulate(const OperatorSpec& spec, double s, double t, const Vector& x, std::int64_t n,
                  const PathConfig& config, const SeedLineage& lineage) {
  if (x.size() != spec.dimension) throw PreconditionError("start point has the wrong dimension");
  if (n < 1) throw PreconditionError("need at least one path");
  const Matrix starts = x;
  return run_interval(spec, s, t, starts, static_cast<int>(n), config, lineage, nullptr);
}

Ensemble simulate_from(const OperatorSpec& spec, double s, double t, const Matrix& starts, int replicate,
                       const PathConfig& config, const SeedLineage& lineage) {
  if (starts.rows() != spec.dimension) throw PreconditionError("start points have the wrong dimension");
  if (replicate < 1 || starts.cols() < 1) throw PreconditionError("need at least one path");
  return run_interval(spec, s, t, starts, replicate, config, lineage, nullptr);
}

Ensemble simulate_weighted(const OperatorSpec& spec, const PotentialSpec& potential, double s, double t,
                           const Vector& x, std::int64_t n, const PathConfig& config, const SeedLineage& lineage) {
  if (x.size() != spec.dimension) throw PreconditionError("start point has the wrong dimension");
  if (n < 1) throw PreconditionError("need at least one path");
  const Matrix starts = x;
  return run_interval(spec, s, t, starts, static_cast<int>(n), config, lineage, &potential);
}

Ensemble simulate_weighted_from(const OperatorSpec& spec, const PotentialSpec& potential, double s, double t,
                                const Matrix& starts, int replicate, const PathConfig& config,
                                const SeedLineage& lineage) {
  if (starts.rows() != spec.dimension) throw PreconditionError("start points have the wrong dimension");
  if (replicate < 1 || starts.cols() < 1) throw PreconditionError("need at least one path");
  return run_interval(spec, s, t, starts, replicate, config, lineage, &potential);
}

std::vector<Ensemble> simulate_checkpoints(const OperatorSpec& spec, double t, const Vector& x,
                                           const std::vector<std::int64_t>& checkpoints, std::int64_t n,
                                           const PathConfig& config, const SeedLineage& lineage) {
  if (checkpoints.empty()) throw PreconditionError("no checkpoints");
  if (!std::is_sorted(checkpoints.begin(), checkpoints.end()) || checkpoints.front() < 0)
    throw PreconditionError("checkpoints must be sorted and nonnegative");
  if (!(config.step > 0)) throw PreconditionError("step must be positive");
  const Matrix starts = x;
  RunRequest req;
  req.steps = checkpoints.back();
  req.h = config.step;
  req.clock0 = t;
  req.span = config.step * static_cast<double>(req.steps);
  req.starts = &starts;
  req.replicate = static_cast<int>(n);
  req.n = n;
  req.checkpoints = checkpoints;
  RunResult r = run_paths(spec, req, config, lineage);
  std::vector<Ensemble> out;
  for (std::size_t c = 0; c < checkpoints.size(); ++c) {
    Ensemble e;
    e.t = t;
    e.s = t - config.step * static_cast<double>(checkpoints[c]);
    e.states = std::move(r.states[c]);
    e.divergent = r.divergent;
    e.divergent_count = r.divergent_count;
    e.lineage = lineage;
    e.steps = checkpoints[c];
    e.step = config.step;
    out.push_back(std::move(e));
  }
  return out;
}

McEstimate apply(const Ensemble& ensemble, const ScalarFn& f) {
  if (ensemble.log_weights.empty()) {
    const auto v = ensemble.values(f);
    return estimate_mean(v);
  }
  std::vector<double> v, lw;
  Vector y(ensemble.dimension());
  for (std::int64_t i = 0; i < ensemble.size(); ++i) {
    if (!ensemble.valid(i)) continue;
    y = ensemble.states.col(i);
    v.push_back(f(y));
    lw.push_back(ensemble.log_weights[static_cast<std::size_t>(i)]);
  }
  return estimate_weighted_mean(v, lw);
}

McEstimate apply(const OperatorSpec& spec, const ScalarFn& f, double s, double t, const Vector& x, std::int64_t n,
                 const PathConfig& config, const SeedLineage& lineage) {
  return evolab::apply(simulate(spec, s, t, x, n, config, lineage), f);
}

std::vector<McEstimate> gradient_apply(const OperatorSpec& spec, const ScalarFn& f, double s, double t,
                                       const Vector& x, std::int64_t n, const PathConfig& config,
                                       const SeedLineage& lineage) {
  const double h = 1e-4 * (1.0 + x.norm());
  std::vector<McEstimate> out;
  Vector y(x.size());
  for (int i = 0; i < spec.dimension; ++i) {
    Vector xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const Ensemble ep = simulate(spec, s, t, xp, n, config, lineage);
    const Ensemble em = simulate(spec, s, t, xm, n, config, lineage);
    std::vector<double> diff;
    diff.reserve(static_cast<std::size_t>(n));
    for (std::int64_t k = 0; k < n; ++k) {
      if (!ep.valid(k) || !em.valid(k)) continue;
      y = ep.states.col(k);
      const double fp = f(y);
      y = em.states.col(k);
      diff.push_back((fp - f(y)) / (2.0 * h));
    }
    out.push_back(estimate_mean(diff));
  }
  return out;
}

McEstimate backward_derivative_check(const OperatorSpec& spec, const TestFunction& f, double s, double t,
                                     const Vector& x, std::int64_t n, const PathConfig& config,
                                     const SeedLineage& lineage) {
  check_interval(s, t, config);
  const std::int64_t N = step_count(s, t, config.step);
  if (N < 2) throw PreconditionError("interval must hold at least two steps");
  if (!f.gradient || !f.hessian) throw PreconditionError("test function needs derivatives");
  PathConfig cfg = config;
  cfg.step = (t - s) / static_cast<double>(N);
  const double delta = cfg.step;
  const auto ens = simulate_checkpoints(spec, t, x, {N - 1, N, N + 1}, n, cfg, lineage);
  std::vector<double> res;
  res.reserve(static_cast<std::size_t>(n));
  Vector a(x.size()), b(x.size()), c(x.size());
  for (std::int64_t k = 0; k < n; ++k) {
    if (!ens[2].valid(k)) continue;
    a = ens[0].states.col(k);
    b = ens[1].states.col(k);
    c = ens[2].states.col(k);
    res.push_back((f(a) - f(c)) / (2.0 * delta) + spec.generator(s, b, f.gradient(b), f.hessian(b)));
  }
  McEstimate m = estimate_mean(res);
  m.value = std::abs(m.value);
  return m;
}

McEstimate feynman_kac_apply(const OperatorSpec& spec, const PotentialSpec& potential, const ScalarFn& f, double s,
                             double t, const Vector& x, std::int64_t n, const PathConfig& config,
                             const SeedLineage& lineage) {
  return evolab::apply(simulate_weighted(spec, potential, s, t, x, n, config, lineage), f);
}

ChapmanKolmogorov chapman_kolmogorov_check(const OperatorSpec& spec, const ScalarFn& f, double s, double r, double t,
                                           const Vector& x, std::int64_t n, const PathConfig& config,
                                           const SeedLineage& lineage, int inner) {
  if (!(s < r && r < t)) throw PreconditionError("need s < r < t");
  if (inner < 2) throw PreconditionError("need at least two inner paths");
  ChapmanKolmogorov out;
  out.direct = evolab::apply(spec, f, s, t, x, n, config, lineage.derive(1));
  const std::int64_t outer_n = std::max<std::int64_t>(2, n / inner);
  const Ensemble outer = simulate(spec, r, t, x, outer_n, config, lineage.derive(2));
  Matrix starts(spec.dimension, outer_n);
  Eigen::Index m = 0;
  for (std::int64_t k = 0; k < outer_n; ++k)
    if (outer.valid(k)) starts.col(m++) = outer.states.col(k);
  starts.conservativeResize(Eigen::NoChange, m);
  const Ensemble in = simulate_from(spec, s, r, starts, inner, config, lineage.derive(3));
  std::vector<double> per_outer;
  Vector y(spec.dimension);
  for (Eigen::Index j = 0; j < m; ++j) {
    CompensatedSum acc;
    int count = 0;
    for (int k = 0; k < inner; ++k) {
      const std::int64_t idx = j * inner + k;
      if (!in.valid(idx)) continue;
      y = in.states.col(idx);
      acc.add(f(y));
      ++count;
    }
    if (count > 0) per_outer.push_back(acc.value() / count);
  }
  out.nested = estimate_mean(per_outer);
  out.residual.value = std::abs(out.direct.value - out.nested.value);
  out.residual.stderr = std::hypot(out.direct.stderr, out.nested.stderr);
  out.residual.n = std::min(out.direct.n, out.nested.n);
  return out;
}

}  // namespace evolab
