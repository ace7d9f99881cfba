#include "evolab/operator.hpp"

#include <cstdio>
#include <map>

namespace evolab {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

DiffusionFn scaled_identity(double q, int d) {
  return [q, d](double) -> Matrix { return q * Matrix::Identity(d, d); };
}

// b = -g(|x|^2) x with g nondecreasing; J = -g I - 2 g' x x^T.
template <typename G, typename DG>
void radial(OperatorSpec& spec, G g, DG dg) {
  spec.drift = [g](double, Eigen::Ref<const Vector> x, Eigen::Ref<Vector> out) {
    out.noalias() = -g(x.squaredNorm()) * x;
  };
  spec.drift_jacobian = [g, dg](double, Eigen::Ref<const Vector> x, Eigen::Ref<Matrix> J) {
    const double r2 = x.squaredNorm();
    J.setIdentity();
    J *= -g(r2);
    if (r2 > 0) J.noalias() -= 2.0 * dg(r2) * x * x.transpose();
  };
}

}  // namespace

OperatorSpec make_ou(double theta, double q, int dimension) {
  if (!(theta > 0) || !(q > 0)) throw ConfigError("ou needs theta > 0 and q > 0");
  OperatorSpec spec;
  spec.name = "ou";
  spec.canonical = "preset=ou theta=" + num(theta) + " q=" + num(q) + " d=" + std::to_string(dimension);
  spec.dimension = dimension;
  spec.diffusion = scaled_identity(q, dimension);
  spec.constant_diffusion = true;
  spec.drift = [theta](double, Eigen::Ref<const Vector> x, Eigen::Ref<Vector> out) { out.noalias() = -theta * x; };
  spec.drift_jacobian = [theta](double, Eigen::Ref<const Vector>, Eigen::Ref<Matrix> J) {
    J.setIdentity();
    J *= -theta;
  };
  spec.eta0 = spec.Lambda = q;
  spec.r0 = -theta;
  spec.regime = Regime{Unclassified{}, 2.0};
  spec.ou = OUCoefficients::constant_coefficients(theta, q);
  return spec;
}

OperatorSpec make_ou(OUCoefficients coeffs, int dimension, double theta_min, double q_min, double q_max) {
  if (!(theta_min > 0) || !(q_min > 0) || !(q_max >= q_min)) throw ConfigError("invalid OU bounds");
  OperatorSpec spec;
  spec.name = "ou";
  spec.canonical = "preset=ou time-dependent theta_min=" + num(theta_min) + " q=[" + num(q_min) + "," +
                   num(q_max) + "] d=" + std::to_string(dimension);
  spec.dimension = dimension;
  auto qf = coeffs.q;
  spec.diffusion = [qf, dimension](double t) -> Matrix { return qf(t) * Matrix::Identity(dimension, dimension); };
  spec.constant_diffusion = coeffs.constant;
  auto th = coeffs.theta;
  spec.drift = [th](double t, Eigen::Ref<const Vector> x, Eigen::Ref<Vector> out) { out.noalias() = -th(t) * x; };
  spec.drift_jacobian = [th](double t, Eigen::Ref<const Vector>, Eigen::Ref<Matrix> J) {
    J.setIdentity();
    J *= -th(t);
  };
  spec.eta0 = q_min;
  spec.Lambda = q_max;
  spec.r0 = -theta_min;
  spec.ou = std::move(coeffs);
  return spec;
}

OperatorSpec make_power(double kappa, int dimension, double q) {
  if (!(kappa > 2)) throw ConfigError("power preset needs kappa > 2");
  OperatorSpec spec;
  spec.name = "power";
  spec.canonical = "preset=power kappa=" + num(kappa) + " q=" + num(q) + " d=" + std::to_string(dimension);
  spec.dimension = dimension;
  spec.diffusion = scaled_identity(q, dimension);
  spec.constant_diffusion = true;
  const double e = (kappa - 2.0) / 2.0;
  if (kappa == 4.0) {
    radial(spec, [](double r2) { return 1.0 + r2; }, [](double) { return 1.0; });
  } else {
    radial(
        spec, [e](double r2) { return 1.0 + std::pow(r2, e); },
        [e](double r2) { return e * std::pow(r2, e - 1.0); });
  }
  spec.eta0 = spec.Lambda = q;
  spec.r0 = -1.0;
  spec.regime = Regime{Ultracontractive{1.0, kappa}, 2.0};
  spec.superlinear = true;
  return spec;
}

OperatorSpec make_logpower(double alpha, int dimension, double q) {
  if (!(alpha > 1)) throw ConfigError("logpower preset needs alpha > 1");
  OperatorSpec spec;
  spec.name = "logpower";
  spec.canonical = "preset=logpower alpha=" + num(alpha) + " q=" + num(q) + " d=" + std::to_string(dimension);
  spec.dimension = dimension;
  spec.diffusion = scaled_identity(q, dimension);
  spec.constant_diffusion = true;
  radial(
      spec, [alpha](double r2) { return 1.0 + std::pow(std::log1p(r2), alpha); },
      [alpha](double r2) { return alpha * std::pow(std::log1p(r2), alpha - 1.0) / (1.0 + r2); });
  spec.eta0 = spec.Lambda = q;
  spec.r0 = -1.0;
  // log(1+r^2) >= 2 log r, so K2 = 2^alpha
  spec.regime = Regime{Ultrabounded{std::pow(2.0, alpha), alpha}, 2.0};
  spec.superlinear = true;
  return spec;
}

OperatorSpec make_loglin(int dimension, double q) {
  OperatorSpec spec;
  spec.name = "loglin";
  spec.canonical = "preset=loglin q=" + num(q) + " d=" + std::to_string(dimension);
  spec.dimension = dimension;
  spec.diffusion = scaled_identity(q, dimension);
  spec.constant_diffusion = true;
  radial(
      spec, [](double r2) { return 1.0 + std::log1p(r2); }, [](double r2) { return 1.0 / (1.0 + r2); });
  spec.eta0 = spec.Lambda = q;
  spec.r0 = -1.0;
  spec.regime = Regime{Hyper{2.0}, 2.0};
  spec.superlinear = true;
  return spec;
}

std::vector<PresetInfo> list_presets() {
  return {
      {"ou", "theta=1, q=1", "Unclassified", "b = -theta x, Q = q I; not supercontractive"},
      {"power", "kappa=4, q=1", "Ultracontractive(K3=1, kappa)", "b = -x - |x|^(kappa-2) x, Q = q I"},
      {"logpower", "alpha=2, q=1", "Ultrabounded(K2=2^alpha, alpha)", "b = -x (1 + log(1+|x|^2)^alpha), Q = q I"},
      {"loglin", "q=1", "Hyper(K1=2)", "b = -x (1 + log(1+|x|^2)), Q = q I"},
  };
}

OperatorSpec make_preset(const std::string& name, const std::vector<std::pair<std::string, double>>& params,
                         int dimension) {
  std::map<std::string, double> p;
  for (const auto& [k, v] : params) p[k] = v;
  auto take = [&](const std::string& key, double def) {
    auto it = p.find(key);
    if (it == p.end()) return def;
    double v = it->second;
    p.erase(it);
    return v;
  };
  OperatorSpec spec;
  if (name == "ou") {
    const double theta = take("theta", 1.0);
    spec = make_ou(theta, take("q", 1.0), dimension);
  } else if (name == "power") {
    const double kappa = take("kappa", 4.0);
    spec = make_power(kappa, dimension, take("q", 1.0));
  } else if (name == "logpower") {
    const double alpha = take("alpha", 2.0);
    spec = make_logpower(alpha, dimension, take("q", 1.0));
  } else if (name == "loglin") {
    spec = make_loglin(dimension, take("q", 1.0));
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  if (!p.empty()) throw ConfigError("unknown parameter '" + p.begin()->first + "' for preset " + name);
  return spec;
}

}  // namespace evolab
