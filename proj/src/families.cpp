#include "evolab/families.hpp"

#include <cmath>
#include <random>

namespace evolab {

namespace {

Vector coordinate_vector(int d, double v) { return Vector::Constant(d, v); }

// quintic smoothstep from 1 at u <= 0 to 0 at u >= 1, C^2
double step_down(double u, double& d1, double& d2) {
  if (u <= 0.0) {
    d1 = d2 = 0.0;
    return 1.0;
  }
  if (u >= 1.0) {
    d1 = d2 = 0.0;
    return 0.0;
  }
  const double u2 = u * u;
  d1 = -30.0 * u2 * (1.0 - u) * (1.0 - u);
  d2 = -60.0 * u * (1.0 - u) * (1.0 - 2.0 * u);
  return 1.0 - u2 * u * (10.0 - 15.0 * u + 6.0 * u2);
}

}  // namespace

Matrix hessian_from_gradient(const std::function<Vector(const Vector&)>& gradient, const Vector& x) {
  const double h = 1e-4 * (1.0 + x.norm());
  const auto d = x.size();
  Matrix H(d, d);
  Vector y = x;
  for (Eigen::Index j = 0; j < d; ++j) {
    y[j] = x[j] + h;
    const Vector gp = gradient(y);
    y[j] = x[j] - h;
    const Vector gm = gradient(y);
    y[j] = x[j];
    H.col(j) = (gp - gm) / (2.0 * h);
  }
  return 0.5 * (H + H.transpose());
}

TestFunction constant_function(double c, int dimension) {
  TestFunction f;
  f.name = "const(" + std::to_string(c) + ")";
  f.value = [c](const Vector&) { return c; };
  f.gradient = [dimension](const Vector&) { return Vector::Zero(dimension).eval(); };
  f.hessian = [dimension](const Vector&) { return Matrix::Zero(dimension, dimension).eval(); };
  f.sup_norm = std::abs(c);
  f.constant = c;
  f.closed_form = ConstantForm{c};
  return f;
}

TestFunction linear_function(const Vector& a, double c0) {
  TestFunction f;
  f.name = "linear";
  f.value = [a, c0](const Vector& y) { return a.dot(y) + c0; };
  f.gradient = [a](const Vector&) { return a; };
  const auto d = a.size();
  f.hessian = [d](const Vector&) { return Matrix::Zero(d, d).eval(); };
  f.bounded = false;
  PolynomialForm p;
  for (Eigen::Index i = 0; i < d; ++i) {
    if (a[i] == 0.0) continue;
    std::vector<int> pw(static_cast<std::size_t>(d), 0);
    pw[static_cast<std::size_t>(i)] = 1;
    p.terms.push_back({a[i], pw});
  }
  if (c0 != 0.0) p.terms.push_back({c0, std::vector<int>(static_cast<std::size_t>(d), 0)});
  f.closed_form = p;
  return f;
}

TestFunction quadratic_function(int dimension, double c0) {
  TestFunction f;
  f.name = "quadratic";
  f.value = [c0](const Vector& y) { return y.squaredNorm() + c0; };
  f.gradient = [](const Vector& y) { return (2.0 * y).eval(); };
  f.hessian = [dimension](const Vector&) { return (2.0 * Matrix::Identity(dimension, dimension)).eval(); };
  f.bounded = false;
  PolynomialForm p;
  for (int i = 0; i < dimension; ++i) {
    std::vector<int> pw(static_cast<std::size_t>(dimension), 0);
    pw[static_cast<std::size_t>(i)] = 2;
    p.terms.push_back({1.0, pw});
  }
  if (c0 != 0.0) p.terms.push_back({c0, std::vector<int>(static_cast<std::size_t>(dimension), 0)});
  f.closed_form = p;
  return f;
}

TestFunction gaussian_bump(double a, const Vector& z) {
  TestFunction f;
  f.name = "bump(a=" + std::to_string(a) + ",z0=" + std::to_string(z[0]) + ")";
  f.value = [a, z](const Vector& y) { return std::exp(-a * (y - z).squaredNorm()); };
  f.gradient = [a, z](const Vector& y) {
    const Vector u = y - z;
    return (-2.0 * a * std::exp(-a * u.squaredNorm()) * u).eval();
  };
  f.hessian = [a, z](const Vector& y) {
    const Vector u = y - z;
    const double e = std::exp(-a * u.squaredNorm());
    const auto d = u.size();
    return (e * (4.0 * a * a * u * u.transpose() - 2.0 * a * Matrix::Identity(d, d))).eval();
  };
  f.sup_norm = 1.0;
  f.closed_form = GaussianBumpForm{a, z};
  return f;
}

TestFunction cosine_function(const Vector& omega, double phase) {
  TestFunction f;
  f.name = "cos(w0=" + std::to_string(omega[0]) + ")";
  f.value = [omega, phase](const Vector& y) { return std::cos(omega.dot(y) + phase); };
  f.gradient = [omega, phase](const Vector& y) { return (-std::sin(omega.dot(y) + phase) * omega).eval(); };
  f.hessian = [omega, phase](const Vector& y) {
    return (-std::cos(omega.dot(y) + phase) * omega * omega.transpose()).eval();
  };
  f.sup_norm = 1.0;
  f.closed_form = CosineForm{omega, phase};
  return f;
}

TestFunction trig_product(const Vector& omega, const Vector& phase) {
  TestFunction f;
  f.name = "trig(w0=" + std::to_string(omega[0]) + ",phase0=" + std::to_string(phase[0]) + ")";
  f.value = [omega, phase](const Vector& y) {
    double v = 1.0;
    for (Eigen::Index i = 0; i < y.size(); ++i) v *= std::cos(omega[i] * y[i] + phase[i]);
    return v;
  };
  f.gradient = [omega, phase](const Vector& y) {
    const auto d = y.size();
    Vector g(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      double v = -omega[i] * std::sin(omega[i] * y[i] + phase[i]);
      for (Eigen::Index j = 0; j < d; ++j)
        if (j != i) v *= std::cos(omega[j] * y[j] + phase[j]);
      g[i] = v;
    }
    return g;
  };
  f.hessian = [omega, phase](const Vector& y) {
    const auto d = y.size();
    Matrix H(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
      for (Eigen::Index k = 0; k < d; ++k) {
        double v = 1.0;
        for (Eigen::Index j = 0; j < d; ++j) {
          const double a = omega[j] * y[j] + phase[j];
          if (j == i && j == k) {
            v *= -omega[j] * omega[j] * std::cos(a);
          } else if (j == i || j == k) {
            v *= -omega[j] * std::sin(a);
          } else {
            v *= std::cos(a);
          }
        }
        H(i, k) = v;
      }
    }
    return H;
  };
  f.sup_norm = 1.0;
  if (omega.size() == 1) f.closed_form = CosineForm{omega, phase[0]};
  return f;
}

TestFunction quadratic_cutoff(int dimension, double R, double c0) {
  TestFunction f;
  f.name = "quadcut(R=" + std::to_string(R) + ")";
  const double R2 = R * R;
  f.value = [R2, c0](const Vector& y) {
    double d1, d2;
    const double r2 = y.squaredNorm();
    return (c0 + r2) * step_down((r2 / R2 - 1.0) / 3.0, d1, d2);
  };
  f.gradient = [R2, c0](const Vector& y) {
    double d1, d2;
    const double r2 = y.squaredNorm();
    const double chi = step_down((r2 / R2 - 1.0) / 3.0, d1, d2);
    // d/dy chi = d1 * 2y/(3R^2)
    return ((2.0 * chi + (c0 + r2) * d1 * 2.0 / (3.0 * R2)) * y).eval();
  };
  f.hessian = [g = f.gradient](const Vector& y) { return hessian_from_gradient(g, y); };
  f.sup_norm = std::max(std::abs(c0), std::abs(c0 + 4.0 * R2));
  (void)dimension;
  return f;
}

TestFunction smoothed_indicator(const Vector& z, double r, double w) {
  TestFunction f;
  f.name = "ind(r=" + std::to_string(r) + ",z0=" + std::to_string(z[0]) + ")";
  const double r2 = r * r;
  f.value = [z, r2, w](const Vector& y) { return 1.0 / (1.0 + std::exp(((y - z).squaredNorm() - r2) / w)); };
  f.gradient = [z, r2, w](const Vector& y) {
    const Vector u = y - z;
    const double e = std::exp((u.squaredNorm() - r2) / w);
    const double s = 1.0 / (1.0 + e);
    // ds/du = -s(1-s) * 2u/w
    return (-s * (1.0 - s) * 2.0 / w * u).eval();
  };
  f.hessian = [z, r2, w](const Vector& y) {
    const Vector u = y - z;
    const double e = std::exp((u.squaredNorm() - r2) / w);
    const double s = 1.0 / (1.0 + e);
    const double g = s * (1.0 - s);
    const auto d = u.size();
    // d/du [-g 2u/w] with dg/du = g(1-2s)(-2u/w)
    return (-2.0 / w * g * Matrix::Identity(d, d) + 4.0 / (w * w) * g * (1.0 - 2.0 * s) * u * u.transpose()).eval();
  };
  f.sup_norm = 1.0;
  return f;
}

TestFunction lorentzian(double a, const Vector& z) {
  TestFunction f;
  f.name = "lorentz(a=" + std::to_string(a) + ")";
  f.value = [a, z](const Vector& y) { return 1.0 / (1.0 + a * (y - z).squaredNorm()); };
  f.gradient = [a, z](const Vector& y) {
    const Vector u = y - z;
    const double q = 1.0 + a * u.squaredNorm();
    return (-2.0 * a / (q * q) * u).eval();
  };
  f.hessian = [a, z](const Vector& y) {
    const Vector u = y - z;
    const double q = 1.0 + a * u.squaredNorm();
    const auto d = u.size();
    return (-2.0 * a / (q * q) * Matrix::Identity(d, d) + 8.0 * a * a / (q * q * q) * u * u.transpose()).eval();
  };
  f.sup_norm = 1.0;
  return f;
}

TestFunction shifted(TestFunction f, double c) {
  TestFunction g = f;
  g.name = f.name + "+" + std::to_string(c);
  g.value = [v = f.value, c](const Vector& y) { return v(y) + c; };
  if (f.sup_norm) g.sup_norm = *f.sup_norm + std::abs(c);
  if (f.constant) g.constant = *f.constant + c;
  g.closed_form.reset();
  if (f.closed_form) {
    if (const auto* k = std::get_if<ConstantForm>(&*f.closed_form)) g.closed_form = ConstantForm{k->c + c};
  }
  return g;
}

TestFunction scaled(TestFunction f, double k) {
  TestFunction g = f;
  g.name = std::to_string(k) + "*" + f.name;
  g.value = [v = f.value, k](const Vector& y) { return k * v(y); };
  if (f.gradient) g.gradient = [gr = f.gradient, k](const Vector& y) { return (k * gr(y)).eval(); };
  if (f.hessian) g.hessian = [h = f.hessian, k](const Vector& y) { return (k * h(y)).eval(); };
  if (f.sup_norm) g.sup_norm = std::abs(k) * *f.sup_norm;
  if (f.constant) g.constant = k * *f.constant;
  g.closed_form.reset();
  return g;
}

TestFunctionFamily gaussian_family(int dimension, const std::vector<double>& centers,
                                   const std::vector<double>& widths) {
  TestFunctionFamily fam{"gaussian", {}};
  for (double c : centers)
    for (double a : widths) fam.members.push_back(gaussian_bump(a, coordinate_vector(dimension, c)));
  return fam;
}

TestFunctionFamily trig_family(int dimension, const std::vector<double>& frequencies) {
  TestFunctionFamily fam{"trig", {}};
  for (double w : frequencies) {
    fam.members.push_back(trig_product(coordinate_vector(dimension, w), Vector::Zero(dimension)));
    fam.members.push_back(trig_product(coordinate_vector(dimension, w), coordinate_vector(dimension, 0.5)));
  }
  return fam;
}

TestFunctionFamily cutoff_family(int dimension, const std::vector<double>& radii) {
  TestFunctionFamily fam{"cutoff", {}};
  for (double R : radii) fam.members.push_back(quadratic_cutoff(dimension, R, 0.5));
  return fam;
}

TestFunctionFamily indicator_family(int dimension, const std::vector<double>& centers,
                                    const std::vector<double>& radii) {
  TestFunctionFamily fam{"indicator", {}};
  for (double c : centers)
    for (double r : radii) fam.members.push_back(smoothed_indicator(coordinate_vector(dimension, c), r, 0.25));
  return fam;
}

TestFunctionFamily standard_family(int dimension, int random_members, std::uint64_t seed) {
  TestFunctionFamily fam{"standard", {}};
  auto add = [&](const TestFunctionFamily& other) {
    fam.members.insert(fam.members.end(), other.members.begin(), other.members.end());
  };
  add(gaussian_family(dimension, {-1.0, 0.0, 1.0}, {0.5, 2.0}));
  add(trig_family(dimension, {1.0, 2.0}));
  add(cutoff_family(dimension, {1.0, 2.0}));
  add(indicator_family(dimension, {0.0, 0.75}, {0.5, 1.0}));
  fam.members.push_back(lorentzian(1.0, Vector::Zero(dimension)));
  fam.members.push_back(constant_function(1.0, dimension));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> center(-1.5, 1.5);
  std::uniform_real_distribution<double> log_width(std::log(0.25), std::log(4.0));
  for (int k = 0; k < random_members; ++k) {
    Vector z(dimension);
    for (int i = 0; i < dimension; ++i) z[i] = center(rng);
    fam.members.push_back(gaussian_bump(std::exp(log_width(rng)), z));
  }
  return fam;
}

TestFunctionFamily family_by_name(const std::string& name, int dimension, std::uint64_t seed) {
  if (name == "standard") return standard_family(dimension, 8, seed);
  if (name == "gaussian") return gaussian_family(dimension, {-1.0, -0.5, 0.0, 0.5, 1.0}, {0.25, 1.0, 4.0});
  if (name == "trig") return trig_family(dimension, {0.5, 1.0, 2.0, 3.0});
  if (name == "cutoff") return cutoff_family(dimension, {0.75, 1.0, 1.5, 2.0});
  if (name == "indicator") return indicator_family(dimension, {-0.5, 0.0, 0.5}, {0.5, 1.0, 1.5});
  throw ConfigError("unknown family '" + name + "'");
}

}  // namespace evolab
