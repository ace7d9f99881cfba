#ifndef EVOLAB_FAMILIES_HPP
#define EVOLAB_FAMILIES_HPP

#include "evolab/test_function.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace evolab {

struct TestFunctionFamily {
  std::string name;
  std::vector<TestFunction> members;

  std::size_t size() const { return members.size(); }
};

TestFunction constant_function(double c, int dimension);
/// <a, y> + c0. Unbounded.
TestFunction linear_function(const Vector& a, double c0 = 0.0);
/// |y|^2 + c0. Unbounded.
TestFunction quadratic_function(int dimension, double c0 = 0.0);
/// exp(-a |y - z|^2)
TestFunction gaussian_bump(double a, const Vector& z);
/// cos(<omega, y> + phase)
TestFunction cosine_function(const Vector& omega, double phase = 0.0);
/// prod_i cos(omega_i y_i + phase_i)
TestFunction trig_product(const Vector& omega, const Vector& phase);
/// (c0 + |y|^2) chi(|y|^2 / R^2), chi a C^2 step from 1 on [0,1] to 0 on [4,inf).
TestFunction quadratic_cutoff(int dimension, double R, double c0 = 0.0);
/// 1/(1 + exp((|y - z|^2 - r^2)/w)), a smoothed indicator of B(z, r).
TestFunction smoothed_indicator(const Vector& z, double r, double w);
/// 1/(1 + a |y - z|^2)
TestFunction lorentzian(double a, const Vector& z);
/// f + c
TestFunction shifted(TestFunction f, double c);
/// k f
TestFunction scaled(TestFunction f, double k);

/// Gaussian bumps on a grid of centers and widths.
TestFunctionFamily gaussian_family(int dimension, const std::vector<double>& centers, const std::vector<double>& widths);
TestFunctionFamily trig_family(int dimension, const std::vector<double>& frequencies);
TestFunctionFamily cutoff_family(int dimension, const std::vector<double>& radii);
TestFunctionFamily indicator_family(int dimension, const std::vector<double>& centers, const std::vector<double>& radii);

/// Mixed bounded family: bumps, trig, cutoff polynomials, indicators and a
/// constant, plus `random_members` bumps with parameters drawn from `seed`.
TestFunctionFamily standard_family(int dimension, int random_members = 8, std::uint64_t seed = 7);

/// "standard", "gaussian", "trig", "cutoff" or "indicator".
TestFunctionFamily family_by_name(const std::string& name, int dimension, std::uint64_t seed = 7);

/// Hessian by central differences of the gradient, h = 1e-4 (1 + |x|).
Matrix hessian_from_gradient(const std::function<Vector(const Vector&)>& gradient, const Vector& x);

}  // namespace evolab

#endif  // EVOLAB_FAMILIES_HPP
