#ifndef EVOLAB_TEST_HELPERS_HPP
#define EVOLAB_TEST_HELPERS_HPP

#include "evolab/config.hpp"

#include <string>

namespace testing {

inline evolab::Vector vec(std::initializer_list<double> v) {
  evolab::Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double a : v) out[i++] = a;
  return out;
}

inline evolab::Vector scalar(double a) { return vec({a}); }

// d=1 spec with Q = q and an expression drift
inline evolab::OperatorSpec expr_spec(const std::string& drift, double r0, const std::string& extra = "",
                                      int dimension = 1) {
  const std::string text = "dimension = " + std::to_string(dimension) +
                           "\n[diffusion]\nq = 1\n[drift]\nexpr = \"" + drift + "\"\n[constants]\nr0 = " +
                           std::to_string(r0) + "\n" + extra;
  return evolab::load_config_text(text).spec;
}

}  // namespace testing

#endif
