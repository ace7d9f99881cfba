#ifndef EVOLAB_CONSTANTS_HPP
#define EVOLAB_CONSTANTS_HPP

// Closed-form constants entering the inequality bounds. All functions are
// pure and templated on the scalar type.

#include "evolab/core.hpp"

#include <algorithm>
#include <cmath>

namespace evolab::constants {

/// p^2 Lambda/|r0| (1 - e^{2 r0 Delta})
template <typename Scalar>
Scalar kernel_lsi(Scalar p, Scalar Lambda, Scalar r0, Scalar delta) {
  using std::abs;
  using std::expm1;
  return p * p * Lambda / abs(r0) * -expm1(2 * r0 * delta);
}

/// exp(p |x-y|^2 / (4 (p-1) eta0 Delta))
template <typename Scalar>
Scalar harnack_factor(Scalar p, Scalar dist2, Scalar eta0, Scalar delta) {
  using std::exp;
  return exp(p * dist2 / (4 * (p - 1) * eta0 * delta));
}

template <typename Scalar>
struct SuperLsi {
  Scalar M1;
  Scalar M2;
};

/// Gradient and defect coefficients of the measure log-Sobolev inequality
/// obtained from an L^p -> L^q norm bound C_tilde over a gap Delta.
template <typename Scalar>
SuperLsi<Scalar> super_lsi(Scalar p, Scalar q, Scalar delta, Scalar norm_bound, Scalar Lambda, Scalar r0) {
  using std::abs;
  using std::expm1;
  using std::log;
  if (!(q > p)) throw DegenerateExponents("need q > p");
  if (!(p > 1)) throw DegenerateExponents("need p > 1");
  if (!(norm_bound >= 1)) throw PreconditionError("norm bound must be at least 1");
  const Scalar M1 = 2 * Lambda * p * (q - 1) / (abs(r0) * (q - p)) * -expm1(2 * r0 * delta);
  const Scalar M2 = p * q / (2 * (q - p)) * log(norm_bound);
  return {M1, M2};
}

/// Exponent reached from p after a gap Delta at scale eps: e^{2 eta0 Delta/eps}(p-1)+1.
template <typename Scalar>
Scalar hypercontractive_exponent(Scalar p, Scalar eta0, Scalar eps, Scalar delta) {
  using std::exp;
  return exp(2 * eta0 * delta / eps) * (p - 1) + 1;
}

/// e^{2 beta (1/p - 1/q)}
template <typename Scalar>
Scalar hypercontractive_factor(Scalar beta, Scalar p, Scalar q) {
  using std::exp;
  return exp(2 * beta * (1 / p - 1 / q));
}

/// lambda0 = q/(2 eta0 (p-1) Delta)
template <typename Scalar>
Scalar supercontractive_lambda(Scalar p, Scalar q, Scalar eta0, Scalar delta) {
  return q / (2 * eta0 * (p - 1) * delta);
}

/// 2^q exp(q R^2/(2 eta0 (p-1) Delta)) ||phi_lambda0||_1
template <typename Scalar>
Scalar supercontractive_norm(Scalar p, Scalar q, Scalar R, Scalar eta0, Scalar delta, Scalar phi_norm) {
  using std::exp;
  using std::pow;
  return pow(Scalar(2), q) * exp(q * R * R / (2 * eta0 * (p - 1) * delta)) * phi_norm;
}

/// Weight exponent 1/(eta0 Delta) of the L^2 -> L^inf bound.
template <typename Scalar>
Scalar ultrabounded_lambda(Scalar eta0, Scalar delta) {
  return 1 / (eta0 * delta);
}

/// 2 exp(R^2/(eta0 Delta)) M, with M bounding sup G phi_lambda over gaps >= Delta/2.
template <typename Scalar>
Scalar ultrabounded_norm(Scalar R, Scalar eta0, Scalar delta, Scalar M) {
  using std::exp;
  return 2 * exp(R * R / (eta0 * delta)) * M;
}

/// C_kappa with 2 lambda Lambda y^2 <= (K3/2) y^kappa + C_kappa lambda^{kappa/(kappa-2)}.
template <typename Scalar>
Scalar c_kappa(Scalar kappa, Scalar Lambda, Scalar K3) {
  using std::pow;
  return 2 * Lambda * (1 - 2 / kappa) * pow(8 * Lambda / (K3 * kappa), 2 / (kappa - 2));
}

/// y^2 at which 2 lambda Lambda y^2 - (K3/2) y^kappa is maximal.
template <typename Scalar>
Scalar c_kappa_maximizer(Scalar kappa, Scalar Lambda, Scalar K3, Scalar lambda) {
  using std::pow;
  return pow(8 * lambda * Lambda / (K3 * kappa), 2 / (kappa - 2));
}

template <typename Scalar>
Scalar k0(Scalar kappa, Scalar K3) {
  using std::pow;
  return pow((kappa - 2) * K3 / 4, 2 / (2 - kappa));
}

template <typename Scalar>
struct MtildeParts {
  Scalar C_kappa;
  Scalar C1;
  Scalar C2;
  Scalar K0;
  /// exponent inside the outer exp
  Scalar log_bound;
  Scalar bound;
};

/// Bound on sup G(t,s) exp(lambda|x|^2) over gaps t - s >= delta.
template <typename Scalar>
MtildeParts<Scalar> mtilde(Scalar kappa, Scalar K3, Scalar Lambda, int dimension, Scalar delta, Scalar lambda) {
  using std::exp;
  using std::max;
  using std::pow;
  if (!(kappa > 2) || !(K3 > 0) || !(Lambda > 0) || !(delta > 0) || !(lambda > 0)) {
    throw PreconditionError("mtilde needs kappa > 2 and positive constants");
  }
  MtildeParts<Scalar> m;
  m.C_kappa = c_kappa(kappa, Lambda, K3);
  m.C1 = 4 * m.C_kappa / K3;
  m.C2 = 4 * Lambda * Scalar(dimension) / K3;
  m.K0 = k0(kappa, K3);
  const Scalar first = m.K0 * pow(delta, 2 / (2 - kappa)) * lambda;
  const Scalar second =
      pow(m.C1 * pow(lambda, kappa * kappa / (2 * (kappa - 2))) + m.C2 * pow(lambda, kappa / 2), 2 / kappa);
  m.log_bound = max(first, second);
  m.bound = exp(m.log_bound);
  return m;
}

/// c1 with min_t (delta t^kappa - lambda t^2) = -c1 lambda^{kappa/(kappa-2)}.
template <typename Scalar>
Scalar c1(Scalar kappa, Scalar delta) {
  using std::pow;
  return pow(2 / (kappa * delta), 2 / (kappa - 2)) * (kappa - 2) / kappa;
}

/// kappa/(kappa-2), the small-gap blow-up exponent.
template <typename Scalar>
Scalar blowup_exponent(Scalar kappa) {
  return kappa / (kappa - 2);
}

/// log P_lambda = (C1 lambda^{kappa^2/(2(kappa-2))} + C2 lambda^{kappa/2})^{2/kappa}
template <typename Scalar>
Scalar log_p_lambda(Scalar kappa, Scalar K3, Scalar Lambda, int dimension, Scalar lambda) {
  using std::pow;
  const Scalar C1 = 4 * c_kappa(kappa, Lambda, K3) / K3;
  const Scalar C2 = 4 * Lambda * Scalar(dimension) / K3;
  return pow(C1 * pow(lambda, kappa * kappa / (2 * (kappa - 2))) + C2 * pow(lambda, kappa / 2), 2 / kappa);
}

/// Tail bound on the integral of 1/h from P: 4/((kappa-2)K3) lambda^{(kappa-2)/2} (log P)^{1-kappa/2}.
template <typename Scalar>
Scalar power_tail_bound(Scalar kappa, Scalar K3, Scalar lambda, Scalar log_p) {
  using std::pow;
  return 4 / ((kappa - 2) * K3) * pow(lambda, (kappa - 2) / 2) * pow(log_p, 1 - kappa / 2);
}

}  // namespace evolab::constants

#endif  // EVOLAB_CONSTANTS_HPP
