// Direction splitting of phi functions of a Kronecker sum: phi_l(tau*K) is
// approximated by (l!)^{d-1} * kron(phi_l(tau*A_d), ..., phi_l(tau*A_1)),
// exact for l = 0 and accurate to O(tau^2) otherwise. Applying it to a
// tensor costs a single Tucker operator.
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kronphi/matrix_functions.hpp"
#include "kronphi/mode_product.hpp"
#include "kronphi/tensor.hpp"

namespace kronphi {

template <typename T>
struct SplitPhi {
  int ell = 0;
  double tau = 0.0;
  std::vector<Matrix<T>> factors;  // factors[mu] = phi_ell(tau * A_mu)
  double prefactor = 1.0;          // (ell!)^(d-1)
};

template <typename T>
SplitPhi<T> build_split_phi(const KroneckerSum<T>& k, double tau, int ell,
                            const GLLRule& rule) {
  if (ell < 0) throw std::invalid_argument("build_split_phi: negative ell");
  SplitPhi<T> sp;
  sp.ell = ell;
  sp.tau = tau;
  sp.factors.reserve(k.factors.size());
  for (const Matrix<T>& a : k.factors) {
    Matrix<T> scaled = a;
    scaled *= T(tau);
    if (ell == 0)
      sp.factors.push_back(expm(scaled));
    else
      sp.factors.push_back(std::move(phiquad(scaled, ell, rule).phis[ell]));
  }
  sp.prefactor = std::pow(factorial(ell), double(k.order() - 1));
  return sp;
}

template <typename T>
SplitPhi<T> build_split_phi(const KroneckerSum<T>& k, double tau, int ell) {
  return build_split_phi(k, tau, ell, gll_rule(kDefaultQuadNodes));
}

// ((ell!)^{d-1} V) x_1 phi_ell(tau A_1) x_2 ... x_d phi_ell(tau A_d).
// The prefactor is applied by scaling V once, keeping the factor matrices
// reusable across calls.
template <typename T>
Tensor<T> apply_split_phi(const SplitPhi<T>& sp, const Tensor<T>& v) {
  if (int(sp.factors.size()) != v.order())
    throw std::invalid_argument("apply_split_phi: order mismatch");
  Tensor<T> cur = v;
  if (sp.prefactor != 1.0) scale(cur, T(sp.prefactor));
  for (int mu = 0; mu < v.order(); ++mu)
    cur = mode_product(cur, sp.factors[mu], mu);
  return cur;
}

}  // namespace kronphi
