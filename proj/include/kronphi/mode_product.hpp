// Mode products, Tucker operators and the matrix-free Kronecker-sum action.
//
// With the first index fastest, the mode-0 unfolding is the storage itself,
// so that mode is one plain GEMM. For an interior mode the tensor is a stack
// of Q contiguous (P x n_mu) column-major slabs, each multiplied by M^T from
// the right; the last mode has Q = 1 and again collapses to a single GEMM.
// No explicit transposition pass is ever performed.
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "kronphi/matrix.hpp"
#include "kronphi/tensor.hpp"

namespace kronphi {

// Ordered factor list [A_1,...,A_d] representing A_d + ... + A_1 in
// Kronecker-sum sense, never assembled.
template <typename T>
struct KroneckerSum {
  std::vector<Matrix<T>> factors;

  KroneckerSum() = default;
  explicit KroneckerSum(std::vector<Matrix<T>> fs) : factors(std::move(fs)) {
    if (factors.empty())
      throw std::invalid_argument("KroneckerSum: needs at least one factor");
    for (std::size_t mu = 0; mu < factors.size(); ++mu)
      if (!factors[mu].square())
        throw std::invalid_argument("KroneckerSum: factor " + std::to_string(mu) +
                                    " is not square");
  }

  int order() const { return int(factors.size()); }
  std::vector<int> dims() const {
    std::vector<int> d(factors.size());
    for (std::size_t mu = 0; mu < factors.size(); ++mu) d[mu] = factors[mu].rows();
    return d;
  }
};

namespace detail {

template <typename T>
void check_mode_sizes(const Tensor<T>& t, const Matrix<T>& m, int mode) {
  if (mode < 0 || mode >= t.order())
    throw std::invalid_argument("mode_product: mode " + std::to_string(mode) +
                                " out of range for order " +
                                std::to_string(t.order()));
  if (m.cols() != t.dim(mode))
    throw std::invalid_argument(
        "mode_product: size mismatch on mode " + std::to_string(mode) +
        ": matrix has " + std::to_string(m.cols()) + " columns, tensor dim is " +
        std::to_string(t.dim(mode)));
}

}  // namespace detail

// out (+)= t x_mode m. `out` must already have the result shape.
template <typename T>
void mode_product_into(const Tensor<T>& t, const Matrix<T>& m, int mode,
                       Tensor<T>& out, bool accumulate = false) {
  detail::check_mode_sizes(t, m, mode);
  const T beta = accumulate ? T(1) : T{};
  if (mode == 0) {
    const std::size_t rest = t.size() / std::size_t(t.dim(0));
    gemm(m.rows(), int(rest), t.dim(0), T(1), m.data(), m.rows(), t.data(),
         t.dim(0), Op::none, beta, out.data(), m.rows());
    return;
  }
  std::size_t p = 1;
  for (int mu = 0; mu < mode; ++mu) p *= std::size_t(t.dim(mu));
  std::size_t q = 1;
  for (int mu = mode + 1; mu < t.order(); ++mu) q *= std::size_t(t.dim(mu));
  const int nm = t.dim(mode);
  const std::size_t in_slab = p * std::size_t(nm);
  const std::size_t out_slab = p * std::size_t(m.rows());
  if (q == 1) {
    gemm(int(p), m.rows(), nm, T(1), t.data(), int(p), m.data(), m.rows(),
         Op::transpose, beta, out.data(), int(p));
    return;
  }
  gemm_batch_shared_b(int(p), m.rows(), nm, T(1), t.data(), int(p), in_slab,
                      m.data(), m.rows(), Op::transpose, beta, out.data(),
                      int(p), out_slab, int(q));
}

template <typename T>
Tensor<T> mode_product(const Tensor<T>& t, const Matrix<T>& m, int mode) {
  detail::check_mode_sizes(t, m, mode);
  std::vector<int> dims = t.dims();
  dims[mode] = m.rows();
  Tensor<T> out = Tensor<T>::no_init(std::move(dims));
  mode_product_into(t, m, mode, out);
  return out;
}

// Successive mode products t x_0 ms[0] x_1 ... x_{d-1} ms[d-1]; equivalent
// to the Kronecker-product matvec kron(ms[d-1],...,ms[0]) * vec(t).
template <typename T>
Tensor<T> tucker(const Tensor<T>& t, const std::vector<Matrix<T>>& ms) {
  if (int(ms.size()) != t.order())
    throw std::invalid_argument("tucker: expected one factor per mode");
  Tensor<T> cur = mode_product(t, ms[0], 0);
  for (int mu = 1; mu < t.order(); ++mu) cur = mode_product(cur, ms[mu], mu);
  return cur;
}

// sum_mu t x_mu A_mu, i.e. the action of the Kronecker sum without assembly.
template <typename T>
Tensor<T> kronsum_action(const Tensor<T>& t, const KroneckerSum<T>& k) {
  if (int(k.factors.size()) != t.order())
    throw std::invalid_argument("kronsum_action: expected one factor per mode");
  for (int mu = 0; mu < t.order(); ++mu) detail::check_mode_sizes(t, k.factors[mu], mu);
  Tensor<T> out = Tensor<T>::no_init(t.dims());
  mode_product_into(t, k.factors[0], 0, out, /*accumulate=*/false);
  for (int mu = 1; mu < t.order(); ++mu)
    mode_product_into(t, k.factors[mu], mu, out, /*accumulate=*/true);
  return out;
}

}  // namespace kronphi
