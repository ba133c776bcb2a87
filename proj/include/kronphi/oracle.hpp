// Brute-force reference computations for validation: dense Kronecker-sum
// assembly and truncated-Taylor phi evaluations. Deliberately a different
// algorithm family from the quadrature-based production path, so agreement
// between the two is evidence rather than circularity. Never used on timed
// benchmark paths.
#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <vector>

#include "kronphi/matrix.hpp"
#include "kronphi/mode_product.hpp"

namespace kronphi {

template <typename T>
struct DenseOperator {
  std::size_t n = 0;
  Matrix<T> data;
};

inline constexpr std::size_t kDenseAssemblyLimit = 10000;

// Explicit sum of Kronecker products with identities.
template <typename T>
DenseOperator<T> assemble_kronsum(const KroneckerSum<T>& k) {
  std::size_t n = 1;
  for (const auto& f : k.factors) n *= std::size_t(f.rows());
  if (n > kDenseAssemblyLimit)
    throw std::invalid_argument(
        "assemble_kronsum: refusing dense assembly beyond N = 10^4");
  DenseOperator<T> out;
  out.n = n;
  out.data = Matrix<T>(int(n), int(n));
  std::size_t pre = 1;
  for (int mu = 0; mu < k.order(); ++mu) {
    const Matrix<T>& a = k.factors[mu];
    const std::size_t nm = std::size_t(a.rows());
    const std::size_t post = n / (pre * nm);
    for (std::size_t b = 0; b < post; ++b)
      for (std::size_t jm = 0; jm < nm; ++jm)
        for (std::size_t im = 0; im < nm; ++im) {
          const T v = a(int(im), int(jm));
          if (v == T{}) continue;
          const std::size_t r0 = pre * im + pre * nm * b;
          const std::size_t c0 = pre * jm + pre * nm * b;
          for (std::size_t a0 = 0; a0 < pre; ++a0)
            out.data(int(r0 + a0), int(c0 + a0)) += v;
        }
    pre *= nm;
  }
  return out;
}

template <typename T>
std::vector<T> apply_dense(const DenseOperator<T>& op, const std::vector<T>& v) {
  if (v.size() != op.n) throw std::invalid_argument("apply_dense: length mismatch");
  std::vector<T> y(op.n);
  matvec(op.data, v.data(), y.data());
  return y;
}

namespace detail {

inline constexpr int kTaylorCap = 200;
inline constexpr double kTaylorTol = 1e-17;

template <typename T>
double vec_norm_inf(const std::vector<T>& v) {
  double best = 0.0;
  for (const T& x : v) best = std::max(best, abs_of(x));
  return best;
}

// e^Y by plain Taylor summation; callers guarantee a small norm.
template <typename T>
Matrix<T> expm_taylor(const Matrix<T>& y) {
  const int n = y.rows();
  Matrix<T> e = Matrix<T>::identity(n);
  Matrix<T> term = Matrix<T>::identity(n);
  for (int i = 1; i <= kTaylorCap; ++i) {
    term = multiply(y, term);
    term *= T(1.0 / i);
    e += term;
    if (term.norm1() < kTaylorTol * e.norm1()) return e;
  }
  throw std::runtime_error("expm_taylor: series did not converge");
}

}  // namespace detail

// phi_ell(M) v by scaling M below 1/2 in the 1-norm, summing the Taylor
// series of all orders 0..ell from one shared sequence of matrix-vector
// products, then undoing the scaling with the doubling recurrence applied
// jointly to the vector-propagated table.
template <typename T>
std::vector<T> phi_taylor_action(const Matrix<T>& m, int ell,
                                 const std::vector<T>& v,
                                 std::optional<int> forced_scaling = std::nullopt) {
  using namespace detail;
  if (!m.square()) throw std::invalid_argument("phi_taylor_action: not square");
  if (v.size() != std::size_t(m.rows()))
    throw std::invalid_argument("phi_taylor_action: vector length mismatch");
  if (!m.all_finite())
    throw std::invalid_argument("phi_taylor_action: non-finite entries");
  if (ell < 0) throw std::invalid_argument("phi_taylor_action: negative ell");

  const double d = m.norm1();
  int s = 0;
  for (double w = d; w >= 0.5; w *= 0.5) ++s;
  if (forced_scaling) {
    if (*forced_scaling < s)
      throw std::invalid_argument("phi_taylor_action: forced scaling below minimum");
    s = *forced_scaling;
  }
  Matrix<T> y = m;
  y *= T(std::ldexp(1.0, -s));

  std::vector<std::vector<T>> p(ell + 1);
  for (int j = 0; j <= ell; ++j) {
    p[j] = v;
    for (T& x : p[j]) x *= T(1.0 / factorial(j));
  }
  std::vector<T> w = v, tmp(v.size());
  bool converged = false;
  for (int i = 1; i <= kTaylorCap; ++i) {
    matvec(y, w.data(), tmp.data());
    w.swap(tmp);
    bool all_small = true;
    for (int j = 0; j <= ell; ++j) {
      const double c = 1.0 / factorial(i + j);
      for (std::size_t r = 0; r < w.size(); ++r) p[j][r] += T(c) * w[r];
      if (vec_norm_inf(w) * c >= kTaylorTol * vec_norm_inf(p[j]))
        all_small = false;
    }
    if (all_small) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw std::runtime_error("phi_taylor_action: series did not converge");

  if (s > 0) {
    Matrix<T> e = expm_taylor(y);
    for (int step = 0; step < s; ++step) {
      std::vector<std::vector<T>> np(ell + 1);
      for (int j = 0; j <= ell; ++j) {
        np[j].resize(v.size());
        matvec(e, p[j].data(), np[j].data());
        const double sc = std::ldexp(1.0, -j);
        for (std::size_t r = 0; r < v.size(); ++r) {
          T acc = np[j][r];
          for (int k = 1; k <= j; ++k)
            acc += T(1.0 / factorial(j - k)) * p[k][r];
          np[j][r] = T(sc) * acc;
        }
      }
      p.swap(np);
      if (step + 1 < s) e = multiply(e, e);
    }
  }
  return p[ell];
}

// Matrix-valued variant of the same Taylor + doubling scheme; used by the
// dense-oracle integrator backend where whole propagators are reused.
template <typename T>
std::vector<Matrix<T>> phi_taylor_table(const Matrix<T>& m, int ell_max) {
  using namespace detail;
  if (!m.square()) throw std::invalid_argument("phi_taylor_table: not square");
  if (ell_max < 0) throw std::invalid_argument("phi_taylor_table: negative ell");
  const int n = m.rows();
  const double d = m.norm1();
  int s = 0;
  for (double w = d; w >= 0.5; w *= 0.5) ++s;
  Matrix<T> y = m;
  y *= T(std::ldexp(1.0, -s));

  std::vector<Matrix<T>> p(ell_max + 1);
  for (int j = 0; j <= ell_max; ++j)
    p[j] = T(1.0 / factorial(j)) * Matrix<T>::identity(n);
  Matrix<T> w = Matrix<T>::identity(n);
  bool converged = false;
  for (int i = 1; i <= kTaylorCap; ++i) {
    w = multiply(y, w);
    bool all_small = true;
    for (int j = 0; j <= ell_max; ++j) {
      const double c = 1.0 / factorial(i + j);
      p[j] += T(c) * w;
      if (w.norm1() * c >= kTaylorTol * p[j].norm1()) all_small = false;
    }
    if (all_small) {
      converged = true;
      break;
    }
  }
  if (!converged)
    throw std::runtime_error("phi_taylor_table: series did not converge");

  for (int step = 0; step < s; ++step) {
    std::vector<Matrix<T>> np(ell_max + 1);
    np[0] = multiply(p[0], p[0]);
    for (int j = 1; j <= ell_max; ++j) {
      Matrix<T> acc = multiply(p[0], p[j]);
      for (int k = 1; k <= j; ++k) acc += T(1.0 / factorial(j - k)) * p[k];
      acc *= T(std::ldexp(1.0, -j));
      np[j] = std::move(acc);
    }
    p.swap(np);
  }
  return p;
}

}  // namespace kronphi
