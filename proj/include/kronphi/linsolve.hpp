// LU factorization with partial pivoting and multi-RHS solve, blocked so the
// trailing updates run through the parallel GEMM kernel. Sized for the small
// factor matrices of this library (n up to a few thousand).
#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "kronphi/matrix.hpp"

namespace kronphi {

template <typename T>
struct LUFactors {
  Matrix<T> lu;          // packed unit-lower L and upper U
  std::vector<int> piv;  // row j was swapped with piv[j] at elimination step j
};

namespace detail {

inline constexpr int kLuPanel = 64;

// Unblocked panel factorization of a(j0:n, j0:j0+nb), pivoting over full
// column height; swaps are applied to panel columns only and recorded.
template <typename T>
void lu_panel(Matrix<T>& a, int j0, int nb, std::vector<int>& piv) {
  const int n = a.rows();
  for (int j = j0; j < j0 + nb; ++j) {
    int p = j;
    double best = abs_of(a(j, j));
    for (int i = j + 1; i < n; ++i) {
      const double v = abs_of(a(i, j));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best == 0.0) throw std::runtime_error("lu_factor: matrix is singular");
    piv[j] = p;
    if (p != j)
      for (int c = j0; c < j0 + nb; ++c) std::swap(a(j, c), a(p, c));
    const T inv = T(1) / a(j, j);
    for (int i = j + 1; i < n; ++i) a(i, j) *= inv;
    for (int c = j + 1; c < j0 + nb; ++c) {
      const T ajc = a(j, c);
      if (ajc == T{}) continue;
      T* KRONPHI_RESTRICT col = &a(0, c);
      const T* KRONPHI_RESTRICT lcol = &a(0, j);
      for (int i = j + 1; i < n; ++i) col[i] -= lcol[i] * ajc;
    }
  }
}

// Apply recorded swaps for steps j0..j0+nb to columns [c0, c1).
template <typename T>
void lu_apply_swaps(Matrix<T>& a, int j0, int nb, int c0, int c1,
                    const std::vector<int>& piv) {
  for (int j = j0; j < j0 + nb; ++j) {
    const int p = piv[j];
    if (p != j)
      for (int c = c0; c < c1; ++c) std::swap(a(j, c), a(p, c));
  }
}

// b(rows j0..j0+nb) <- L11^{-1} b with L11 the unit-lower diagonal block.
template <typename T>
void trsm_lower_unit(const Matrix<T>& lu, int j0, int nb, T* b, int ldb, int nrhs) {
#pragma omp parallel for schedule(static) if (nrhs > 8)
  for (int c = 0; c < nrhs; ++c) {
    T* col = b + std::size_t(c) * ldb;
    for (int i = 1; i < nb; ++i) {
      T s = col[j0 + i];
      for (int r = 0; r < i; ++r) s -= lu(j0 + i, j0 + r) * col[j0 + r];
      col[j0 + i] = s;
    }
  }
}

template <typename T>
void trsm_upper(const Matrix<T>& lu, int j0, int nb, T* b, int ldb, int nrhs) {
#pragma omp parallel for schedule(static) if (nrhs > 8)
  for (int c = 0; c < nrhs; ++c) {
    T* col = b + std::size_t(c) * ldb;
    for (int i = nb - 1; i >= 0; --i) {
      T s = col[j0 + i];
      for (int r = i + 1; r < nb; ++r) s -= lu(j0 + i, j0 + r) * col[j0 + r];
      col[j0 + i] = s / lu(j0 + i, j0 + i);
    }
  }
}

}  // namespace detail

template <typename T>
LUFactors<T> lu_factor(Matrix<T> a) {
  using namespace detail;
  if (!a.square()) throw std::invalid_argument("lu_factor: matrix not square");
  const int n = a.rows();
  std::vector<int> piv(n);
  for (int j0 = 0; j0 < n; j0 += kLuPanel) {
    const int nb = std::min(kLuPanel, n - j0);
    lu_panel(a, j0, nb, piv);
    lu_apply_swaps(a, j0, nb, 0, j0, piv);
    lu_apply_swaps(a, j0, nb, j0 + nb, n, piv);
    const int rest = n - j0 - nb;
    if (rest > 0) {
      // Block row of U: solve L11 X = A12 column by column.
      trsm_lower_unit(a, j0, nb, &a(0, j0 + nb), n, rest);
      // Trailing update A22 -= L21 * U12.
      gemm(rest, rest, nb, T(-1), &a(j0 + nb, j0), n, &a(j0, j0 + nb), n,
           Op::none, T(1), &a(j0 + nb, j0 + nb), n);
    }
  }
  return LUFactors<T>{std::move(a), std::move(piv)};
}

// Solve A X = B for all columns of B.
template <typename T>
Matrix<T> lu_solve(const LUFactors<T>& f, Matrix<T> b) {
  using namespace detail;
  const int n = f.lu.rows();
  if (b.rows() != n) throw std::invalid_argument("lu_solve: RHS row mismatch");
  const int nrhs = b.cols();
  for (int j = 0; j < n; ++j) {
    const int p = f.piv[j];
    if (p != j)
      for (int c = 0; c < nrhs; ++c) std::swap(b(j, c), b(p, c));
  }
  for (int j0 = 0; j0 < n; j0 += kLuPanel) {
    const int nb = std::min(kLuPanel, n - j0);
    trsm_lower_unit(f.lu, j0, nb, b.data(), n, nrhs);
    const int rest = n - j0 - nb;
    if (rest > 0)
      gemm(rest, nrhs, nb, T(-1), &f.lu(j0 + nb, j0), n, &b(j0, 0), n, Op::none,
           T(1), &b(j0 + nb, 0), n);
  }
  for (int j0 = ((n - 1) / kLuPanel) * kLuPanel; j0 >= 0; j0 -= kLuPanel) {
    const int nb = std::min(kLuPanel, n - j0);
    trsm_upper(f.lu, j0, nb, b.data(), n, nrhs);
    if (j0 > 0)
      gemm(j0, nrhs, nb, T(-1), &f.lu(0, j0), n, &b(j0, 0), n, Op::none, T(1),
           &b(0, 0), n);
  }
  return b;
}

template <typename T>
Matrix<T> solve(const Matrix<T>& a, Matrix<T> b) {
  return lu_solve(lu_factor(a), std::move(b));
}

}  // namespace kronphi
