// Small dense column-major matrix type used for the Kronecker factors and
// their matrix functions. Real (double) and complex scalars share the code.
#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kronphi/kernels.hpp"

namespace kronphi {

inline double factorial(int k) {
  double f = 1.0;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};

template <typename T>
double abs_of(const T& x) {
  return std::abs(x);
}

template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(int rows, int cols)
      : rows_(rows), cols_(cols), data_(std::size_t(rows) * cols, T{}) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative size");
  }
  Matrix(int rows, int cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != std::size_t(rows) * cols)
      throw std::invalid_argument("Matrix: data size does not match rows*cols");
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(int i, int j) { return data_[i + std::size_t(j) * rows_]; }
  const T& operator()(int i, int j) const { return data_[i + std::size_t(j) * rows_]; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  Matrix transposed() const {
    Matrix out(cols_, rows_);
    for (int j = 0; j < cols_; ++j)
      for (int i = 0; i < rows_; ++i) out(j, i) = (*this)(i, j);
    return out;
  }

  // Max absolute column sum.
  double norm1() const {
    double best = 0.0;
    for (int j = 0; j < cols_; ++j) {
      double s = 0.0;
      for (int i = 0; i < rows_; ++i) s += abs_of((*this)(i, j));
      best = std::max(best, s);
    }
    return best;
  }

  double norm_fro() const {
    double s = 0.0;
    for (const T& x : data_) {
      const double a = abs_of(x);
      s += a * a;
    }
    return std::sqrt(s);
  }

  bool all_finite() const {
    for (const T& x : data_) {
      if constexpr (is_complex<T>::value) {
        if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
      } else {
        if (!std::isfinite(x)) return false;
      }
    }
    return true;
  }

  Matrix& operator+=(const Matrix& o) {
    check_same_shape(o, "+=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    return *this;
  }
  Matrix& operator-=(const Matrix& o) {
    check_same_shape(o, "-=");
    for (std::size_t i = 0; i < data_.size(); ++i) data_[i] -= o.data_[i];
    return *this;
  }
  Matrix& operator*=(T s) {
    for (T& x : data_) x *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(T s, Matrix a) { return a *= s; }

  friend bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  void check_same_shape(const Matrix& o, const char* what) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw std::invalid_argument(std::string("Matrix: shape mismatch in ") + what);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

// C = A * op(B) through the blocked kernel.
template <typename T>
Matrix<T> multiply(const Matrix<T>& a, const Matrix<T>& b, Op opb = Op::none,
                   bool parallel = true) {
  const int k = a.cols();
  const int n = (opb == Op::none) ? b.cols() : b.rows();
  const int bk = (opb == Op::none) ? b.rows() : b.cols();
  if (bk != k) throw std::invalid_argument("multiply: inner dimensions differ");
  Matrix<T> c(a.rows(), n);
  gemm(a.rows(), n, k, T(1), a.data(), a.rows(), b.data(), b.rows(), opb, T{},
       c.data(), c.rows(), parallel);
  return c;
}

// y = A*x for a dense square-or-rectangular matrix and contiguous vectors.
template <typename T>
void matvec(const Matrix<T>& a, const T* x, T* y, bool parallel = true) {
  gemm(a.rows(), 1, a.cols(), T(1), a.data(), a.rows(), x, a.cols(), Op::none,
       T{}, y, a.rows(), parallel);
}

}  // namespace kronphi
