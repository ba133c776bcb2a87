// Order-d dense tensor with column-major linearization: index i1 varies
// fastest, so the flat storage *is* the stacked-columns vector of the tensor.
#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <numeric>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include "kronphi/matrix.hpp"

namespace kronphi {

template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> dims) : dims_(std::move(dims)) {
    data_.resize(checked_size(dims_));
    std::fill(data_.begin(), data_.end(), T{});
  }
  Tensor(std::vector<int> dims, const std::vector<T>& data)
      : dims_(std::move(dims)), data_(data.begin(), data.end()) {
    if (data_.size() != checked_size(dims_))
      throw std::invalid_argument("Tensor: data length != product of dims");
  }

  // Storage left uninitialized; for results that are fully overwritten.
  static Tensor no_init(std::vector<int> dims) {
    Tensor t;
    t.dims_ = std::move(dims);
    t.data_.resize(checked_size(t.dims_));
    return t;
  }

  int order() const { return int(dims_.size()); }
  const std::vector<int>& dims() const { return dims_; }
  int dim(int mu) const { return dims_[mu]; }
  std::size_t size() const { return data_.size(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  T& operator[](std::size_t i) { return data_[i]; }
  const T& operator[](std::size_t i) const { return data_[i]; }

  // Multi-index access, 0-based, first index fastest.
  T& at(std::initializer_list<int> idx) { return data_[offset(idx)]; }
  const T& at(std::initializer_list<int> idx) const { return data_[offset(idx)]; }

  double norm_inf() const {
    double best = 0.0;
    for (const T& x : data_) best = std::max(best, abs_of(x));
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

 private:
  static std::size_t checked_size(const std::vector<int>& dims) {
    if (dims.empty()) throw std::invalid_argument("Tensor: empty dims");
    std::size_t n = 1;
    for (int d : dims) {
      if (d <= 0) throw std::invalid_argument("Tensor: nonpositive dim");
      n *= std::size_t(d);
    }
    return n;
  }

  std::size_t offset(std::initializer_list<int> idx) const {
    if (int(idx.size()) != order())
      throw std::invalid_argument("Tensor::at: wrong index count");
    std::size_t off = 0, stride = 1;
    int mu = 0;
    for (int i : idx) {
      off += stride * std::size_t(i);
      stride *= std::size_t(dims_[mu++]);
    }
    return off;
  }

  std::vector<int> dims_;
  std::vector<T, default_init_allocator<T>> data_;
};

// vec stacks entries with the first index fastest; by construction this is
// exactly the flat storage.
template <typename T>
std::vector<T> vec(const Tensor<T>& t) {
  return std::vector<T>(t.data(), t.data() + t.size());
}

template <typename T>
Tensor<T> unvec(const std::vector<T>& v, std::vector<int> dims) {
  return Tensor<T>(std::move(dims), v);
}

// y += alpha * x, elementwise over equally shaped tensors.
template <typename T>
void axpy(T alpha, const Tensor<T>& x, Tensor<T>& y) {
  if (x.dims() != y.dims()) throw std::invalid_argument("axpy: shape mismatch");
  T* KRONPHI_RESTRICT yd = y.data();
  const T* KRONPHI_RESTRICT xd = x.data();
  const std::ptrdiff_t n = std::ptrdiff_t(y.size());
#pragma omp parallel for schedule(static) if (n > (1 << 14))
  for (std::ptrdiff_t i = 0; i < n; ++i) yd[i] += alpha * xd[i];
}

template <typename T>
void scale(Tensor<T>& x, T alpha) {
  T* KRONPHI_RESTRICT xd = x.data();
  const std::ptrdiff_t n = std::ptrdiff_t(x.size());
#pragma omp parallel for schedule(static) if (n > (1 << 14))
  for (std::ptrdiff_t i = 0; i < n; ++i) xd[i] *= alpha;
}

// z = x + alpha*y as a fresh tensor.
template <typename T>
Tensor<T> add_scaled(const Tensor<T>& x, T alpha, const Tensor<T>& y) {
  if (x.dims() != y.dims())
    throw std::invalid_argument("add_scaled: shape mismatch");
  Tensor<T> z = Tensor<T>::no_init(x.dims());
  T* KRONPHI_RESTRICT zd = z.data();
  const T* KRONPHI_RESTRICT xd = x.data();
  const T* KRONPHI_RESTRICT yd = y.data();
  const std::ptrdiff_t n = std::ptrdiff_t(z.size());
#pragma omp parallel for schedule(static) if (n > (1 << 14))
  for (std::ptrdiff_t i = 0; i < n; ++i) zd[i] = xd[i] + alpha * yd[i];
  return z;
}

template <typename T>
double diff_norm_inf(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.dims() != b.dims())
    throw std::invalid_argument("diff_norm_inf: shape mismatch");
  double best = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    best = std::max(best, abs_of(a[i] - b[i]));
  return best;
}

template <typename T>
double diff_norm_fro(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.dims() != b.dims())
    throw std::invalid_argument("diff_norm_fro: shape mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = abs_of(a[i] - b[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace kronphi
