// Dense matrix exponential (diagonal Pade with scaling and squaring) and
// joint evaluation of phi_0..phi_l for small matrices via Gauss-Legendre-
// Lobatto quadrature of the integral representation, combined with a
// modified squaring recurrence that doubles the whole phi table at once.
#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "kronphi/linsolve.hpp"
#include "kronphi/matrix.hpp"

namespace kronphi {

namespace detail {

// Pade coefficients and 1-norm thresholds for degrees 3,5,7,9,13.
inline constexpr double kPadeTheta[5] = {
    1.495585217958292e-2, 2.539398330063230e-1, 9.504178996162932e-1,
    2.097847961257068e0, 5.371920351148152e0};

inline const std::vector<std::vector<double>>& pade_coeffs() {
  static const std::vector<std::vector<double>> b = {
      {120., 60., 12., 1.},
      {30240., 15120., 3360., 420., 30., 1.},
      {17297280., 8648640., 1995840., 277200., 25200., 1512., 56., 1.},
      {17643225600., 8821612800., 2075673600., 302702400., 30270240.,
       2162160., 110880., 3960., 90., 1.},
      {64764752532480000., 32382376266240000., 7771770303897600.,
       1187353796428800., 129060195264000., 10559470521600., 670442572800.,
       33522128640., 1323241920., 40840800., 960960., 16380., 182., 1.}};
  return b;
}

template <typename T>
Matrix<T> pade_low(const Matrix<T>& a, int degree_index) {
  const auto& b = pade_coeffs()[degree_index];
  const int n = a.rows();
  const Matrix<T> eye = Matrix<T>::identity(n);
  std::vector<Matrix<T>> pow;  // even powers A^2, A^4, ...
  pow.push_back(multiply(a, a));
  const int npow = (int(b.size()) - 2) / 2;  // degree 3 -> 1, 9 -> 4
  for (int p = 1; p < npow; ++p) pow.push_back(multiply(pow.back(), pow[0]));
  Matrix<T> u = T(b[1]) * eye;
  Matrix<T> v = T(b[0]) * eye;
  for (int p = 0; p < npow; ++p) {
    u += T(b[2 * p + 3]) * pow[p];
    v += T(b[2 * p + 2]) * pow[p];
  }
  u = multiply(a, u);
  return lu_solve(lu_factor(v - u), v + u);
}

template <typename T>
Matrix<T> pade13(const Matrix<T>& a) {
  const auto& b = pade_coeffs()[4];
  const int n = a.rows();
  const Matrix<T> eye = Matrix<T>::identity(n);
  const Matrix<T> a2 = multiply(a, a);
  const Matrix<T> a4 = multiply(a2, a2);
  const Matrix<T> a6 = multiply(a4, a2);
  Matrix<T> w = T(b[13]) * a6 + T(b[11]) * a4 + T(b[9]) * a2;
  w = multiply(a6, w);
  w += T(b[7]) * a6 + T(b[5]) * a4 + T(b[3]) * a2 + T(b[1]) * eye;
  const Matrix<T> u = multiply(a, w);
  Matrix<T> z = T(b[12]) * a6 + T(b[10]) * a4 + T(b[8]) * a2;
  z = multiply(a6, z);
  z += T(b[6]) * a6 + T(b[4]) * a4 + T(b[2]) * a2 + T(b[0]) * eye;
  return lu_solve(lu_factor(z - u), z + u);
}

}  // namespace detail

// e^X by diagonal Pade approximation with scaling and squaring.
template <typename T>
Matrix<T> expm(const Matrix<T>& x) {
  if (!x.square()) throw std::invalid_argument("expm: matrix not square");
  if (!x.all_finite()) throw std::invalid_argument("expm: non-finite entries");
  const double d = x.norm1();
  for (int idx = 0; idx < 4; ++idx)
    if (d <= detail::kPadeTheta[idx]) return detail::pade_low(x, idx);
  int s = 0;
  double v = d;
  while (v > detail::kPadeTheta[4]) {
    v *= 0.5;
    ++s;
  }
  Matrix<T> a = x;
  a *= T(std::ldexp(1.0, -s));
  Matrix<T> f = detail::pade13(a);
  for (int i = 0; i < s; ++i) f = multiply(f, f);
  return f;
}

// Gauss-Legendre-Lobatto rule on [0,1]: q nodes including both endpoints,
// weights summing to one, exact for polynomials of degree <= 2q-3.
struct GLLRule {
  int q = 0;
  std::vector<double> nodes;    // nodes[0] = 0, nodes[q-1] = 1
  std::vector<double> weights;
};

GLLRule gll_rule(int q);

inline constexpr int kDefaultQuadNodes = 12;

// phi_0..phi_ell_max of one matrix at one argument. phis[0] is always the
// exponential of base.
template <typename T>
struct PhiTable {
  Matrix<T> base;
  int ell_max = 0;
  std::vector<Matrix<T>> phis;
  int scaling_exponent = 0;
};

// Doubling step: given the table at argument z, produce the table at 2z.
// All orders are advanced from same-scale values before any is replaced.
template <typename T>
PhiTable<T> phi_square_step(const PhiTable<T>& t) {
  PhiTable<T> out;
  out.base = t.base;
  out.base *= T(2);
  out.ell_max = t.ell_max;
  out.scaling_exponent = t.scaling_exponent;
  out.phis.reserve(t.phis.size());
  out.phis.push_back(multiply(t.phis[0], t.phis[0]));
  for (int ell = 1; ell <= t.ell_max; ++ell) {
    Matrix<T> m = multiply(t.phis[0], t.phis[ell]);
    for (int k = 1; k <= ell; ++k)
      m += T(1.0 / factorial(ell - k)) * t.phis[k];
    m *= T(std::ldexp(1.0, -ell));
    out.phis.push_back(std::move(m));
  }
  return out;
}

// Quadrature evaluation of the phi functions with modified scaling and
// squaring. The argument is scaled by 2^-s so its 1-norm drops below one,
// phi_j(X/2^s) for every 0 < j <= ell_max is formed from one shared set of
// q-1 matrix exponentials (the node at 1 contributes the identity and is
// never exponentiated; the node at 0 yields e^{X/2^s}, reused as phi_0),
// and s doubling steps of the recurrence recover the table at X.
template <typename T>
PhiTable<T> phiquad(const Matrix<T>& x, int ell_max, const GLLRule& rule,
                    std::optional<int> forced_scaling = std::nullopt) {
  if (!x.square()) throw std::invalid_argument("phiquad: matrix not square");
  if (ell_max < 0) throw std::invalid_argument("phiquad: negative ell_max");
  if (!x.all_finite()) throw std::invalid_argument("phiquad: non-finite entries");

  const double d = x.norm1();
  int s = 0;
  for (double v = d; v >= 1.0; v *= 0.5) ++s;
  if (forced_scaling) {
    if (*forced_scaling < s)
      throw std::invalid_argument("phiquad: forced scaling below minimum");
    s = *forced_scaling;
  }

  Matrix<T> y = x;
  y *= T(std::ldexp(1.0, -s));

  PhiTable<T> table;
  table.base = y;
  table.ell_max = ell_max;
  table.scaling_exponent = s;

  const int q = rule.q;
  std::vector<Matrix<T>> exps;
  exps.reserve(q - 1);
  for (int i = 0; i < q - 1; ++i) {
    Matrix<T> arg = y;
    arg *= T(1.0 - rule.nodes[i]);
    exps.push_back(expm(arg));
  }

  table.phis.push_back(exps[0]);
  const int n = x.rows();
  for (int j = 1; j <= ell_max; ++j) {
    Matrix<T> m(n, n);
    const double jm1fac = factorial(j - 1);
    for (int i = 0; i < q - 1; ++i) {
      const double theta = rule.nodes[i];
      if (j > 1 && theta == 0.0) continue;
      const double coeff =
          rule.weights[i] * std::pow(theta, double(j - 1)) / jm1fac;
      m += T(coeff) * exps[i];
    }
    const double endpoint = rule.weights[q - 1] / jm1fac;  // theta = 1
    for (int i = 0; i < n; ++i) m(i, i) += T(endpoint);
    table.phis.push_back(std::move(m));
  }

  for (int step = 0; step < s; ++step) table = phi_square_step(table);
  table.scaling_exponent = s;
  return table;
}

template <typename T>
PhiTable<T> phiquad(const Matrix<T>& x, int ell_max) {
  return phiquad(x, ell_max, gll_rule(kDefaultQuadNodes));
}

}  // namespace kronphi
