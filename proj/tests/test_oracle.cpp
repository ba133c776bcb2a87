#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "kronphi/matrix_functions.hpp"
#include "kronphi/oracle.hpp"

using namespace kronphi;

namespace {

std::mt19937_64 rng(909);

Matrix<double> random_matrix(int n, double norm1_target) {
  std::uniform_real_distribution<double> dist(-1, 1);
  Matrix<double> m(n, n);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  m *= norm1_target / m.norm1();
  return m;
}

std::vector<double> random_vector(int n) {
  std::uniform_real_distribution<double> dist(-1, 1);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

double rel2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("assemble_kronsum: single factor is the factor itself") {
  const Matrix<double> a = random_matrix(5, 2.0);
  const auto dense = assemble_kronsum(KroneckerSum<double>({a}));
  Matrix<double> d = dense.data - a;
  CHECK(d.norm1() == 0.0);
}

TEST_CASE("assemble_kronsum: identity + identity = 2I") {
  const auto dense = assemble_kronsum(KroneckerSum<double>(
      {Matrix<double>::identity(3), Matrix<double>::identity(4)}));
  Matrix<double> want = 2.0 * Matrix<double>::identity(12);
  want -= dense.data;
  CHECK(want.norm1() == 0.0);
}

TEST_CASE("assemble_kronsum refuses beyond the guardrail") {
  const std::vector<Matrix<double>> fs = {Matrix<double>::identity(101),
                                          Matrix<double>::identity(101)};
  CHECK_THROWS_AS(assemble_kronsum(KroneckerSum<double>(fs)),
                  std::invalid_argument);
}

TEST_CASE("phi_taylor_action at the zero matrix gives v/l!") {
  const auto v = random_vector(6);
  for (int ell = 0; ell <= 3; ++ell) {
    const auto got = phi_taylor_action(Matrix<double>(6, 6), ell, v);
    for (int i = 0; i < 6; ++i)
      CHECK(got[i] == doctest::Approx(v[i] / factorial(ell)).epsilon(1e-15));
  }
}

TEST_CASE("phi_taylor_action scalar exponential") {
  Matrix<double> lam(1, 1);
  lam(0, 0) = -1.7;
  const auto got = phi_taylor_action(lam, 0, {2.0});
  CHECK(got[0] == doctest::Approx(2.0 * std::exp(-1.7)).epsilon(1e-14));
}

TEST_CASE("self-consistency under an extra scaling step (50x50)") {
  const Matrix<double> m = random_matrix(50, 8.0);
  const auto v = random_vector(50);
  const auto a = phi_taylor_action(m, 2, v);
  // Recompute with the scaling exponent bumped by one; the doubling
  // recurrence must undo it to the same answer.
  int s = 0;
  for (double w = m.norm1(); w >= 0.5; w *= 0.5) ++s;
  const auto b = phi_taylor_action(m, 2, v, s + 1);
  CHECK(rel2(a, b) < 1e-13);
}

TEST_CASE("phi_taylor_action ell=0 agrees with expm") {
  for (double target : {0.5, 4.0, 10.0}) {
    const Matrix<double> m = random_matrix(9, target);
    const auto v = random_vector(9);
    const Matrix<double> e = expm(m);
    std::vector<double> want(9);
    matvec(e, v.data(), want.data());
    CHECK(rel2(phi_taylor_action(m, 0, v), want) < 1e-12);
  }
}

TEST_CASE("recurrence: M phi_{l+1} v + v/l! = phi_l v") {
  const Matrix<double> m = random_matrix(12, 6.0);
  const auto v = random_vector(12);
  for (int ell = 1; ell <= 3; ++ell) {
    const auto hi = phi_taylor_action(m, ell, v);
    std::vector<double> lhs(12);
    matvec(m, hi.data(), lhs.data());
    for (int i = 0; i < 12; ++i) lhs[i] += v[i] / factorial(ell - 1);
    CHECK(rel2(lhs, phi_taylor_action(m, ell - 1, v)) < 1e-12);
  }
}

TEST_CASE("phi_taylor_table matches the action variant") {
  const Matrix<double> m = random_matrix(8, 5.0);
  const auto tab = phi_taylor_table(m, 2);
  const auto v = random_vector(8);
  for (int ell = 0; ell <= 2; ++ell) {
    std::vector<double> got(8);
    matvec(tab[ell], v.data(), got.data());
    CHECK(rel2(got, phi_taylor_action(m, ell, v)) < 1e-13);
  }
}

TEST_CASE("oracle input validation") {
  Matrix<double> bad(2, 2);
  bad(1, 1) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(phi_taylor_action(bad, 1, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(phi_taylor_action(Matrix<double>(2, 2), 1, {1.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(phi_taylor_action(Matrix<double>(2, 3), 1, {1.0, 2.0, 3.0}),
                  std::invalid_argument);
}
