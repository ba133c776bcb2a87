#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "kronphi/bench_runner.hpp"
#include "kronphi/integrators.hpp"
#include "kronphi/oracle.hpp"

using namespace kronphi;

namespace {

std::mt19937_64 rng(555);

Matrix<double> random_stable(int n) {
  std::uniform_real_distribution<double> dist(-1, 1);
  Matrix<double> m(n, n);
  for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  const double shift = m.norm1();
  for (int i = 0; i < n; ++i) m(i, i) -= shift;
  return m;
}

Tensor<double> random_tensor(std::vector<int> dims) {
  std::uniform_real_distribution<double> dist(-1, 1);
  Tensor<double> t(std::move(dims));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = dist(rng);
  return t;
}

// Scalar logistic-type problem u' = -u + u^2 with closed-form flow.
double exact_flow(double u0, double t) {
  return 1.0 / (1.0 + (1.0 / u0 - 1.0) * std::exp(t));
}

GFun square_g() {
  return [](double, const Tensor<double>& u) {
    Tensor<double> g(u.dims());
    for (std::size_t i = 0; i < u.size(); ++i) g[i] = u[i] * u[i];
    return g;
  };
}

GFun zero_g() {
  return [](double, const Tensor<double>& u) { return Tensor<double>(u.dims()); };
}

ProblemSpec scalar_problem(double u0) {
  Matrix<double> lam(1, 1);
  lam(0, 0) = -1.0;
  ProblemSpec p;
  p.K = KroneckerSum<double>({lam});
  p.g = square_g();
  p.u0 = Tensor<double>({1}, {u0});
  p.t0 = 0.0;
  p.t_final = 1.0;
  return p;
}

// A small nonlinear 2d Kronecker problem for backend comparisons.
ProblemSpec small_problem() {
  ProblemSpec p;
  p.K = KroneckerSum<double>({random_stable(5), random_stable(6)});
  p.g = [](double t, const Tensor<double>& u) {
    Tensor<double> g(u.dims());
    for (std::size_t i = 0; i < u.size(); ++i)
      g[i] = 0.2 / (1.0 + u[i] * u[i]) + 0.1 * std::cos(t);
    return g;
  };
  p.u0 = random_tensor({5, 6});
  p.t0 = 0.0;
  p.t_final = 1.0;
  return p;
}

double rel_fro(const Tensor<double>& a, const Tensor<double>& b) {
  return diff_norm_fro(a, b) / b.norm_fro();
}

}  // namespace

TEST_CASE("lawson-euler with g = 0 is the exact exponential action") {
  const KroneckerSum<double> k({random_stable(4), random_stable(5)});
  const Tensor<double> u = random_tensor({4, 5});
  const double tau = 0.2;
  const auto exps = build_split_phi(k, tau, 0).factors;
  const Tensor<double> got = lawson_euler_step(u, 0.0, tau, zero_g(), exps);
  Matrix<double> kd = assemble_kronsum(k).data;
  kd *= tau;
  const auto want = phi_taylor_action(kd, 0, vec(u));
  double worst = 0;
  for (std::size_t i = 0; i < want.size(); ++i)
    worst = std::max(worst, std::abs(got[i] - want[i]));
  CHECK(worst / u.norm_inf() < 1e-12);
}

TEST_CASE("lawson-euler with K = 0 is forward Euler") {
  const KroneckerSum<double> k({Matrix<double>(3, 3)});
  const Tensor<double> u = random_tensor({3});
  const double tau = 0.5;
  const auto exps = build_split_phi(k, tau, 0).factors;
  const Tensor<double> got = lawson_euler_step(u, 0.0, tau, square_g(), exps);
  for (int i = 0; i < 3; ++i)
    CHECK(got[i] == doctest::Approx(u[i] + tau * u[i] * u[i]).epsilon(1e-14));
}

TEST_CASE("lawson-euler scalar decay") {
  ProblemSpec p = scalar_problem(1.0);
  p.g = zero_g();
  StepperConfig c;
  c.method = Method::LawsonEuler;
  c.n_steps = 10;  // tau = 0.1
  // after one step u = e^{-0.1}
  p.t_final = 0.1;
  c.n_steps = 1;
  const auto res = integrate(p, c);
  CHECK(res.final[0] == doctest::Approx(std::exp(-0.1)).epsilon(1e-13));
}

TEST_CASE("lawson2b stages collapse when g = 0") {
  const KroneckerSum<double> k({random_stable(4), random_stable(3)});
  const Tensor<double> u = random_tensor({4, 3});
  const double tau = 0.15;
  const auto exps = build_split_phi(k, tau, 0).factors;
  const Tensor<double> a = lawson_euler_step(u, 0.0, tau, zero_g(), exps);
  const Tensor<double> b = lawson2b_step(u, 0.0, tau, zero_g(), exps);
  CHECK(diff_norm_inf(a, b) == 0.0);
}

TEST_CASE("lawson2b with K = 0 is the explicit trapezoidal rule") {
  const KroneckerSum<double> k({Matrix<double>(2, 2)});
  const Tensor<double> u = random_tensor({2});
  const double tau = 0.3;
  const auto exps = build_split_phi(k, tau, 0).factors;
  const Tensor<double> got = lawson2b_step(u, 0.0, tau, square_g(), exps);
  for (int i = 0; i < 2; ++i) {
    const double g0 = u[i] * u[i];
    const double stage = u[i] + tau * g0;
    const double want = u[i] + 0.5 * tau * (g0 + stage * stage);
    CHECK(got[i] == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("lawson2b local error is third order on the scalar problem") {
  std::vector<double> taus, errs;
  const double u0 = 0.4;
  Matrix<double> lam(1, 1);
  lam(0, 0) = -1.0;
  const KroneckerSum<double> k({lam});
  for (int e = 4; e <= 9; ++e) {
    const double tau = std::ldexp(1.0, -e);
    const auto exps = build_split_phi(k, tau, 0).factors;
    const Tensor<double> got =
        lawson2b_step(Tensor<double>({1}, {u0}), 0.0, tau, square_g(), exps);
    taus.push_back(tau);
    errs.push_back(std::abs(got[0] - exact_flow(u0, tau)));
  }
  CHECK(fit_order(taus, errs) == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("exponential euler scalar identities") {
  Matrix<double> lam(1, 1);
  lam(0, 0) = -1.0;
  const KroneckerSum<double> k({lam});
  const double tau = 0.1;
  const SplitPhi<double> phi1 = build_split_phi(k, tau, 1);
  {
    const Tensor<double> got =
        exp_euler_step(Tensor<double>({1}, {1.0}), 0.0, tau, k, zero_g(), phi1);
    CHECK(got[0] == doctest::Approx(std::exp(-tau)).epsilon(1e-13));
  }
  {
    // K = 0, constant g: phi_1(0) = 1 so the step is u + tau*c.
    const KroneckerSum<double> kz({Matrix<double>(1, 1)});
    const SplitPhi<double> p1 = build_split_phi(kz, tau, 1);
    GFun cg = [](double, const Tensor<double>& u) {
      Tensor<double> g(u.dims());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = 0.7;
      return g;
    };
    const Tensor<double> got =
        exp_euler_step(Tensor<double>({1}, {2.0}), 0.0, tau, kz, cg, p1);
    CHECK(got[0] == doctest::Approx(2.0 + tau * 0.7).epsilon(1e-14));
  }
}

TEST_CASE("exp euler split vs dense: per-step difference is third order") {
  ProblemSpec p = small_problem();
  std::vector<double> taus, diffs;
  for (int e = 3; e <= 8; ++e) {
    const double tau = std::ldexp(1.0, -e);
    p.t_final = tau;
    StepperConfig cs;
    cs.method = Method::ExpEuler;
    cs.n_steps = 1;
    const auto split = integrate(p, cs);
    cs.backend = Backend::DenseOracle;
    const auto dense = integrate(p, cs);
    taus.push_back(tau);
    diffs.push_back(diff_norm_fro(split.final, dense.final));
  }
  CHECK(fit_order(taus, diffs) == doctest::Approx(3.0).epsilon(0.1));
}

TEST_CASE("exp euler global order one on the scalar problem") {
  ProblemSpec p = scalar_problem(0.4);
  std::vector<double> taus, errs;
  for (long n : {16L, 32L, 64L, 128L}) {
    StepperConfig c;
    c.method = Method::ExpEuler;
    c.n_steps = n;
    const auto res = integrate(p, c);
    taus.push_back(1.0 / double(n));
    errs.push_back(std::abs(res.final[0] - exact_flow(0.4, 1.0)));
  }
  CHECK(fit_order(taus, errs) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("linear-split exponential euler") {
  Matrix<double> lam(1, 1);
  lam(0, 0) = -2.0;
  const KroneckerSum<double> k({lam});
  const double tau = 0.25;
  const auto exps = build_split_phi(k, tau, 0).factors;
  const SplitPhi<double> phi1 = build_split_phi(k, tau, 1);
  {
    // g = 0: exact linear propagation, no splitting error at all.
    const Tensor<double> got = exp_euler_linear_split_step(
        Tensor<double>({1}, {3.0}), 0.0, tau, zero_g(), exps, phi1);
    CHECK(got[0] == doctest::Approx(3.0 * std::exp(-2.0 * tau)).epsilon(1e-13));
  }
  {
    // d = 1, constant g: variation of constants is exact over one step.
    GFun cg = [](double, const Tensor<double>& u) {
      Tensor<double> g(u.dims());
      for (std::size_t i = 0; i < g.size(); ++i) g[i] = 1.3;
      return g;
    };
    const Tensor<double> got = exp_euler_linear_split_step(
        Tensor<double>({1}, {3.0}), 0.0, tau, cg, exps, phi1);
    const double lamv = -2.0;
    const double want = std::exp(lamv * tau) * 3.0 +
                        tau * (std::exp(lamv * tau) - 1.0) / (lamv * tau) * 1.3;
    CHECK(got[0] == doctest::Approx(want).epsilon(1e-13));
  }
}

TEST_CASE("the two exponential Euler variants differ at second order per step") {
  ProblemSpec p = small_problem();
  std::vector<double> taus, diffs;
  for (int e = 3; e <= 8; ++e) {
    const double tau = std::ldexp(1.0, -e);
    const auto exps = build_split_phi(p.K, tau, 0).factors;
    const SplitPhi<double> phi1 = build_split_phi(p.K, tau, 1);
    const Tensor<double> a = exp_euler_step(p.u0, 0.0, tau, p.K, p.g, phi1);
    const Tensor<double> b =
        exp_euler_linear_split_step(p.u0, 0.0, tau, p.g, exps, phi1);
    taus.push_back(tau);
    diffs.push_back(diff_norm_fro(a, b));
  }
  const double slope = fit_order(taus, diffs);
  CHECK(slope >= 1.9);
}

TEST_CASE("etd2rk with constant g reduces to exponential Euler") {
  ProblemSpec p = small_problem();
  p.g = [](double, const Tensor<double>& u) {
    Tensor<double> g(u.dims());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = 0.42;
    return g;
  };
  const double tau = 0.2;
  const SplitPhi<double> phi1 = build_split_phi(p.K, tau, 1);
  const SplitPhi<double> phi2 = build_split_phi(p.K, tau, 2);
  const Tensor<double> a = exp_euler_step(p.u0, 0.0, tau, p.K, p.g, phi1);
  const Tensor<double> b = etd2rk_step(p.u0, 0.0, tau, p.K, p.g, phi1, phi2);
  CHECK(diff_norm_inf(a, b) < 1e-15);
}

TEST_CASE("etd2rk with K = 0 is the explicit trapezoidal rule") {
  const KroneckerSum<double> kz({Matrix<double>(2, 2)});
  const Tensor<double> u = random_tensor({2});
  const double tau = 0.21;
  const SplitPhi<double> phi1 = build_split_phi(kz, tau, 1);
  const SplitPhi<double> phi2 = build_split_phi(kz, tau, 2);
  const Tensor<double> got = etd2rk_step(u, 0.0, tau, kz, square_g(), phi1, phi2);
  for (int i = 0; i < 2; ++i) {
    const double g0 = u[i] * u[i];
    const double stage = u[i] + tau * g0;  // phi_1(0) = 1
    // phi_2(0) = 1/2: u2 + tau*(g(stage)-g0)/2 = trapezoidal combination
    const double want = stage + tau * 0.5 * (stage * stage - g0);
    CHECK(got[i] == doctest::Approx(want).epsilon(1e-14));
  }
}

TEST_CASE("etd2rk converges at order two on the scalar problem") {
  ProblemSpec p = scalar_problem(0.4);
  std::vector<double> taus, errs;
  for (long n : {16L, 32L, 64L, 128L}) {
    StepperConfig c;
    c.method = Method::ETD2RK;
    c.n_steps = n;
    const auto res = integrate(p, c);
    taus.push_back(1.0 / double(n));
    errs.push_back(std::abs(res.final[0] - exact_flow(0.4, 1.0)));
  }
  CHECK(fit_order(taus, errs) == doctest::Approx(2.0).epsilon(0.025));
}

TEST_CASE("rosenbrock-euler with the exact linear Jacobian is exponential Euler") {
  // g linear in u: g = 0.3*u, so J_mu can absorb it into the first factor.
  ProblemSpec p;
  p.K = KroneckerSum<double>({random_stable(4), random_stable(3)});
  p.g = [](double, const Tensor<double>& u) {
    Tensor<double> g(u.dims());
    for (std::size_t i = 0; i < g.size(); ++i) g[i] = 0.0;
    return g;
  };
  p.u0 = random_tensor({4, 3});
  const double tau = 0.2;
  const SplitPhi<double> phi1 = build_split_phi(p.K, tau, 1);
  const Tensor<double> a = exp_euler_step(p.u0, 0.0, tau, p.K, p.g, phi1);
  const Tensor<double> b = rosenbrock_euler_step(
      p.u0, 0.0, tau, p.K, p.g, p.K.factors, gll_rule(kDefaultQuadNodes));
  CHECK(rel_fro(b, a) < 1e-14);
}

TEST_CASE("rosenbrock-euler scalar step matches the exact flow to third order") {
  Matrix<double> lam(1, 1);
  lam(0, 0) = -1.0;
  const KroneckerSum<double> k({lam});
  const double u0 = 0.05;
  std::vector<double> taus, errs;
  for (int e = 4; e <= 9; ++e) {
    const double tau = std::ldexp(1.0, -e);
    // Jacobian of -u + u^2 at u0 is -1 + 2 u0; the K part carries -1.
    Matrix<double> j(1, 1);
    j(0, 0) = -1.0 + 2.0 * u0;
    const Tensor<double> got =
        rosenbrock_euler_step(Tensor<double>({1}, {u0}), 0.0, tau, k,
                              square_g(), {j}, gll_rule(kDefaultQuadNodes));
    taus.push_back(tau);
    errs.push_back(std::abs(got[0] - exact_flow(u0, tau)));
  }
  CHECK(fit_order(taus, errs) == doctest::Approx(3.0).epsilon(0.05));
}

TEST_CASE("integrate with one step equals the single-step operation") {
  ProblemSpec p = small_problem();
  const double tau = 0.4;
  p.t_final = tau;
  const auto exps = build_split_phi(p.K, tau, 0).factors;
  const SplitPhi<double> phi1 = build_split_phi(p.K, tau, 1);
  const SplitPhi<double> phi2 = build_split_phi(p.K, tau, 2);
  StepperConfig c;
  c.n_steps = 1;
  c.method = Method::LawsonEuler;
  CHECK(diff_norm_inf(integrate(p, c).final,
                      lawson_euler_step(p.u0, 0.0, tau, p.g, exps)) == 0.0);
  c.method = Method::Lawson2b;
  CHECK(diff_norm_inf(integrate(p, c).final,
                      lawson2b_step(p.u0, 0.0, tau, p.g, exps)) == 0.0);
  c.method = Method::ExpEuler;
  CHECK(diff_norm_inf(integrate(p, c).final,
                      exp_euler_step(p.u0, 0.0, tau, p.K, p.g, phi1)) == 0.0);
  c.method = Method::ETD2RK;
  CHECK(diff_norm_inf(integrate(p, c).final,
                      etd2rk_step(p.u0, 0.0, tau, p.K, p.g, phi1, phi2)) == 0.0);
}

TEST_CASE("backend equivalence: Lawson methods agree to roundoff") {
  ProblemSpec p = small_problem();
  for (Method m : {Method::LawsonEuler, Method::Lawson2b}) {
    StepperConfig c;
    c.method = m;
    c.n_steps = 20;
    const auto split = integrate(p, c);
    c.backend = Backend::DenseOracle;
    const auto dense = integrate(p, c);
    CHECK(rel_fro(split.final, dense.final) < 1e-12);
  }
}

TEST_CASE("backend equivalence: phi methods converge together at order >= 2") {
  ProblemSpec p = small_problem();
  for (Method m : {Method::ExpEuler, Method::ETD2RK}) {
    std::vector<double> taus, diffs;
    for (long n : {8L, 16L, 32L, 64L}) {
      StepperConfig c;
      c.method = m;
      c.n_steps = n;
      const auto split = integrate(p, c);
      c.backend = Backend::DenseOracle;
      const auto dense = integrate(p, c);
      taus.push_back(1.0 / double(n));
      diffs.push_back(rel_fro(split.final, dense.final));
    }
    CHECK(fit_order(taus, diffs) >= 1.9);
  }
}

TEST_CASE("divergence is reported with the step index") {
  ProblemSpec p;
  p.K = KroneckerSum<double>({Matrix<double>(2, 2)});
  p.g = square_g();
  p.u0 = Tensor<double>({2}, {1e100, 1e100});
  p.t_final = 10.0;
  StepperConfig c;
  c.method = Method::LawsonEuler;
  c.n_steps = 10;
  bool caught = false;
  try {
    integrate(p, c);
  } catch (const DivergenceError& e) {
    caught = true;
    CHECK(e.step() >= 1);
    CHECK(std::string(e.what()).find("step") != std::string::npos);
  }
  CHECK(caught);
}

TEST_CASE("rosenbrock without a jacobian callback is a configuration error") {
  ProblemSpec p = small_problem();
  StepperConfig c;
  c.method = Method::RosenbrockEuler;
  c.n_steps = 4;
  CHECK_THROWS_AS(integrate(p, c), std::invalid_argument);
}

TEST_CASE("trajectory sampling") {
  ProblemSpec p = small_problem();
  StepperConfig c;
  c.method = Method::LawsonEuler;
  c.n_steps = 20;
  c.sample_every = 5;
  const auto res = integrate(p, c);
  REQUIRE(res.trajectory.size() == 5);  // steps 0, 5, 10, 15, 20
  CHECK(res.trajectory.front().first == 0.0);
  CHECK(res.trajectory.back().first == doctest::Approx(1.0));
  CHECK(diff_norm_inf(res.trajectory.back().second, res.final) == 0.0);
  CHECK(res.wallclock_s >= res.loop_s);
}

TEST_CASE("method name round trip") {
  for (Method m : {Method::LawsonEuler, Method::Lawson2b, Method::ExpEuler,
                   Method::ExpEulerLinearSplit, Method::ETD2RK,
                   Method::RosenbrockEuler})
    CHECK(parse_method(method_name(m)) == m);
  CHECK_THROWS_AS(parse_method("rk4"), std::invalid_argument);
}
