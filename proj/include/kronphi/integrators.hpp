// Constant-step exponential integrators in tensor formulation: Lawson-Euler,
// Lawson2b, exponential Euler (two variants), ETD2RK and exponential
// Rosenbrock-Euler. Each method runs either on the direction-splitting
// backend (production path) or on a dense-oracle backend that applies the
// textbook phi actions of the assembled operator (small problems only, used
// for validation).
#pragma once

#include <chrono>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "kronphi/matrix_functions.hpp"
#include "kronphi/mode_product.hpp"
#include "kronphi/oracle.hpp"
#include "kronphi/split_phi.hpp"
#include "kronphi/tensor.hpp"

namespace kronphi {

enum class Method {
  LawsonEuler,
  Lawson2b,
  ExpEuler,
  ExpEulerLinearSplit,
  ETD2RK,
  RosenbrockEuler
};

enum class Backend { Split, DenseOracle };

inline const char* method_name(Method m) {
  switch (m) {
    case Method::LawsonEuler: return "lawson_euler";
    case Method::Lawson2b: return "lawson2b";
    case Method::ExpEuler: return "exp_euler";
    case Method::ExpEulerLinearSplit: return "exp_euler_ls";
    case Method::ETD2RK: return "etd2rk";
    case Method::RosenbrockEuler: return "rosenbrock_euler";
  }
  return "?";
}

inline Method parse_method(const std::string& s) {
  if (s == "lawson_euler") return Method::LawsonEuler;
  if (s == "lawson2b") return Method::Lawson2b;
  if (s == "exp_euler") return Method::ExpEuler;
  if (s == "exp_euler_ls") return Method::ExpEulerLinearSplit;
  if (s == "etd2rk") return Method::ETD2RK;
  if (s == "rosenbrock_euler") return Method::RosenbrockEuler;
  throw std::invalid_argument("unknown method: " + s);
}

// An ODE system u' = K u + g(t, u) in Kronecker form.
struct ProblemSpec {
  KroneckerSum<double> K;
  std::function<Tensor<double>(double, const Tensor<double>&)> g;
  Tensor<double> u0;
  double t0 = 0.0;
  double t_final = 1.0;
  // Optional: analytical solution at time t.
  std::function<Tensor<double>(double)> exact;
  // Optional: per-direction Jacobian factors J_mu(U) with
  // K_n = J_d + ... + J_1 in Kronecker-sum sense (Rosenbrock only).
  std::function<std::vector<Matrix<double>>(const Tensor<double>&)> jacobian_factors;
};

struct StepperConfig {
  Method method = Method::ExpEuler;
  long n_steps = 1;
  Backend backend = Backend::Split;
  int sample_every = 0;  // 0 disables trajectory sampling
  int quad_nodes = kDefaultQuadNodes;
};

struct IntegrateResult {
  Tensor<double> final;
  std::vector<std::pair<double, Tensor<double>>> trajectory;
  double wallclock_s = 0.0;  // includes factor precomputation
  double loop_s = 0.0;       // time loop only
};

class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(long step, double t)
      : std::runtime_error("state became non-finite at step " +
                           std::to_string(step) + " (t = " + std::to_string(t) +
                           ")"),
        step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

namespace detail {

inline bool finite_parallel(const Tensor<double>& t) {
  const double* d = t.data();
  const std::ptrdiff_t n = std::ptrdiff_t(t.size());
  bool ok = true;
#pragma omp parallel for schedule(static) reduction(& : ok) if (n > (1 << 15))
  for (std::ptrdiff_t i = 0; i < n; ++i) ok &= bool(std::isfinite(d[i]));
  return ok;
}

}  // namespace detail

using GFun = std::function<Tensor<double>(double, const Tensor<double>&)>;

// ---- single-step operations, splitting backend ----

template <typename T>
Tensor<T> lawson_euler_step(const Tensor<T>& u, double t, double tau,
                            const GFun& g,
                            const std::vector<Matrix<T>>& exp_factors) {
  Tensor<T> w = add_scaled(u, T(tau), g(t, u));
  return tucker(w, exp_factors);
}

template <typename T>
Tensor<T> lawson2b_step(const Tensor<T>& u, double t, double tau, const GFun& g,
                        const std::vector<Matrix<T>>& exp_factors) {
  const Tensor<T> gn = g(t, u);
  const Tensor<T> stage = tucker(add_scaled(u, T(tau), gn), exp_factors);
  Tensor<T> out = tucker(add_scaled(u, T(0.5 * tau), gn), exp_factors);
  axpy(T(0.5 * tau), g(t + tau, stage), out);
  return out;
}

template <typename T>
Tensor<T> exp_euler_step(const Tensor<T>& u, double t, double tau,
                         const KroneckerSum<T>& k, const GFun& g,
                         const SplitPhi<T>& phi1) {
  Tensor<T> r = kronsum_action(u, k);
  axpy(T(1), g(t, u), r);
  return add_scaled(u, T(tau), apply_split_phi(phi1, r));
}

template <typename T>
Tensor<T> exp_euler_linear_split_step(const Tensor<T>& u, double t, double tau,
                                      const GFun& g,
                                      const std::vector<Matrix<T>>& exp_factors,
                                      const SplitPhi<T>& phi1) {
  Tensor<T> out = tucker(u, exp_factors);
  axpy(T(tau), apply_split_phi(phi1, g(t, u)), out);
  return out;
}

template <typename T>
Tensor<T> etd2rk_step(const Tensor<T>& u, double t, double tau,
                      const KroneckerSum<T>& k, const GFun& g,
                      const SplitPhi<T>& phi1, const SplitPhi<T>& phi2) {
  const Tensor<T> gn = g(t, u);
  Tensor<T> r = kronsum_action(u, k);
  axpy(T(1), gn, r);
  const Tensor<T> stage = add_scaled(u, T(tau), apply_split_phi(phi1, r));
  Tensor<T> d = g(t + tau, stage);
  axpy(T(-1), gn, d);
  return add_scaled(stage, T(tau), apply_split_phi(phi2, d));
}

// One Rosenbrock-Euler step with the phi_1 factors rebuilt from the current
// Jacobian factors. Identical factors (e.g. the symmetric Riccati case) are
// detected and share a single phi evaluation.
template <typename T>
Tensor<T> rosenbrock_euler_step(const Tensor<T>& u, double t, double tau,
                                const KroneckerSum<T>& k, const GFun& g,
                                const std::vector<Matrix<T>>& jac_factors,
                                const GLLRule& rule) {
  const int d = int(jac_factors.size());
  std::vector<Matrix<T>> phi(d);
  for (int mu = 0; mu < d; ++mu) {
    int same = -1;
    for (int nu = 0; nu < mu; ++nu)
      if (jac_factors[nu] == jac_factors[mu]) {
        same = nu;
        break;
      }
    if (same >= 0) {
      phi[mu] = phi[same];
      continue;
    }
    Matrix<T> scaled = jac_factors[mu];
    scaled *= T(tau);
    phi[mu] = std::move(phiquad(scaled, 1, rule).phis[1]);
  }
  Tensor<T> r = kronsum_action(u, k);
  axpy(T(1), g(t, u), r);
  return add_scaled(u, T(tau), tucker(r, phi));
}

// ---- dense-oracle backend helpers ----

namespace detail {

struct OracleTables {
  Matrix<double> k_dense;  // assembled K
  Matrix<double> e;        // e^{tau K}
  Matrix<double> phi1;
  Matrix<double> phi2;
};

inline Tensor<double> dense_apply(const Matrix<double>& m,
                                  const Tensor<double>& t) {
  Tensor<double> out = Tensor<double>::no_init(t.dims());
  matvec(m, t.data(), out.data());
  return out;
}

}  // namespace detail

// Advances n constant steps from t0 to t_final; all step-invariant matrix
// functions are built once up front (every method except Rosenbrock-Euler,
// which rebuilds its phi_1 factors from the Jacobian at each step).
inline IntegrateResult integrate(const ProblemSpec& p, const StepperConfig& c) {
  using clock = std::chrono::steady_clock;
  if (c.n_steps <= 0) throw std::invalid_argument("integrate: n_steps must be positive");
  if (!(p.t_final > p.t0)) throw std::invalid_argument("integrate: empty time interval");
  if (c.method == Method::RosenbrockEuler && !p.jacobian_factors)
    throw std::invalid_argument(
        "integrate: Rosenbrock-Euler requires jacobian_factors");

  const double tau = (p.t_final - p.t0) / double(c.n_steps);
  const GLLRule rule = gll_rule(c.quad_nodes);
  const auto t_start = clock::now();

  // Step-invariant factors.
  std::vector<Matrix<double>> exp_factors;
  SplitPhi<double> phi1, phi2;
  detail::OracleTables oracle;
  const bool dense = (c.backend == Backend::DenseOracle);
  if (dense) {
    oracle.k_dense = assemble_kronsum(p.K).data;
    Matrix<double> tk = oracle.k_dense;
    tk *= tau;
    switch (c.method) {
      case Method::LawsonEuler:
      case Method::Lawson2b:
        oracle.e = phi_taylor_table(tk, 0)[0];
        break;
      case Method::ExpEuler:
        oracle.phi1 = phi_taylor_table(tk, 1)[1];
        break;
      case Method::ExpEulerLinearSplit: {
        auto tab = phi_taylor_table(tk, 1);
        oracle.e = std::move(tab[0]);
        oracle.phi1 = std::move(tab[1]);
        break;
      }
      case Method::ETD2RK: {
        auto tab = phi_taylor_table(tk, 2);
        oracle.phi1 = std::move(tab[1]);
        oracle.phi2 = std::move(tab[2]);
        break;
      }
      case Method::RosenbrockEuler:
        break;  // per-step
    }
  } else {
    switch (c.method) {
      case Method::LawsonEuler:
      case Method::Lawson2b:
        exp_factors = build_split_phi(p.K, tau, 0, rule).factors;
        break;
      case Method::ExpEuler:
        phi1 = build_split_phi(p.K, tau, 1, rule);
        break;
      case Method::ExpEulerLinearSplit:
        exp_factors = build_split_phi(p.K, tau, 0, rule).factors;
        phi1 = build_split_phi(p.K, tau, 1, rule);
        break;
      case Method::ETD2RK:
        phi1 = build_split_phi(p.K, tau, 1, rule);
        phi2 = build_split_phi(p.K, tau, 2, rule);
        break;
      case Method::RosenbrockEuler:
        break;
    }
  }

  IntegrateResult res;
  Tensor<double> u = p.u0;
  if (c.sample_every > 0) res.trajectory.emplace_back(p.t0, u);

  const auto t_loop = clock::now();
  for (long n = 0; n < c.n_steps; ++n) {
    const double t = p.t0 + double(n) * tau;
    if (dense) {
      switch (c.method) {
        case Method::LawsonEuler:
          u = detail::dense_apply(oracle.e, add_scaled(u, tau, p.g(t, u)));
          break;
        case Method::Lawson2b: {
          const Tensor<double> gn = p.g(t, u);
          const Tensor<double> stage =
              detail::dense_apply(oracle.e, add_scaled(u, tau, gn));
          Tensor<double> out =
              detail::dense_apply(oracle.e, add_scaled(u, 0.5 * tau, gn));
          axpy(0.5 * tau, p.g(t + tau, stage), out);
          u = std::move(out);
          break;
        }
        case Method::ExpEuler: {
          Tensor<double> r = detail::dense_apply(oracle.k_dense, u);
          axpy(1.0, p.g(t, u), r);
          u = add_scaled(u, tau, detail::dense_apply(oracle.phi1, r));
          break;
        }
        case Method::ExpEulerLinearSplit: {
          Tensor<double> out = detail::dense_apply(oracle.e, u);
          axpy(tau, detail::dense_apply(oracle.phi1, p.g(t, u)), out);
          u = std::move(out);
          break;
        }
        case Method::ETD2RK: {
          const Tensor<double> gn = p.g(t, u);
          Tensor<double> r = detail::dense_apply(oracle.k_dense, u);
          axpy(1.0, gn, r);
          const Tensor<double> stage =
              add_scaled(u, tau, detail::dense_apply(oracle.phi1, r));
          Tensor<double> d = p.g(t + tau, stage);
          axpy(-1.0, gn, d);
          u = add_scaled(stage, tau, detail::dense_apply(oracle.phi2, d));
          break;
        }
        case Method::RosenbrockEuler: {
          const auto jacs = p.jacobian_factors(u);
          Matrix<double> kn = assemble_kronsum(KroneckerSum<double>(jacs)).data;
          kn *= tau;
          const Matrix<double> phin = phi_taylor_table(kn, 1)[1];
          Tensor<double> r = detail::dense_apply(oracle.k_dense, u);
          axpy(1.0, p.g(t, u), r);
          u = add_scaled(u, tau, detail::dense_apply(phin, r));
          break;
        }
      }
    } else {
      switch (c.method) {
        case Method::LawsonEuler:
          u = lawson_euler_step(u, t, tau, p.g, exp_factors);
          break;
        case Method::Lawson2b:
          u = lawson2b_step(u, t, tau, p.g, exp_factors);
          break;
        case Method::ExpEuler:
          u = exp_euler_step(u, t, tau, p.K, p.g, phi1);
          break;
        case Method::ExpEulerLinearSplit:
          u = exp_euler_linear_split_step(u, t, tau, p.g, exp_factors, phi1);
          break;
        case Method::ETD2RK:
          u = etd2rk_step(u, t, tau, p.K, p.g, phi1, phi2);
          break;
        case Method::RosenbrockEuler:
          u = rosenbrock_euler_step(u, t, tau, p.K, p.g, p.jacobian_factors(u),
                                    rule);
          break;
      }
    }
    if (!detail::finite_parallel(u)) throw DivergenceError(n + 1, t + tau);
    if (c.sample_every > 0 && (n + 1) % c.sample_every == 0)
      res.trajectory.emplace_back(p.t0 + double(n + 1) * tau, u);
  }
  const auto t_end = clock::now();
  res.final = std::move(u);
  res.loop_s = std::chrono::duration<double>(t_end - t_loop).count();
  res.wallclock_s = std::chrono::duration<double>(t_end - t_start).count();
  return res;
}

}  // namespace kronphi
