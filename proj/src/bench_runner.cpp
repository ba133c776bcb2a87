#include "kronphi/bench_runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>
#include <sstream>

#include "kronphi/oracle.hpp"
#include "kronphi/split_phi.hpp"

namespace kronphi {

std::vector<std::optional<double>> observed_order(
    const std::vector<double>& errors, const std::vector<double>& taus) {
  if (errors.size() != taus.size() || errors.size() < 2)
    throw std::invalid_argument("observed_order: need two matched sweeps");
  std::vector<std::optional<double>> out(errors.size() - 1);
  for (std::size_t k = 1; k < errors.size(); ++k) {
    if (errors[k - 1] <= 0.0 || errors[k] <= 0.0 || taus[k - 1] <= 0.0 ||
        taus[k] <= 0.0) {
      out[k - 1] = std::nullopt;
      continue;
    }
    out[k - 1] =
        std::log(errors[k - 1] / errors[k]) / std::log(taus[k - 1] / taus[k]);
  }
  return out;
}

double fit_order(const std::vector<double>& taus,
                 const std::vector<double>& errors) {
  if (taus.size() != errors.size() || taus.size() < 2)
    throw std::invalid_argument("fit_order: need two matched sweeps");
  const std::size_t n = taus.size();
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::log(taus[i]);
    const double y = std::log(errors[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

namespace {

std::string full_digits(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_csv(const std::string& path, const std::vector<RunRecord>& records) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("write_csv: cannot open " + path);
  f << "problem,method,steps,tau,error,order,wallclock_s\n";
  for (const auto& r : records) {
    f << r.problem << ',' << r.method << ',' << r.n_steps << ','
      << full_digits(r.tau) << ',' << full_digits(r.error) << ',';
    if (r.observed_order) f << full_digits(*r.observed_order);
    f << ',' << full_digits(r.wallclock_s) << '\n';
  }
}

void print_table(std::ostream& os, const std::vector<RunRecord>& records) {
  // One block per method: steps / error / order / wall-clock / loop rows,
  // mirroring the steps-and-order layout of the experiment tables.
  std::size_t i = 0;
  while (i < records.size()) {
    std::size_t j = i;
    while (j < records.size() && records[j].method == records[i].method &&
           records[j].problem == records[i].problem)
      ++j;
    os << records[i].problem << " / " << records[i].method << '\n';
    auto row = [&](const char* name, auto field) {
      os << "  " << std::left << std::setw(12) << name << std::right;
      for (std::size_t k = i; k < j; ++k) os << std::setw(12) << field(records[k]);
      os << '\n';
    };
    row("steps", [](const RunRecord& r) {
      return std::to_string(r.n_steps);
    });
    row("error", [](const RunRecord& r) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.3e", r.error);
      return std::string(buf);
    });
    row("order", [](const RunRecord& r) {
      if (!r.observed_order) return std::string("--");
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", *r.observed_order);
      return std::string(buf);
    });
    row("wallclock_s", [](const RunRecord& r) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", r.wallclock_s);
      return std::string(buf);
    });
    row("loop_s", [](const RunRecord& r) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.2f", r.loop_s);
      return std::string(buf);
    });
    i = j;
  }
}

std::vector<long> default_adr_steps(Method m, int n1) {
  switch (m) {
    case Method::LawsonEuler:
      return {800, 8800, 16800, 24800, 32800};
    case Method::ExpEuler:
    case Method::ExpEulerLinearSplit:
      return {50, 450, 850, 1250, 1650};
    case Method::Lawson2b:
      if (n1 < 60) return {1500, 5500, 9500, 13500, 17500};
      return {3000, 4500, 6000, 7500, 9000};
    case Method::ETD2RK:
      return {40, 140, 240, 340, 440};
    default:
      throw std::invalid_argument("no default ADR sweep for this method");
  }
}

std::vector<long> default_riccati_steps(Method) { return {30, 65, 100, 135, 170}; }

namespace {

std::vector<RunRecord> sweep(const ProblemSpec& spec, const std::string& problem,
                             Method m, const std::vector<long>& steps,
                             Backend backend,
                             const std::function<double(const Tensor<double>&)>& error_of,
                             std::ostream& log) {
  std::vector<RunRecord> recs;
  std::vector<double> errors, taus;
  for (long n : steps) {
    StepperConfig cfg;
    cfg.method = m;
    cfg.n_steps = n;
    cfg.backend = backend;
    IntegrateResult res;
    try {
      res = integrate(spec, cfg);
    } catch (const DivergenceError& e) {
      throw std::runtime_error(problem + "/" + method_name(m) + " with " +
                               std::to_string(n) + " steps diverged: " + e.what());
    }
    RunRecord r;
    r.problem = problem;
    r.method = method_name(m);
    r.n_steps = n;
    r.tau = (spec.t_final - spec.t0) / double(n);
    r.error = error_of(res.final);
    r.wallclock_s = res.wallclock_s;
    r.loop_s = res.loop_s;
    errors.push_back(r.error);
    taus.push_back(r.tau);
    recs.push_back(std::move(r));
    log << "  " << problem << "/" << method_name(m) << " steps=" << n
        << " error=" << recs.back().error << " wallclock=" << res.wallclock_s
        << "s\n";
  }
  if (recs.size() >= 2) {
    auto orders = observed_order(errors, taus);
    for (std::size_t k = 0; k < orders.size(); ++k)
      recs[k + 1].observed_order = orders[k];
  }
  return recs;
}

}  // namespace

std::vector<RunRecord> run_adr(const AdrOptions& opt, std::ostream& log) {
  ADRProblem prob = build_adr(opt.n1, opt.n2, opt.n3);
  ProblemSpec spec = prob.to_problem_spec();
  const Tensor<double> u_exact = prob.exact(spec.t_final);
  const double denom = u_exact.norm_inf();
  const std::string id = "adr" + std::to_string(opt.n1);
  auto error_of = [&](const Tensor<double>& u) {
    return diff_norm_inf(u, u_exact) / denom;
  };
  std::vector<Method> methods = opt.methods;
  if (methods.empty())
    methods = {Method::LawsonEuler, Method::ExpEuler, Method::Lawson2b,
               Method::ETD2RK};
  std::vector<RunRecord> all;
  for (Method m : methods) {
    const auto steps = opt.steps.empty() ? default_adr_steps(m, opt.n1) : opt.steps;
    auto recs = sweep(spec, id, m, steps, opt.backend, error_of, log);
    all.insert(all.end(), recs.begin(), recs.end());
  }
  print_table(log, all);
  if (!opt.out_csv.empty()) write_csv(opt.out_csv, all);
  return all;
}

std::vector<RunRecord> run_riccati(const RiccatiOptions& opt, std::ostream& log) {
  RiccatiProblem prob = build_riccati(opt.n_hat);
  ProblemSpec spec = prob.to_problem_spec();
  log << "riccati n_hat=" << opt.n_hat << ": computing etd2rk reference with "
      << opt.ref_steps << " steps\n";
  StepperConfig ref_cfg;
  ref_cfg.method = Method::ETD2RK;
  ref_cfg.n_steps = opt.ref_steps;
  const Tensor<double> ref = integrate(spec, ref_cfg).final;
  const double denom = ref.norm_fro();
  const std::string id = "riccati" + std::to_string(opt.n_hat);
  auto error_of = [&](const Tensor<double>& u) {
    return diff_norm_fro(u, ref) / denom;
  };
  std::vector<Method> methods = opt.methods;
  if (methods.empty()) methods = {Method::RosenbrockEuler, Method::ETD2RK};
  std::vector<RunRecord> all;
  for (Method m : methods) {
    const auto steps = opt.steps.empty() ? default_riccati_steps(m) : opt.steps;
    auto recs = sweep(spec, id, m, steps, opt.backend, error_of, log);
    all.insert(all.end(), recs.begin(), recs.end());
  }
  print_table(log, all);
  if (!opt.out_csv.empty()) write_csv(opt.out_csv, all);
  return all;
}

std::vector<SteadyRecord> run_steady(const SteadyOptions& opt, std::ostream& log) {
  RiccatiProblem prob = build_riccati(opt.n_hat);
  ProblemSpec spec = prob.to_problem_spec(opt.t_final);
  const double cnorm = prob.c_mat.norm_fro();
  std::vector<Method> methods = opt.methods;
  if (methods.empty()) methods = {Method::RosenbrockEuler, Method::ETD2RK};
  std::vector<SteadyRecord> recs;
  for (Method m : methods) {
    StepperConfig cfg;
    cfg.method = m;
    cfg.n_steps = opt.n_steps;
    cfg.sample_every = opt.sample_every;
    const IntegrateResult res = integrate(spec, cfg);
    const double tau = (spec.t_final - spec.t0) / double(opt.n_steps);
    for (const auto& [t, u] : res.trajectory) {
      SteadyRecord r;
      r.method = method_name(m);
      r.step = std::lround((t - spec.t0) / tau);
      r.t = t;
      r.rel_residual = are_residual(matrix_from_tensor(u), prob) / cnorm;
      recs.push_back(std::move(r));
    }
    log << "  steady/" << method_name(m) << ": final relative residual "
        << recs.back().rel_residual << " at t=" << recs.back().t << '\n';
  }
  if (!opt.out_csv.empty()) {
    std::ofstream f(opt.out_csv);
    if (!f) throw std::runtime_error("run_steady: cannot open " + opt.out_csv);
    f << "problem,method,step,t,rel_residual\n";
    for (const auto& r : recs)
      f << "riccati" << opt.n_hat << ',' << r.method << ',' << r.step << ','
        << full_digits(r.t) << ',' << full_digits(r.rel_residual) << '\n';
  }
  return recs;
}

// ---- self test ----

namespace {

using Rng = std::mt19937_64;

Matrix<double> random_matrix(Rng& rng, int rows, int cols, double scale = 1.0) {
  std::uniform_real_distribution<double> dist(-scale, scale);
  Matrix<double> m(rows, cols);
  for (int j = 0; j < cols; ++j)
    for (int i = 0; i < rows; ++i) m(i, j) = dist(rng);
  return m;
}

// Random matrix shifted so every eigenvalue has nonpositive real part.
Matrix<double> random_stable(Rng& rng, int n, double scale = 1.0) {
  Matrix<double> m = random_matrix(rng, n, n, scale);
  const double shift = m.norm1();
  for (int i = 0; i < n; ++i) m(i, i) -= shift;
  return m;
}

std::vector<double> random_vector(Rng& rng, std::size_t n) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = dist(rng);
  return v;
}

double rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

// Dense Kronecker-product matrix kron(ms[d-1], ..., ms[0]).
Matrix<double> dense_kron(const std::vector<Matrix<double>>& ms) {
  Matrix<double> k(1, 1);
  k(0, 0) = 1.0;
  for (const auto& m : ms) {  // left operand varies fastest
    Matrix<double> next(m.rows() * k.rows(), m.cols() * k.cols());
    for (int jm = 0; jm < m.cols(); ++jm)
      for (int im = 0; im < m.rows(); ++im)
        for (int jk = 0; jk < k.cols(); ++jk)
          for (int ik = 0; ik < k.rows(); ++ik)
            next(ik + im * k.rows(), jk + jm * k.cols()) = k(ik, jk) * m(im, jm);
    k = std::move(next);
  }
  return k;
}

struct CheckReporter {
  std::ostream& out;
  bool all_ok = true;
  void operator()(const std::string& name, bool ok, double measured,
                  const std::string& bound) {
    out << (ok ? "[PASS] " : "[FAIL] ") << name << " (measured " << measured
        << ", requires " << bound << ")\n";
    all_ok = all_ok && ok;
  }
};

}  // namespace

bool selftest(const SelftestOptions& opt, std::ostream& out) {
  CheckReporter check{out};
  Rng rng(20230517);
  const GLLRule rule = gll_rule(opt.quad_nodes);

  {  // quadrature rule sanity
    double worst_sum = 0.0, worst_mono = 0.0;
    for (int q = 2; q <= 16; ++q) {
      const GLLRule r = gll_rule(q);
      double s = 0.0;
      for (double w : r.weights) s += w;
      worst_sum = std::max(worst_sum, std::abs(s - 1.0));
      for (int deg = 0; deg <= 2 * q - 3; ++deg) {
        double quad = 0.0;
        for (int i = 0; i < q; ++i)
          quad += r.weights[i] * std::pow(r.nodes[i], double(deg));
        worst_mono = std::max(worst_mono, std::abs(quad - 1.0 / (deg + 1)) * (deg + 1));
      }
    }
    check("gll weights sum to one (q=2..16)", worst_sum < 1e-14, worst_sum, "< 1e-14");
    check("gll exact on monomials up to degree 2q-3", worst_mono < 1e-13,
          worst_mono, "< 1e-13");
  }

  {  // expm against the Taylor oracle
    double worst = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
      Matrix<double> x = random_matrix(rng, 8, 8, 1.0);
      x *= 5.0 / x.norm1();
      const Matrix<double> e = expm(x);
      const auto v = random_vector(rng, 8);
      std::vector<double> ev(8);
      matvec(e, v.data(), ev.data());
      worst = std::max(worst, rel_diff(ev, phi_taylor_action(x, 0, v)));
    }
    check("expm matches Taylor oracle (8x8, norm 5)", worst < 1e-12, worst,
          "< 1e-12");
  }

  {  // phiquad against the Taylor oracle, plus the recurrence invariant
    double worst = 0.0, worst_rec = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
      const int n = 4 + int(rng() % 17);
      Matrix<double> x = random_matrix(rng, n, n, 1.0);
      x *= (2.0 + double(rng() % 29)) / x.norm1();
      const int ell = 1 + int(rng() % 3);
      const PhiTable<double> tab = phiquad(x, ell, rule);
      const auto v = random_vector(rng, n);
      for (int j = 0; j <= ell; ++j) {
        std::vector<double> got(n);
        matvec(tab.phis[j], v.data(), got.data());
        worst = std::max(worst, rel_diff(got, phi_taylor_action(x, j, v)));
      }
      for (int k = 0; k < ell; ++k) {
        Matrix<double> lhs = multiply(x, tab.phis[k + 1]);
        for (int i = 0; i < n; ++i) lhs(i, i) += 1.0 / factorial(k);
        lhs -= tab.phis[k];
        worst_rec = std::max(worst_rec, lhs.norm1() / tab.phis[k].norm1());
      }
    }
    check("phiquad matches Taylor oracle (l <= 3, norm <= 30)", worst < 1e-11,
          worst, "< 1e-11");
    check("phi recurrence phi_k = X phi_{k+1} + I/k!", worst_rec < 1e-11,
          worst_rec, "< 1e-11");
  }

  {  // tensor kernels against dense assembly
    double worst_tucker = 0.0, worst_kron = 0.0, worst_gemm = 0.0;
    for (int rep = 0; rep < 30; ++rep) {
      const int d = 1 + int(rng() % 3);
      std::vector<int> dims(d);
      for (int& x : dims) x = 2 + int(rng() % 5);
      Tensor<double> t(dims);
      for (std::size_t i = 0; i < t.size(); ++i)
        t[i] = std::uniform_real_distribution<double>(-1, 1)(rng);
      std::vector<Matrix<double>> ms, sq;
      for (int mu = 0; mu < d; ++mu) {
        ms.push_back(random_matrix(rng, 2 + int(rng() % 5), dims[mu]));
        sq.push_back(random_matrix(rng, dims[mu], dims[mu]));
      }
      {
        const Tensor<double> got = tucker(t, ms);
        const Matrix<double> kr = dense_kron(ms);
        std::vector<double> want(kr.rows());
        matvec(kr, t.data(), want.data());
        worst_tucker = std::max(worst_tucker, rel_diff(vec(got), want));
      }
      {
        const KroneckerSum<double> ks(sq);
        const Tensor<double> got = kronsum_action(t, ks);
        const auto want = apply_dense(assemble_kronsum(ks), vec(t));
        worst_kron = std::max(worst_kron, rel_diff(vec(got), want));
      }
    }
    for (int rep = 0; rep < 5; ++rep) {
      const int m = 3 + int(rng() % 90), n = 3 + int(rng() % 90),
                k = 3 + int(rng() % 90);
      const Matrix<double> a = random_matrix(rng, m, k);
      const Matrix<double> b = random_matrix(rng, k, n);
      Matrix<double> c1(m, n), c2(m, n);
      gemm(m, n, k, 1.0, a.data(), m, b.data(), k, Op::none, 0.0, c1.data(), m);
      gemm_naive(m, n, k, 1.0, a.data(), m, b.data(), k, Op::none, 0.0,
                 c2.data(), m);
      c1 -= c2;
      worst_gemm = std::max(worst_gemm, c1.norm1() / c2.norm1());
    }
    check("tucker matches dense Kronecker product", worst_tucker < 1e-13,
          worst_tucker, "< 1e-13");
    check("kronsum action matches dense assembly", worst_kron < 1e-13,
          worst_kron, "< 1e-13");
    check("blocked gemm matches naive reference", worst_gemm < 1e-13,
          worst_gemm, "< 1e-13");
  }

  {  // LU
    double worst = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
      const int n = 20 + int(rng() % 180);
      const Matrix<double> a = random_matrix(rng, n, n);
      const Matrix<double> x = random_matrix(rng, n, 4);
      const Matrix<double> bm = multiply(a, x);
      Matrix<double> got = solve(a, bm);
      got -= x;
      worst = std::max(worst, got.norm1() / x.norm1());
    }
    check("lu solve recovers random solutions", worst < 1e-10, worst, "< 1e-10");
  }

  {  // direction splitting: exact at l = 0, second order for l > 0
    double worst0 = 0.0;
    for (int rep = 0; rep < 5; ++rep) {
      std::vector<Matrix<double>> fs = {random_stable(rng, 4),
                                        random_stable(rng, 5)};
      const KroneckerSum<double> ks(fs);
      Tensor<double> v({4, 5});
      for (std::size_t i = 0; i < v.size(); ++i)
        v[i] = std::uniform_real_distribution<double>(-1, 1)(rng);
      const double tau = 0.5;
      const SplitPhi<double> sp = build_split_phi(ks, tau, 0, rule);
      const Tensor<double> got = apply_split_phi(sp, v);
      Matrix<double> kd = assemble_kronsum(ks).data;
      kd *= tau;
      const auto want = phi_taylor_action(kd, 0, vec(v));
      worst0 = std::max(worst0, rel_diff(vec(got), want));
    }
    check("splitting exact at l = 0", worst0 < 1e-12, worst0, "< 1e-12");

    for (int ell : {1, 2}) {
      for (int d : {2, 3}) {
        std::vector<Matrix<double>> fs;
        std::vector<int> dims;
        for (int mu = 0; mu < d; ++mu) {
          const int n = 3 + mu;
          fs.push_back(random_stable(rng, n));
          dims.push_back(n);
        }
        const KroneckerSum<double> ks(fs);
        Tensor<double> v(dims);
        for (std::size_t i = 0; i < v.size(); ++i)
          v[i] = std::uniform_real_distribution<double>(-1, 1)(rng);
        const Matrix<double> kd = assemble_kronsum(ks).data;
        std::vector<double> taus, errs;
        for (int e = 3; e <= 9; ++e) {
          const double tau = std::ldexp(1.0, -e);
          SplitPhi<double> sp = build_split_phi(ks, tau, ell, rule);
          if (opt.inject_wrong_prefactor)
            sp.prefactor = std::pow(factorial(ell), double(d));
          const Tensor<double> got = apply_split_phi(sp, v);
          Matrix<double> tk = kd;
          tk *= tau;
          const auto want = phi_taylor_action(tk, ell, vec(v));
          taus.push_back(tau);
          errs.push_back(rel_diff(vec(got), want));
        }
        const double slope = fit_order(taus, errs);
        std::ostringstream name;
        name << "splitting error order (l=" << ell << ", d=" << d << ")";
        check(name.str(), std::abs(slope - 2.0) <= 0.1, slope, "2.0 +/- 0.1");
      }
    }
  }

  out << (check.all_ok ? "selftest: all checks passed\n"
                       : "selftest: FAILURES detected\n");
  return check.all_ok;
}

}  // namespace kronphi
