// Experiment harness behind the bench CLI: convergence sweeps on the two
// benchmark problems, the steady-state Riccati tracker, observed-order
// estimation, CSV emission and the self-test battery. Kept in the library so
// the acceptance tests drive the exact same code paths as the CLI.
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "kronphi/integrators.hpp"
#include "kronphi/problems.hpp"

namespace kronphi {

struct RunRecord {
  std::string problem;
  std::string method;
  long n_steps = 0;
  double tau = 0.0;
  double error = 0.0;  // relative, problem-specific norm
  std::optional<double> observed_order;  // absent for the first row of a sweep
  double wallclock_s = 0.0;  // includes factor precomputation
  double loop_s = 0.0;       // time loop only
};

// p_k = log(e_{k-1}/e_k) / log(tau_{k-1}/tau_k); entries are nullopt where
// an error is zero or negative.
std::vector<std::optional<double>> observed_order(
    const std::vector<double>& errors, const std::vector<double>& taus);

// Least-squares slope of log(err) against log(tau).
double fit_order(const std::vector<double>& taus,
                 const std::vector<double>& errors);

void write_csv(const std::string& path, const std::vector<RunRecord>& records);
void print_table(std::ostream& os, const std::vector<RunRecord>& records);

// Default step sweeps per method, mirroring the experiment setup.
std::vector<long> default_adr_steps(Method m, int n1);
std::vector<long> default_riccati_steps(Method m);

struct AdrOptions {
  int n1 = 40, n2 = 41, n3 = 42;
  std::vector<Method> methods;  // empty: Lawson-Euler, exp Euler, Lawson2b, ETD2RK
  std::vector<long> steps;      // empty: per-method defaults
  Backend backend = Backend::Split;
  std::string out_csv;
};

std::vector<RunRecord> run_adr(const AdrOptions& opt, std::ostream& log);

struct RiccatiOptions {
  int n_hat = 30;
  std::vector<Method> methods;  // empty: Rosenbrock-Euler, ETD2RK
  std::vector<long> steps;      // empty: {30, 65, 100, 135, 170}
  long ref_steps = 4096;        // ETD2RK splitting reference
  Backend backend = Backend::Split;
  std::string out_csv;
};

std::vector<RunRecord> run_riccati(const RiccatiOptions& opt, std::ostream& log);

struct SteadyOptions {
  int n_hat = 20;
  long n_steps = 200;
  int sample_every = 10;
  double t_final = 0.2;
  std::vector<Method> methods;  // empty: Rosenbrock-Euler, ETD2RK
  std::string out_csv;
};

struct SteadyRecord {
  std::string method;
  long step = 0;
  double t = 0.0;
  double rel_residual = 0.0;  // ARE residual over ||C||_F
};

std::vector<SteadyRecord> run_steady(const SteadyOptions& opt, std::ostream& log);

struct SelftestOptions {
  int quad_nodes = kDefaultQuadNodes;
  // Uses (l!)^d instead of (l!)^(d-1) in the splitting checks; exists to
  // demonstrate that the self-test catches a wrong prefactor.
  bool inject_wrong_prefactor = false;
};

// Runs the invariant battery, printing one pass/fail line per check.
// Returns true when everything passed.
bool selftest(const SelftestOptions& opt, std::ostream& out);

}  // namespace kronphi
