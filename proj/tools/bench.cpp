// Benchmark CLI: convergence tables for the ADR and Riccati problems,
// steady-state tracking, and the invariant self-test.
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kronphi/bench_runner.hpp"

namespace {

std::vector<kronphi::Method> parse_methods(const std::vector<std::string>& names) {
  std::vector<kronphi::Method> out;
  for (const auto& n : names) out.push_back(kronphi::parse_method(n));
  return out;
}

kronphi::Backend parse_backend(const std::string& s) {
  if (s == "split") return kronphi::Backend::Split;
  if (s == "oracle") return kronphi::Backend::DenseOracle;
  throw CLI::ValidationError("--backend", "expected 'split' or 'oracle'");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"exponential integrator benchmarks on Kronecker-form problems"};
  app.require_subcommand(1);

  // adr
  auto* adr = app.add_subcommand("adr", "3D advection-diffusion-reaction sweep");
  std::vector<int> dims = {40, 41, 42};
  std::vector<std::string> adr_methods;
  std::vector<long> adr_steps;
  std::string adr_out, adr_backend = "split";
  adr->add_option("--dims", dims, "inner grid sizes N1,N2,N3")
      ->delimiter(',')
      ->expected(3);
  adr->add_option("--methods", adr_methods,
                  "methods (lawson_euler lawson2b exp_euler exp_euler_ls etd2rk)")
      ->delimiter(',');
  adr->add_option("--steps", adr_steps, "step counts (default: per-method sweep)")
      ->delimiter(',');
  adr->add_option("--out", adr_out, "CSV output file");
  adr->add_option("--backend", adr_backend, "split|oracle")
      ->check(CLI::IsMember({"split", "oracle"}));

  // riccati
  auto* ric = app.add_subcommand("riccati", "2D LQR Riccati sweep");
  int nhat = 30;
  std::vector<std::string> ric_methods;
  std::vector<long> ric_steps;
  long ref_steps = 4096;
  std::string ric_out, ric_backend = "split";
  ric->add_option("--nhat", nhat, "inner grid size per direction");
  ric->add_option("--methods", ric_methods, "methods (rosenbrock_euler etd2rk ...)")
      ->delimiter(',');
  ric->add_option("--steps", ric_steps, "step counts")->delimiter(',');
  ric->add_option("--ref-steps", ref_steps, "steps of the ETD2RK reference run");
  ric->add_option("--out", ric_out, "CSV output file");
  ric->add_option("--backend", ric_backend, "split|oracle")
      ->check(CLI::IsMember({"split", "oracle"}));

  // steady
  auto* steady = app.add_subcommand("steady", "Riccati steady-state residual");
  int st_nhat = 20, sample_every = 10;
  long st_steps = 200;
  std::string st_out;
  steady->add_option("--nhat", st_nhat, "inner grid size per direction");
  steady->add_option("--steps", st_steps, "number of time steps");
  steady->add_option("--sample-every", sample_every, "residual sampling stride");
  steady->add_option("--out", st_out, "CSV output file");

  // selftest
  auto* self = app.add_subcommand("selftest", "run the invariant battery");
  int quad_nodes = kronphi::kDefaultQuadNodes;
  std::string self_out;
  self->add_option("--quad-nodes", quad_nodes, "GLL node count for phi quadrature");
  self->add_option("--out", self_out, "also write the report to a file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*adr) {
      kronphi::AdrOptions opt;
      opt.n1 = dims[0];
      opt.n2 = dims[1];
      opt.n3 = dims[2];
      opt.methods = parse_methods(adr_methods);
      opt.steps = adr_steps;
      opt.backend = parse_backend(adr_backend);
      opt.out_csv = adr_out;
      kronphi::run_adr(opt, std::cout);
    } else if (*ric) {
      kronphi::RiccatiOptions opt;
      opt.n_hat = nhat;
      opt.methods = parse_methods(ric_methods);
      opt.steps = ric_steps;
      opt.ref_steps = ref_steps;
      opt.backend = parse_backend(ric_backend);
      opt.out_csv = ric_out;
      kronphi::run_riccati(opt, std::cout);
    } else if (*steady) {
      kronphi::SteadyOptions opt;
      opt.n_hat = st_nhat;
      opt.n_steps = st_steps;
      opt.sample_every = sample_every;
      opt.out_csv = st_out;
      kronphi::run_steady(opt, std::cout);
    } else if (*self) {
      kronphi::SelftestOptions opt;
      opt.quad_nodes = quad_nodes;
      bool ok;
      if (self_out.empty()) {
        ok = kronphi::selftest(opt, std::cout);
      } else {
        std::ostringstream report;
        ok = kronphi::selftest(opt, report);
        std::cout << report.str();
        std::ofstream f(self_out);
        f << report.str();
      }
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
