#include "kronphi/matrix_functions.hpp"

#include <cmath>
#include <stdexcept>

namespace kronphi {

namespace {

// Legendre P_n(x) and P'_n(x) by the three-term recurrence.
void legendre(int n, double x, double& p, double& dp) {
  double pm1 = 1.0, pm = x;
  if (n == 0) {
    p = 1.0;
    dp = 0.0;
    return;
  }
  for (int k = 1; k < n; ++k) {
    const double pk1 = ((2.0 * k + 1.0) * x * pm - k * pm1) / (k + 1.0);
    pm1 = pm;
    pm = pk1;
  }
  p = pm;
  if (x == 1.0 || x == -1.0)
    dp = 0.5 * n * (n + 1.0) * (x == 1.0 ? 1.0 : (n % 2 ? 1.0 : -1.0));
  else
    dp = n * (x * pm - pm1) / (x * x - 1.0);
}

}  // namespace

// q-point Gauss-Legendre-Lobatto rule mapped to [0,1]. Interior nodes are
// the roots of P'_{q-1}, found by Newton from Chebyshev-Lobatto guesses;
// weights are 2/(q(q-1) P_{q-1}(x)^2) on [-1,1].
GLLRule gll_rule(int q) {
  if (q < 2) throw std::invalid_argument("gll_rule: need at least 2 nodes");
  const int n = q - 1;
  std::vector<double> x(q), w(q);
  x[0] = -1.0;
  x[n] = 1.0;
  for (int i = 1; i < n; ++i) {
    double xi = -std::cos(M_PI * i / n);
    for (int iter = 0; iter < 100; ++iter) {
      double p, dp;
      legendre(n, xi, p, dp);
      // Newton on g = P'_n; g' from the Legendre ODE.
      const double g = dp;
      const double gp = (2.0 * xi * dp - n * (n + 1.0) * p) / (1.0 - xi * xi);
      const double step = g / gp;
      xi -= step;
      if (std::abs(step) < 1e-15) break;
    }
    x[i] = xi;
  }
  for (int i = 0; i < q; ++i) {
    double p, dp;
    legendre(n, x[i], p, dp);
    w[i] = 2.0 / (n * (n + 1.0) * p * p);
  }

  GLLRule rule;
  rule.q = q;
  rule.nodes.resize(q);
  rule.weights.resize(q);
  for (int i = 0; i < q; ++i) {
    rule.nodes[i] = 0.5 * (x[i] + 1.0);
    rule.weights[i] = 0.5 * w[i];
  }
  rule.nodes[0] = 0.0;
  rule.nodes[q - 1] = 1.0;
  return rule;
}

}  // namespace kronphi
