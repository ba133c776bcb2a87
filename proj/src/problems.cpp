#include "kronphi/problems.hpp"

#include <cmath>
#include <iostream>
#include <stdexcept>

namespace kronphi {

Matrix<double> fd_operator_1d(int n, double eps, double alpha) {
  if (n < 1) throw std::invalid_argument("fd_operator_1d: need n >= 1");
  const double h = 1.0 / (n + 1);
  const double lo = eps / (h * h) - alpha / (2.0 * h);
  const double di = -2.0 * eps / (h * h);
  const double hi = eps / (h * h) + alpha / (2.0 * h);
  Matrix<double> a(n, n);
  for (int i = 0; i < n; ++i) {
    if (i > 0) a(i, i - 1) = lo;
    a(i, i) = di;
    if (i + 1 < n) a(i, i + 1) = hi;
  }
  return a;
}

Matrix<double> matrix_from_tensor(const Tensor<double>& t) {
  if (t.order() != 2)
    throw std::invalid_argument("matrix_from_tensor: tensor order != 2");
  return Matrix<double>(t.dim(0), t.dim(1), vec(t));
}

Tensor<double> tensor_from_matrix(const Matrix<double>& m) {
  std::vector<double> data(m.data(), m.data() + m.size());
  return Tensor<double>({m.rows(), m.cols()}, std::move(data));
}

namespace {

struct AdrFields {
  Tensor<double> u0;      // initial data on the grid
  Tensor<double> u0_sq;   // u0^2
  Tensor<double> psi_a;   // u0 - eps*lap(u0) - alpha*sum_mu d_mu u0
};

}  // namespace

ADRProblem build_adr(int n1, int n2, int n3) {
  constexpr double eps = 0.75;
  constexpr double alpha = 0.1;
  ADRProblem prob;
  prob.dims = {n1, n2, n3};
  prob.eps = eps;
  prob.alpha = alpha;
  for (int n : prob.dims) {
    prob.factors.push_back(fd_operator_1d(n, eps, alpha));
    std::vector<double> x(n);
    const double h = 1.0 / (n + 1);
    for (int i = 0; i < n; ++i) x[i] = (i + 1) * h;
    prob.grids.push_back(std::move(x));
  }

  auto fields = std::make_shared<AdrFields>();
  fields->u0 = Tensor<double>(prob.dims);
  fields->u0_sq = Tensor<double>(prob.dims);
  fields->psi_a = Tensor<double>(prob.dims);
  const auto& gx = prob.grids;
  auto p = [](double x) { return x * (1.0 - x); };
  auto dp = [](double x) { return 1.0 - 2.0 * x; };
  std::size_t idx = 0;
  for (int k = 0; k < n3; ++k)
    for (int j = 0; j < n2; ++j)
      for (int i = 0; i < n1; ++i, ++idx) {
        const double p1 = p(gx[0][i]), p2 = p(gx[1][j]), p3 = p(gx[2][k]);
        const double u0 = 64.0 * p1 * p2 * p3;
        const double lap = 64.0 * (-2.0) * (p2 * p3 + p1 * p3 + p1 * p2);
        const double adv = 64.0 * (dp(gx[0][i]) * p2 * p3 +
                                   dp(gx[1][j]) * p1 * p3 +
                                   dp(gx[2][k]) * p1 * p2);
        fields->u0[idx] = u0;
        fields->u0_sq[idx] = u0 * u0;
        fields->psi_a[idx] = u0 - eps * lap - alpha * adv;
      }
  prob.u0 = fields->u0;

  prob.exact = [fields](double t) {
    Tensor<double> out = fields->u0;
    scale(out, std::exp(t));
    return out;
  };
  prob.source = [fields](double t) {
    const double et = std::exp(t);
    const double e2t = et * et;
    Tensor<double> out = Tensor<double>::no_init(fields->u0.dims());
    double* KRONPHI_RESTRICT o = out.data();
    const double* KRONPHI_RESTRICT pa = fields->psi_a.data();
    const double* KRONPHI_RESTRICT u0s = fields->u0_sq.data();
    const std::ptrdiff_t n = std::ptrdiff_t(out.size());
#pragma omp parallel for schedule(static) if (n > (1 << 14))
    for (std::ptrdiff_t r = 0; r < n; ++r)
      o[r] = et * pa[r] - 1.0 / (1.0 + e2t * u0s[r]);
    return out;
  };
  prob.g = [fields](double t, const Tensor<double>& u) {
    const double et = std::exp(t);
    const double e2t = et * et;
    Tensor<double> out = Tensor<double>::no_init(u.dims());
    double* KRONPHI_RESTRICT o = out.data();
    const double* KRONPHI_RESTRICT ud = u.data();
    const double* KRONPHI_RESTRICT pa = fields->psi_a.data();
    const double* KRONPHI_RESTRICT u0s = fields->u0_sq.data();
    const std::ptrdiff_t n = std::ptrdiff_t(out.size());
#pragma omp parallel for schedule(static) if (n > (1 << 14))
    for (std::ptrdiff_t r = 0; r < n; ++r)
      o[r] = 1.0 / (1.0 + ud[r] * ud[r]) + et * pa[r] -
             1.0 / (1.0 + e2t * u0s[r]);
    return out;
  };
  return prob;
}

ProblemSpec ADRProblem::to_problem_spec() const {
  ProblemSpec spec;
  spec.K = KroneckerSum<double>(factors);
  spec.g = g;
  spec.u0 = u0;
  spec.t0 = 0.0;
  spec.t_final = 1.0;
  spec.exact = exact;
  return spec;
}

RiccatiProblem build_riccati(int n_hat) {
  if (n_hat < 2) throw std::invalid_argument("build_riccati: need n_hat >= 2");
  RiccatiProblem prob;
  prob.n_hat = n_hat;
  const int n = n_hat * n_hat;
  const double h = 1.0 / (n_hat + 1);

  // D1 = dxx - 10 x dx, D2 = dyy - 100 y dy, with the variable advection
  // coefficient sampled at the grid node of each row.
  Matrix<double> d1(n_hat, n_hat), d2(n_hat, n_hat);
  for (int i = 0; i < n_hat; ++i) {
    const double xi = (i + 1) * h;
    const double a1 = -10.0 * xi;
    const double a2 = -100.0 * xi;
    if (i > 0) {
      d1(i, i - 1) = 1.0 / (h * h) - a1 / (2.0 * h);
      d2(i, i - 1) = 1.0 / (h * h) - a2 / (2.0 * h);
    }
    d1(i, i) = -2.0 / (h * h);
    d2(i, i) = -2.0 / (h * h);
    if (i + 1 < n_hat) {
      d1(i, i + 1) = 1.0 / (h * h) + a1 / (2.0 * h);
      d2(i, i + 1) = 1.0 / (h * h) + a2 / (2.0 * h);
    }
  }

  // A = I (x) D1 + D2 (x) I over the x-fastest grid ordering.
  prob.a = Matrix<double>(n, n);
  for (int j = 0; j < n_hat; ++j)
    for (int i = 0; i < n_hat; ++i) {
      const int row = i + j * n_hat;
      for (int i2 = 0; i2 < n_hat; ++i2) prob.a(row, i2 + j * n_hat) += d1(i, i2);
      for (int j2 = 0; j2 < n_hat; ++j2) prob.a(row, i + j2 * n_hat) += d2(j, j2);
    }
  prob.a_t = prob.a.transposed();

  prob.b.assign(n, 0.0);
  prob.c.assign(n, 0.0);
  for (int j = 0; j < n_hat; ++j)
    for (int i = 0; i < n_hat; ++i) {
      const double xi = (i + 1) * h;
      const int k = i + j * n_hat;
      if (xi > 0.1 && xi <= 0.3) prob.b[k] = 1.0;
      if (xi > 0.7 && xi <= 0.9) prob.c[k] = 1.0;
    }

  prob.alpha = 100.0;
  prob.b_mat = Matrix<double>(n, n);
  prob.c_mat = Matrix<double>(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      prob.b_mat(i, j) = -prob.b[i] * prob.b[j];
      prob.c_mat(i, j) = prob.alpha * prob.c[i] * prob.c[j];
    }
  prob.u0 = Matrix<double>(n, n);
  return prob;
}

namespace {

// w = U b and z = U^T b without forming any n^2 intermediate.
void control_products(const double* u, int n, const std::vector<double>& b,
                      std::vector<double>& w, std::vector<double>& z) {
  w.assign(n, 0.0);
  z.assign(n, 0.0);
  gemm(n, 1, n, 1.0, u, n, b.data(), n, Op::none, 0.0, w.data(), n);
  gemm(1, n, n, 1.0, b.data(), 1, u, n, Op::none, 0.0, z.data(), 1);
}

}  // namespace

Matrix<double> riccati_rhs(const Matrix<double>& u, const RiccatiProblem& p) {
  const int n = p.a.rows();
  if (u.rows() != n || u.cols() != n)
    throw std::invalid_argument("riccati_rhs: size mismatch");
  Matrix<double> out = multiply(p.a_t, u);
  gemm(n, n, n, 1.0, u.data(), n, p.a.data(), n, Op::none, 1.0, out.data(), n);
  std::vector<double> w, z;
  control_products(u.data(), n, p.b, w, z);
  const double* KRONPHI_RESTRICT cm = p.c_mat.data();
  double* KRONPHI_RESTRICT o = out.data();
#pragma omp parallel for schedule(static)
  for (int j = 0; j < n; ++j) {
    const double zj = z[j];
    for (int i = 0; i < n; ++i)
      o[i + std::size_t(j) * n] += cm[i + std::size_t(j) * n] - w[i] * zj;
  }
  return out;
}

std::vector<Matrix<double>> riccati_jacobian_factors(const Matrix<double>& u,
                                                     const RiccatiProblem& p) {
  const int n = p.a.rows();
  if (u.rows() != n || u.cols() != n)
    throw std::invalid_argument("riccati_jacobian_factors: size mismatch");
  std::vector<double> w, z;
  control_products(u.data(), n, p.b, w, z);
  double asym = 0.0, scale_wz = 0.0;
  for (int i = 0; i < n; ++i) {
    asym = std::max(asym, std::abs(w[i] - z[i]));
    scale_wz = std::max({scale_wz, std::abs(w[i]), std::abs(z[i])});
  }
  auto rank1_update = [&](const std::vector<double>& col) {
    Matrix<double> j = p.a_t;
    double* KRONPHI_RESTRICT jd = j.data();
#pragma omp parallel for schedule(static)
    for (int jj = 0; jj < n; ++jj) {
      const double bj = p.b[jj];
      if (bj == 0.0) continue;
      for (int ii = 0; ii < n; ++ii)
        jd[ii + std::size_t(jj) * n] -= col[ii] * bj;
    }
    return j;
  };
  if (asym <= 1e-8 * std::max(scale_wz, 1e-300)) {
    Matrix<double> j = rank1_update(w);
    return {j, j};
  }
  std::cerr << "riccati_jacobian_factors: state asymmetry "
            << (scale_wz > 0 ? asym / scale_wz : asym)
            << " above tolerance; computing both factors independently\n";
  return {rank1_update(w), rank1_update(z)};
}

double are_residual(const Matrix<double>& u, const RiccatiProblem& p) {
  return riccati_rhs(u, p).norm_fro();
}

ProblemSpec RiccatiProblem::to_problem_spec(double t_final) const {
  ProblemSpec spec;
  spec.K = KroneckerSum<double>({a_t, a_t});
  const int n = a.rows();
  auto self = std::make_shared<RiccatiProblem>(*this);
  spec.g = [self, n](double, const Tensor<double>& u) {
    std::vector<double> w, z;
    control_products(u.data(), n, self->b, w, z);
    Tensor<double> out = Tensor<double>::no_init(u.dims());
    double* KRONPHI_RESTRICT o = out.data();
    const double* KRONPHI_RESTRICT cm = self->c_mat.data();
#pragma omp parallel for schedule(static)
    for (int j = 0; j < n; ++j) {
      const double zj = z[j];
      for (int i = 0; i < n; ++i)
        o[i + std::size_t(j) * n] = cm[i + std::size_t(j) * n] - w[i] * zj;
    }
    return out;
  };
  spec.u0 = tensor_from_matrix(u0);
  spec.t0 = 0.0;
  spec.t_final = t_final;
  spec.jacobian_factors = [self](const Tensor<double>& u) {
    return riccati_jacobian_factors(matrix_from_tensor(u), *self);
  };
  return spec;
}

}  // namespace kronphi
