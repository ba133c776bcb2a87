// Benchmark problem builders: 1D finite-difference operators, the 3D
// advection-diffusion-reaction equation with a manufactured source, and the
// 2D LQR differential Riccati equation.
#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "kronphi/integrators.hpp"
#include "kronphi/matrix.hpp"
#include "kronphi/tensor.hpp"

namespace kronphi {

// Tridiagonal operator for eps*u'' + alpha*u' on n inner points of a uniform
// grid over [0,1] with homogeneous Dirichlet boundaries, h = 1/(n+1).
Matrix<double> fd_operator_1d(int n, double eps, double alpha);

// View a 2-tensor as a matrix and back (same storage order).
Matrix<double> matrix_from_tensor(const Tensor<double>& t);
Tensor<double> tensor_from_matrix(const Matrix<double>& m);

struct ADRProblem {
  std::vector<int> dims;
  std::vector<Matrix<double>> factors;
  double eps = 0.75;
  double alpha = 0.1;
  std::vector<std::vector<double>> grids;  // inner points per direction
  Tensor<double> u0;
  std::function<Tensor<double>(double)> exact;   // e^t * u0 on the grid
  std::function<Tensor<double>(double)> source;  // Psi(t, .) on the grid
  std::function<Tensor<double>(double, const Tensor<double>&)> g;

  ProblemSpec to_problem_spec() const;  // t0 = 0, T = 1
};

// g(t,u) = 1/(1+u^2) + Psi(t,x) with Psi manufactured so that
// u(t,x) = e^t u0(x) solves the PDE; u0 is a product of quadratics, so the
// centered differences are exact and the semidiscrete system shares the
// same solution.
ADRProblem build_adr(int n1, int n2, int n3);

struct RiccatiProblem {
  int n_hat = 0;
  Matrix<double> a;       // 2D FD discretization, size n x n with n = n_hat^2
  Matrix<double> a_t;     // transpose, the Kronecker factor
  std::vector<double> b;  // control indicator
  std::vector<double> c;  // output indicator
  double alpha = 100.0;
  Matrix<double> b_mat;   // B = -b b^T
  Matrix<double> c_mat;   // C = alpha c^T c
  Matrix<double> u0;      // zero

  ProblemSpec to_problem_spec(double t_final = 0.025) const;
};

RiccatiProblem build_riccati(int n_hat);

// A^T U + U A + C + U B U.
Matrix<double> riccati_rhs(const Matrix<double>& u, const RiccatiProblem& p);

// [J1, J2] with J1 = A^T + U B and J2 = (A + B U)^T. For symmetric U these
// coincide and a single matrix is computed (and returned twice); otherwise
// a warning is emitted and both are formed independently.
std::vector<Matrix<double>> riccati_jacobian_factors(const Matrix<double>& u,
                                                     const RiccatiProblem& p);

// Frobenius norm of the algebraic Riccati residual at u.
double are_residual(const Matrix<double>& u, const RiccatiProblem& p);

}  // namespace kronphi
