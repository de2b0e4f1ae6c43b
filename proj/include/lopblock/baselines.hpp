#pragma once
// Reference recovery methods: nonnegative least squares and the quadratic
// model-plus-data hybrid. Both solve convex programs over the nonnegative
// orthant and report convergence diagnostics.

#include <Eigen/Dense>

#include "lopblock/penalty.hpp"

namespace lop {

struct SolverReport {
  SignalVector x_hat;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;  // max-norm of x - P_+(x - grad)
};

// min_{x>=0} (1/2)||Ax - r||^2 via Lawson-Hanson active sets (QR subproblem
// solves), falling back to accelerated projected gradient if the active-set
// loop exceeds its iteration budget.
SolverReport nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& r,
                  double tol = 1e-10, int max_iter = 0 /* 0 -> 3N */);

// min_{x>=0} (1/2)||Ax - r||^2 + (mu/2)(x - x_bar)^T P (x - x_bar) via
// monotone accelerated projected gradient with step 1/L,
// L = ||A^T A||_2 + mu ||P||_2; stops when the projected-gradient residual
// reaches tol.
SolverReport hybrid_model_data(const Eigen::MatrixXd& a,
                               const Eigen::VectorXd& r,
                               const Eigen::VectorXd& x_bar,
                               const Eigen::MatrixXd& p, double mu,
                               double tol = 1e-9, int max_iter = 20000);

// ||x_star - x_hat||^2 / ||x_star||^2; requires x_star != 0.
double nmse(const SignalVector& x_star, const SignalVector& x_hat);

}  // namespace lop
