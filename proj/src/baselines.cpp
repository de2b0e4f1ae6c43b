// Reference estimators: Lawson-Hanson nonnegative least squares (with an
// accelerated projected-gradient fallback when the active-set loop exceeds
// its budget) and the quadratic model-plus-data hybrid solved by monotone
// accelerated projected gradient.

#include "lopblock/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "detail.hpp"

namespace lop {

namespace {

using detail::sym_op_norm;

void check_problem(const Eigen::MatrixXd& a, const Eigen::VectorXd& r) {
  if (a.rows() == 0 || a.cols() == 0)
    throw std::invalid_argument("A must be nonempty");
  if (a.rows() != r.size())
    throw std::invalid_argument("A and r have incompatible sizes");
  if (!a.allFinite() || !r.allFinite())
    throw std::invalid_argument("A or r has nonfinite entries");
}

double kkt_infnorm(const SignalVector& x, const Eigen::VectorXd& grad) {
  return (x - (x - grad).cwiseMax(0.0)).cwiseAbs().maxCoeff();
}

// Monotone accelerated projected gradient for
// min_{x>=0} 0.5 x'Qx - b'x + c0, used both as the NNLS fallback and as the
// hybrid solver.  `lip` is the gradient Lipschitz constant defining the step
// 1/lip; convergence is declared when the projected-gradient residual
// ||x - P_+(x - (Qx - b))||_inf falls to tol.
SolverReport apg_qp(const Eigen::MatrixXd& q, const Eigen::VectorXd& b,
                    double c0, const SignalVector& x0, double lip, double tol,
                    int max_iter) {
  const double step = 1.0 / std::max(lip, 1e-300);
  auto fval_with = [&](const SignalVector& u, const Eigen::VectorXd& qu) {
    return 0.5 * u.dot(qu) - b.dot(u) + c0;
  };
  SignalVector x = x0.cwiseMax(0.0);
  SignalVector y = x;
  Eigen::VectorXd qx = q * x;
  double t = 1.0;
  double prev = fval_with(x, qx);
  SolverReport rep;
  rep.x_hat = x;
  rep.objective = prev;
  rep.kkt_residual = kkt_infnorm(x, qx - b);
  if (rep.kkt_residual <= tol) {
    rep.converged = true;
    return rep;
  }
  for (int it = 1; it <= max_iter; ++it) {
    SignalVector x_new = (y - step * (q * y - b)).cwiseMax(0.0);
    Eigen::VectorXd qx_new = q * x_new;
    double f_cur = fval_with(x_new, qx_new);
    if (f_cur > prev) {  // monotone restart; q*x is already in hand
      y = x;
      t = 1.0;
      x_new = (y - step * (qx - b)).cwiseMax(0.0);
      qx_new = q * x_new;
      f_cur = fval_with(x_new, qx_new);
    }
    const double t_new = 0.5 * (1 + std::sqrt(1 + 4 * t * t));
    y = x_new + ((t - 1) / t_new) * (x_new - x);
    x = std::move(x_new);
    qx = std::move(qx_new);
    t = t_new;
    prev = f_cur;
    rep.iterations = it;
    if (kkt_infnorm(x, qx - b) <= tol) {
      rep.converged = true;
      break;
    }
  }
  rep.x_hat = x;
  rep.objective = prev;
  rep.kkt_residual = kkt_infnorm(x, qx - b);
  return rep;
}

}  // namespace

SolverReport nnls(const Eigen::MatrixXd& a, const Eigen::VectorXd& r,
                  double tol, int max_iter) {
  check_problem(a, r);
  if (!(tol > 0)) throw std::invalid_argument("tol must be positive");
  const int n = static_cast<int>(a.cols());
  if (max_iter <= 0) max_iter = 3 * n;

  const Eigen::VectorXd atr = a.transpose() * r;
  const double dual_scale = std::max(1.0, atr.cwiseAbs().maxCoeff());
  const double thresh = tol * dual_scale;

  SignalVector x = SignalVector::Zero(n);
  std::vector<char> passive(n, 0);
  Eigen::VectorXd w = atr;  // -grad at x = 0
  auto objective = [&](const SignalVector& u) {
    return 0.5 * (a * u - r).squaredNorm();
  };

  int outer = 0;
  bool optimal = false;
  while (outer < max_iter) {
    // pick the most violated inactive coordinate
    int j_best = -1;
    double w_best = thresh;
    for (int j = 0; j < n; ++j)
      if (!passive[j] && w[j] > w_best) {
        w_best = w[j];
        j_best = j;
      }
    if (j_best < 0) {
      optimal = true;
      break;
    }
    passive[j_best] = 1;
    ++outer;

    // inner loop: restricted least squares, stepping back when coordinates
    // of the subproblem solution go nonpositive
    for (int inner = 0; inner <= n + 1; ++inner) {
      std::vector<int> idx;
      for (int j = 0; j < n; ++j)
        if (passive[j]) idx.push_back(j);
      if (idx.empty()) break;
      Eigen::MatrixXd ap(a.rows(), static_cast<int>(idx.size()));
      for (std::size_t k = 0; k < idx.size(); ++k) ap.col(k) = a.col(idx[k]);
      Eigen::VectorXd z = ap.colPivHouseholderQr().solve(r);

      bool all_pos = true;
      for (int k = 0; k < z.size(); ++k)
        if (z[k] <= 0) all_pos = false;
      if (all_pos) {
        x.setZero();
        for (std::size_t k = 0; k < idx.size(); ++k) x[idx[k]] = z[k];
        break;
      }
      // move toward z until the first passive coordinate hits zero
      double alpha = 1.0;
      for (std::size_t k = 0; k < idx.size(); ++k)
        if (z[k] <= 0) {
          const double xk = x[idx[k]];
          if (xk - z[k] > 0) alpha = std::min(alpha, xk / (xk - z[k]));
        }
      for (std::size_t k = 0; k < idx.size(); ++k) {
        const int j = idx[k];
        x[j] += alpha * (z[k] - x[j]);
        if (x[j] <= 1e-14 * dual_scale) {
          x[j] = 0;
          passive[j] = 0;
        }
      }
    }
    w = atr - a.transpose() * (a * x);
  }

  if (!optimal) {
    // active-set budget exhausted; polish with accelerated projected gradient
    Eigen::MatrixXd q = a.transpose() * a;
    q = 0.5 * (q + q.transpose());
    SolverReport rep =
        apg_qp(q, atr, 0.5 * r.squaredNorm(), x, sym_op_norm(q), 1e-12, 50000);
    rep.iterations += outer;
    rep.objective = objective(rep.x_hat);
    return rep;
  }

  SolverReport rep;
  rep.x_hat = x;
  rep.objective = objective(x);
  rep.iterations = outer;
  rep.converged = true;
  rep.kkt_residual = kkt_infnorm(x, a.transpose() * (a * x) - atr);
  return rep;
}

SolverReport hybrid_model_data(const Eigen::MatrixXd& a,
                               const Eigen::VectorXd& r,
                               const Eigen::VectorXd& x_bar,
                               const Eigen::MatrixXd& p, double mu,
                               double tol, int max_iter) {
  check_problem(a, r);
  const int n = static_cast<int>(a.cols());
  if (x_bar.size() != n || p.rows() != n || p.cols() != n)
    throw std::invalid_argument("x_bar or P has the wrong size");
  if (!p.allFinite() || !x_bar.allFinite())
    throw std::invalid_argument("P or x_bar has nonfinite entries");
  if (!(mu >= 0)) throw std::invalid_argument("mu must be nonnegative");
  if (!(tol > 0) || max_iter <= 0)
    throw std::invalid_argument("tol and max_iter must be positive");

  Eigen::MatrixXd ata = a.transpose() * a;
  ata = 0.5 * (ata + ata.transpose());
  const Eigen::MatrixXd p_sym = 0.5 * (p + p.transpose());
  const Eigen::MatrixXd q = ata + mu * p_sym;
  const Eigen::VectorXd b = a.transpose() * r + mu * (p * x_bar);
  const double c0 =
      0.5 * r.squaredNorm() + 0.5 * mu * x_bar.dot(p * x_bar);
  // step constant from the sum of the two operator norms (an upper bound on
  // ||Q||, so the 1/lip step is always safe)
  const double lip = sym_op_norm(ata) + mu * sym_op_norm(p_sym);
  return apg_qp(q, b, c0, SignalVector::Zero(n), lip, tol, max_iter);
}

double nmse(const SignalVector& x_star, const SignalVector& x_hat) {
  if (x_star.size() != x_hat.size())
    throw std::invalid_argument("size mismatch");
  const double denom = x_star.squaredNorm();
  if (denom <= 0)
    throw std::invalid_argument("reference signal must be nonzero");
  return (x_star - x_hat).squaredNorm() / denom;
}

}  // namespace lop
