// Generalized Moreau enhancement of the chain penalty: subtract from F the
// value of its B-weighted Moreau envelope, F(x) - min_v { F(v) +
// 0.5*||B(x-v)||^2 }. The enhanced penalty stays nonnegative and lower-bounds
// F; with B'B = (omega/lambda) * (A'A + mu*P) the composite objective of the
// recovery problem keeps a convex structure that a strongly monotone
// primal-dual iteration can exploit without ever materializing B itself.

#include "lopblock/gme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "detail.hpp"
#include "lopblock/penalty.hpp"

namespace lop {

namespace {

using detail::sym_op_norm;

void check_matrix(const Eigen::MatrixXd& m, const char* name) {
  if (!m.allFinite())
    throw std::invalid_argument(std::string(name) + " has nonfinite entries");
}

double chain_penalty_value(const SignalVector& x, double beta) {
  if (x.size() == 0) return 0.0;
  return eval_lop_penalized(x, beta).value;
}

// min_v { F(v) + 0.5*||B(x - v)||^2 } by FISTA on the smooth quadratic part
// with the exact chain prox, started at v = x (so the minimum found never
// exceeds F(x) and the enhanced value stays nonnegative).
struct EnvelopeResult {
  double value = 0;
  SignalVector v_hat;
  int iterations = 0;
  bool converged = true;
};

EnvelopeResult envelope_min(const SignalVector& x, const Eigen::MatrixXd& btb,
                            double lip, double beta, double tol,
                            int max_iter) {
  const double step = 1.0 / std::max(lip, 1e-300);
  SignalVector v = x;
  SignalVector y = v;
  double t = 1.0;
  double best = chain_penalty_value(v, beta);  // quadratic term is 0 at v=x
  SignalVector best_v = v;
  EnvelopeResult res;
  auto total = [&](const SignalVector& u) {
    Eigen::VectorXd d = x - u;
    return chain_penalty_value(u, beta) + 0.5 * d.dot(btb * d);
  };
  double prev = best;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd grad = btb * (y - x);
    SignalVector v_new = prox_lop(y - step * grad, step, beta).x;
    const double f_new = total(v_new);
    if (f_new > prev) {  // monotone restart
      y = v;
      t = 1.0;
      grad = btb * (y - x);
      v_new = prox_lop(y - step * grad, step, beta).x;
    }
    const double f_cur = total(v_new);
    const double t_new = 0.5 * (1 + std::sqrt(1 + 4 * t * t));
    y = v_new + ((t - 1) / t_new) * (v_new - v);
    const double move = (v_new - v).norm();
    v = std::move(v_new);
    t = t_new;
    if (f_cur < best) {
      best = f_cur;
      best_v = v;
    }
    res.iterations = it;
    if (move <= tol * (1 + v.norm()) &&
        std::abs(f_cur - prev) <= tol * (1 + std::abs(f_cur))) {
      res.value = best;
      res.v_hat = std::move(best_v);
      return res;
    }
    prev = f_cur;
  }
  res.converged = false;
  res.value = best;
  res.v_hat = std::move(best_v);
  return res;
}

}  // namespace

Eigen::MatrixXd build_B_factor(const Eigen::MatrixXd& a,
                               const Eigen::MatrixXd& p,
                               const GmeConfig& cfg) {
  if (a.cols() != p.rows() || p.rows() != p.cols())
    throw std::invalid_argument("dimension mismatch between A and P");
  check_matrix(a, "A");
  check_matrix(p, "P");
  if (!(cfg.omega >= 0.0 && cfg.omega <= 1.0))
    throw std::invalid_argument("omega must lie in [0, 1]");
  if (!(cfg.lambda > 0))
    throw std::invalid_argument("lambda must be positive");
  if (!(cfg.mu >= 0)) throw std::invalid_argument("mu must be nonnegative");
  if ((p - p.transpose()).cwiseAbs().maxCoeff() >
      1e-10 * std::max(1.0, p.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("P must be symmetric");
  const int n = static_cast<int>(a.cols());
  if (cfg.omega == 0.0) return Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd m =
      (cfg.omega / cfg.lambda) * (a.transpose() * a + cfg.mu * p);
  m = 0.5 * (m + m.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) {
    // PSD but singular: fall back to an eigenvalue square root.
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m);
    Eigen::VectorXd ev = eig.eigenvalues();
    const double floor_ev = -1e-10 * std::max(ev.cwiseAbs().maxCoeff(), 1.0);
    for (int i = 0; i < ev.size(); ++i) {
      if (ev[i] < floor_ev)
        throw std::invalid_argument("A'A + mu*P is not positive semidefinite");
      ev[i] = std::sqrt(std::max(ev[i], 0.0));
    }
    return ev.asDiagonal() * eig.eigenvectors().transpose();
  }
  return llt.matrixU();
}

GmeValueResult gme_value(const SignalVector& x, const Eigen::MatrixXd& b,
                         double beta, double tol, int max_iter) {
  if (x.size() == 0) throw std::invalid_argument("signal must be nonempty");
  if (b.cols() != x.size())
    throw std::invalid_argument("B has wrong number of columns");
  check_matrix(b, "B");
  if (!(beta >= 0)) throw std::invalid_argument("beta must be nonnegative");
  GmeValueResult res;
  const double fx = chain_penalty_value(x, beta);
  if (b.size() == 0 || b.cwiseAbs().maxCoeff() == 0.0) {
    // Envelope of F with zero metric is min F = 0, attained at v = 0.
    res.value = fx;
    res.envelope = 0.0;
    res.v_hat = SignalVector::Zero(x.size());
    res.iterations = 0;
    res.converged = true;
    return res;
  }
  Eigen::MatrixXd btb = b.transpose() * b;
  btb = 0.5 * (btb + btb.transpose());
  const double lip = sym_op_norm(btb);
  EnvelopeResult env = envelope_min(x, btb, lip, beta, tol, max_iter);
  res.value = std::max(fx - env.value, 0.0);
  res.envelope = env.value;
  res.v_hat = std::move(env.v_hat);
  res.iterations = env.iterations;
  res.converged = env.converged;
  return res;
}

BoundednessReport check_boundedness(const Eigen::MatrixXd& b, double beta,
                                    int probe_directions,
                                    const std::vector<double>& scales,
                                    std::uint64_t seed) {
  if (b.rows() == 0 || b.cols() == 0)
    throw std::invalid_argument("B must be nonempty");
  check_matrix(b, "B");
  if (probe_directions <= 0)
    throw std::invalid_argument("need at least one probe direction");
  if (scales.empty()) throw std::invalid_argument("need at least one scale");
  for (double s : scales)
    if (!(s > 0)) throw std::invalid_argument("scales must be positive");

  const int n = static_cast<int>(b.cols());
  BoundednessReport rep;

  // Precondition: the enhanced penalty is bounded iff B'B dominates the
  // curvature the chain penalty can lose, which for this construction means
  // B'B must be positive definite with moderate conditioning.
  Eigen::MatrixXd btb = b.transpose() * b;
  btb = 0.5 * (btb + btb.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(btb);
  const double ev_min = eig.eigenvalues().minCoeff();
  const double ev_max = eig.eigenvalues().maxCoeff();
  rep.precondition_ok =
      ev_min > 0 && ev_max > 0 && ev_max / ev_min <= 1e12;

  std::vector<double> sorted_scales = scales;
  std::sort(sorted_scales.begin(), sorted_scales.end());

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  rep.direction_growth.resize(probe_directions);
  rep.max_value = 0.0;
  bool all_level = true;
  for (int d = 0; d < probe_directions; ++d) {
    Eigen::VectorXd dir(n);
    for (int i = 0; i < n; ++i) dir[i] = gauss(rng);
    const double nn = dir.norm();
    if (nn > 0) dir /= nn;
    std::vector<double> growth;
    growth.reserve(sorted_scales.size());
    for (double s : sorted_scales) {
      const double val = gme_value(s * dir, b, beta, 1e-8, 20000).value;
      growth.push_back(val);
      rep.max_value = std::max(rep.max_value, val);
    }
    double ratio = 1.0;
    if (growth.size() > 1) {
      const double last = growth.back();
      const double prior_max =
          *std::max_element(growth.begin(), growth.end() - 1);
      ratio = prior_max > 0
                  ? last / prior_max
                  : (last > 1e-12 ? std::numeric_limits<double>::infinity()
                                  : 1.0);
      if (last > 1.05 * prior_max + 1e-9 * (1 + prior_max))
        all_level = false;
    }
    rep.direction_growth[d] = ratio;
  }
  rep.bounded = all_level;
  return rep;
}

namespace {

// Projected FISTA with monotone restart for the lambda = 0 special case
// min_{x >= 0} 0.5 x'Qx - b'x + const.
SignalVector fista_qp(const Eigen::MatrixXd& q, const Eigen::VectorXd& b,
                      const SignalVector& x0, double tol, int max_iter,
                      int* iters_out, bool* converged_out) {
  const double lip = std::max(sym_op_norm(q), 1e-300);
  const double step = 1.0 / lip;
  auto fval = [&](const SignalVector& u) {
    return 0.5 * u.dot(q * u) - b.dot(u);
  };
  SignalVector x = x0.cwiseMax(0.0);
  SignalVector y = x;
  double t = 1.0;
  double prev = fval(x);
  bool converged = false;
  int it = 0;
  for (it = 1; it <= max_iter; ++it) {
    SignalVector x_new = (y - step * (q * y - b)).cwiseMax(0.0);
    if (fval(x_new) > prev) {
      y = x;
      t = 1.0;
      x_new = (y - step * (q * y - b)).cwiseMax(0.0);
    }
    const double f_cur = fval(x_new);
    const double t_new = 0.5 * (1 + std::sqrt(1 + 4 * t * t));
    y = x_new + ((t - 1) / t_new) * (x_new - x);
    const double move = (x_new - x).norm();
    x = std::move(x_new);
    t = t_new;
    if (move <= tol * (1 + x.norm())) {
      converged = true;
      break;
    }
    prev = f_cur;
  }
  if (iters_out) *iters_out = std::min(it, max_iter);
  if (converged_out) *converged_out = converged;
  return x;
}

}  // namespace

std::pair<SignalVector, SaddleState> solve_aps_problem(
    const Eigen::MatrixXd& a, const Eigen::VectorXd& r,
    const Eigen::VectorXd& x_bar, const Eigen::MatrixXd& p,
    const GmeConfig& cfg, const SignalVector* x0,
    void (*observer)(int, const SignalVector&, void*), void* observer_ctx) {
  const int n = static_cast<int>(a.cols());
  if (a.rows() != r.size())
    throw std::invalid_argument("A and r have incompatible sizes");
  if (x_bar.size() != n || p.rows() != n || p.cols() != n)
    throw std::invalid_argument("x_bar or P has the wrong size");
  check_matrix(a, "A");
  check_matrix(p, "P");
  if (!r.allFinite() || !x_bar.allFinite())
    throw std::invalid_argument("r or x_bar has nonfinite entries");
  if (!(cfg.omega >= 0.0)) throw std::invalid_argument("omega must be >= 0");
  if (cfg.omega > 1.0)
    throw std::invalid_argument(
        "omega > 1 breaks convexity of the enhanced objective; refusing");
  if (!(cfg.lambda >= 0))
    throw std::invalid_argument("lambda must be nonnegative");
  if (!(cfg.mu >= 0)) throw std::invalid_argument("mu must be nonnegative");
  if (!(cfg.tol > 0) || cfg.max_iter <= 0)
    throw std::invalid_argument("tol and max_iter must be positive");
  if (x0 && x0->size() != n)
    throw std::invalid_argument("x0 has the wrong size");

  Eigen::MatrixXd q = a.transpose() * a + cfg.mu * p;
  q = 0.5 * (q + q.transpose());
  const Eigen::VectorXd b = a.transpose() * r + cfg.mu * (p * x_bar);
  const double lip = std::max(sym_op_norm(q), 1e-300);
  const double c0 =
      0.5 * r.squaredNorm() + 0.5 * cfg.mu * x_bar.dot(p * x_bar);

  auto smooth0 = [&](const SignalVector& u) {
    return 0.5 * u.dot(q * u) - b.dot(u) + c0;
  };

  SaddleState st;

  if (cfg.lambda == 0.0) {
    int iters = 0;
    bool conv = false;
    SignalVector start =
        x0 ? x0->cwiseMax(0.0) : SignalVector(SignalVector::Zero(n));
    st.x = fista_qp(q, b, start, cfg.tol, cfg.max_iter, &iters, &conv);
    st.v = SignalVector::Zero(n);
    st.sigma_x = SignalVector::Zero(n);
    st.sigma_v = SignalVector::Zero(n);
    st.iterations = iters;
    st.converged = conv;
    st.primal_residual =
        (st.x - (st.x - (q * st.x - b)).cwiseMax(0.0)).norm();
    st.dual_residual = 0.0;
    st.objective = smooth0(st.x);
    if (observer) observer(iters, st.x, observer_ctx);
    return {st.x, st};
  }

  // lambda > 0: primal-dual iteration on the saddle function
  //   Phi(x, v) = smooth0(x) + lambda F(x) - lambda F(v)
  //               - 0.5 * omega * (x - v)' Q (x - v),
  // whose x-marginal is the enhanced objective (B'B = (omega/lambda) Q).
  SignalVector x;
  if (x0) {
    x = x0->cwiseMax(0.0);
  } else {
    // warm start from the lambda = 0 problem at a loose tolerance
    x = fista_qp(q, b, SignalVector::Zero(n),
                 std::min(cfg.tol * 10, 1e-3), cfg.max_iter, nullptr,
                 nullptr);
  }
  SignalVector v = x;

  const double tau = 0.99 / ((1.0 + cfg.omega) * lip);
  const double nu =
      cfg.omega > 0 ? 0.99 / (cfg.omega * lip) : 1.0;  // unused if omega = 0

  auto chain_F = [&](const SignalVector& u) {
    return eval_lop_penalized(u, cfg.beta).value;
  };
  auto phi_value = [&](const SignalVector& ux, const SignalVector& uv) {
    double val = smooth0(ux) + cfg.lambda * chain_F(ux);
    if (cfg.omega > 0) {
      const Eigen::VectorXd d = ux - uv;
      val -= cfg.lambda * chain_F(uv) + 0.5 * cfg.omega * d.dot(q * d);
    }
    return val;
  };

  SignalVector sigma_x = SignalVector::Zero(n);
  SignalVector sigma_v = SignalVector::Zero(n);
  int it = 0;
  bool converged = false;
  for (it = 1; it <= cfg.max_iter; ++it) {
    // x-step: forward-backward on x with the nonnegativity projection folded
    // into the prox (valid because the chain prox is componentwise
    // nondecreasing in |input| and sign-preserving).
    Eigen::VectorXd grad = q * x - b;
    if (cfg.omega > 0) grad -= cfg.omega * (q * (x - v));
    Eigen::VectorXd z = (x - tau * grad).cwiseMax(0.0);
    ProxResult px = prox_lop(z, tau * cfg.lambda, cfg.beta);
    SignalVector x_new = px.x;
    sigma_x = px.sigma;

    // v-step (only meaningful when the concave coupling is present)
    SignalVector v_new = v;
    if (cfg.omega > 0) {
      Eigen::VectorXd v_in = v + nu * cfg.omega * (q * (x_new - v));
      ProxResult pv = prox_lop(v_in, nu * cfg.lambda, cfg.beta);
      v_new = pv.x;
      sigma_v = pv.sigma;
    }

    const double dx = (x_new - x).norm();
    const double dv = (v_new - v).norm();
    x = std::move(x_new);
    v = std::move(v_new);
    if (observer) observer(it, x, observer_ctx);
    if (dx <= cfg.tol * (1 + x.norm()) && dv <= cfg.tol * (1 + v.norm())) {
      converged = true;
      break;
    }
  }

  st.x = x;
  st.v = v;
  st.sigma_x = sigma_x;
  st.sigma_v = sigma_v;
  st.iterations = std::min(it, cfg.max_iter);
  st.converged = converged;
  st.primal_residual = 0.0;
  {
    Eigen::VectorXd grad = q * x - b;
    if (cfg.omega > 0) grad -= cfg.omega * (q * (x - v));
    Eigen::VectorXd z = (x - tau * grad).cwiseMax(0.0);
    SignalVector xp = prox_lop(z, tau * cfg.lambda, cfg.beta).x;
    st.primal_residual = (x - xp).norm();
  }
  st.dual_residual = 0.0;
  if (cfg.omega > 0) {
    Eigen::VectorXd v_in = v + nu * cfg.omega * (q * (x - v));
    SignalVector vp = prox_lop(v_in, nu * cfg.lambda, cfg.beta).x;
    st.dual_residual = (v - vp).norm();
  }
  st.objective = phi_value(x, v);
  return {st.x, st};
}

}  // namespace lop
