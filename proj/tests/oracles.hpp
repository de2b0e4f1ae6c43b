#pragma once
// Independent reference implementations used only by tests. Each oracle
// computes the same quantity as a library routine by a method with different
// failure modes (exhaustive enumeration, dense grid refinement, multi-start
// first-order descent, or a second decomposition), so agreement is evidence
// of correctness rather than repetition.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "lopblock/penalty.hpp"

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kInf = std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Scalar golden-section minimization on [lo, hi] (unimodal objective).
inline double golden_min(const std::function<double(double)>& f, double lo,
                         double hi, int iters = 80) {
  const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - gr * (b - a), d = a + gr * (b - a);
  double fc = f(c), fd = f(d);
  for (int i = 0; i < iters; ++i) {
    if (fc < fd) {
      b = d; d = c; fd = fc;
      c = b - gr * (b - a); fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + gr * (b - a); fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

// ---------------------------------------------------------------------------
// Node cost of the latent chain objective, +inf outside its domain.
inline double phi_ref(double x, double s) {
  if (s > 0) return x * x / (2 * s) + s / 2;
  if (s == 0 && x == 0) return 0.0;
  return kInf;
}

// Penalized chain objective at a full latent vector.
inline double chain_objective(const VectorXd& x, const VectorXd& s,
                              double beta) {
  double v = 0;
  for (int n = 0; n < x.size(); ++n) v += phi_ref(x[n], s[n]);
  for (int n = 0; n + 1 < s.size(); ++n) v += beta * std::abs(s[n + 1] - s[n]);
  return v;
}

// Dense tensor-grid minimization of the penalized chain objective over
// sigma >= 0 with iterative zooming. Exponential in N; keep N <= 4.
// Returns the best objective value found (accurate to ~1e-5 relative).
inline double grid_min_penalized(const VectorXd& x, double beta,
                                 int points = 13, int zooms = 9) {
  const int n = static_cast<int>(x.size());
  double span = std::max(1.0, 1.5 * x.cwiseAbs().maxCoeff());
  VectorXd lo = VectorXd::Zero(n), hi = VectorXd::Constant(n, span);
  VectorXd best = VectorXd::Constant(n, span / 2);
  double best_val = chain_objective(x, best, beta);
  std::vector<int> idx(n);
  for (int zoom = 0; zoom < zooms; ++zoom) {
    std::fill(idx.begin(), idx.end(), 0);
    VectorXd s(n);
    while (true) {
      for (int k = 0; k < n; ++k)
        s[k] = lo[k] + (hi[k] - lo[k]) * idx[k] / (points - 1);
      double v = chain_objective(x, s, beta);
      if (v < best_val) { best_val = v; best = s; }
      int k = 0;
      while (k < n && ++idx[k] == points) idx[k++] = 0;
      if (k == n) break;
    }
    for (int k = 0; k < n; ++k) {  // shrink the box around the incumbent
      double w = (hi[k] - lo[k]) * 0.22;
      lo[k] = std::max(0.0, best[k] - w);
      hi[k] = best[k] + w;
    }
  }
  return best_val;
}

// As above but returns the argmin as well.
inline std::pair<double, VectorXd> grid_argmin_penalized(const VectorXd& x,
                                                         double beta) {
  const int n = static_cast<int>(x.size());
  double span = std::max(1.0, 1.5 * x.cwiseAbs().maxCoeff());
  VectorXd lo = VectorXd::Zero(n), hi = VectorXd::Constant(n, span);
  VectorXd best = VectorXd::Constant(n, span / 2);
  double best_val = chain_objective(x, best, beta);
  const int points = 13;
  std::vector<int> idx(n);
  for (int zoom = 0; zoom < 9; ++zoom) {
    std::fill(idx.begin(), idx.end(), 0);
    VectorXd s(n);
    while (true) {
      for (int k = 0; k < n; ++k)
        s[k] = lo[k] + (hi[k] - lo[k]) * idx[k] / (points - 1);
      double v = chain_objective(x, s, beta);
      if (v < best_val) { best_val = v; best = s; }
      int k = 0;
      while (k < n && ++idx[k] == points) idx[k++] = 0;
      if (k == n) break;
    }
    for (int k = 0; k < n; ++k) {
      double w = (hi[k] - lo[k]) * 0.22;
      lo[k] = std::max(0.0, best[k] - w);
      hi[k] = best[k] + w;
    }
  }
  return {best_val, best};
}

// Joint prox objective oracle: for each sigma grid point the x-part is
// minimized per coordinate by golden section (no closed forms shared with
// the implementation). Keep N <= 3.
inline double grid_min_prox(const VectorXd& x_bar, double gamma, double beta,
                            int points = 11, int zooms = 8) {
  const int n = static_cast<int>(x_bar.size());
  auto inner = [&](const VectorXd& s) {
    double v = 0;
    for (int k = 0; k < n; ++k) {
      double xb = x_bar[k];
      if (s[k] == 0) {
        v += xb * xb / (2 * gamma);  // x forced to 0
      } else {
        auto fx = [&](double xx) {
          return (xx - xb) * (xx - xb) / (2 * gamma) + phi_ref(xx, s[k]);
        };
        double lo = std::min(0.0, xb) - 1.0, hi = std::max(0.0, xb) + 1.0;
        double xs = golden_min(fx, lo, hi);
        v += fx(xs);
      }
    }
    for (int k = 0; k + 1 < n; ++k) v += beta * std::abs(s[k + 1] - s[k]);
    return v;
  };
  double span = std::max(1.0, 1.5 * x_bar.cwiseAbs().maxCoeff());
  VectorXd lo = VectorXd::Zero(n), hi = VectorXd::Constant(n, span);
  VectorXd best = VectorXd::Constant(n, span / 2);
  double best_val = inner(best);
  std::vector<int> idx(n);
  for (int zoom = 0; zoom < zooms; ++zoom) {
    std::fill(idx.begin(), idx.end(), 0);
    VectorXd s(n);
    while (true) {
      for (int k = 0; k < n; ++k)
        s[k] = lo[k] + (hi[k] - lo[k]) * idx[k] / (points - 1);
      double v = inner(s);
      if (v < best_val) { best_val = v; best = s; }
      int k = 0;
      while (k < n && ++idx[k] == points) idx[k++] = 0;
      if (k == n) break;
    }
    for (int k = 0; k < n; ++k) {
      double w = (hi[k] - lo[k]) * 0.25;
      lo[k] = std::max(0.0, best[k] - w);
      hi[k] = best[k] + w;
    }
  }
  return best_val;
}

// ---------------------------------------------------------------------------
// Exhaustive minimum of sum_k sqrt(|B_k|) * ||x_{B_k}|| over all partitions
// into at most K contiguous blocks (2^(N-1) boundary bitmasks).
inline double enumerate_partition_min(const VectorXd& x, int kmax) {
  const int n = static_cast<int>(x.size());
  VectorXd prefix = VectorXd::Zero(n + 1);
  for (int i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i] * x[i];
  double best = kInf;
  const unsigned long masks = 1ul << (n - 1);
  for (unsigned long m = 0; m < masks; ++m) {
    if (__builtin_popcountl(m) + 1 > kmax) continue;
    double v = 0;
    int start = 0;
    for (int i = 0; i < n; ++i) {
      bool cut = (i == n - 1) || (m >> i & 1);
      if (cut) {
        double ss = prefix[i + 1] - prefix[start];
        v += std::sqrt(double(i - start + 1)) * std::sqrt(ss);
        start = i + 1;
      }
    }
    best = std::min(best, v);
  }
  return best;
}

// ---------------------------------------------------------------------------
// Multi-start accelerated projected gradient for min_{x>=0} 0.5||Ax-r||^2.
inline double nnls_objective_oracle(const MatrixXd& a, const VectorXd& r,
                                    int starts = 50, int iters = 4000,
                                    unsigned seed = 7) {
  MatrixXd ata = a.transpose() * a;
  VectorXd atr = a.transpose() * r;
  double lip = ata.selfadjointView<Eigen::Lower>()
                   .eigenvalues().cwiseAbs().maxCoeff();
  if (lip <= 0) lip = 1;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double best = kInf;
  auto obj = [&](const VectorXd& x) {
    return 0.5 * (a * x - r).squaredNorm();
  };
  for (int s = 0; s < starts; ++s) {
    VectorXd x(a.cols());
    if (s == 0) x.setZero();
    else for (int i = 0; i < x.size(); ++i) x[i] = 2.0 * unif(rng);
    VectorXd y = x, xp = x;
    double t = 1;
    for (int it = 0; it < iters; ++it) {
      VectorXd g = ata * y - atr;
      VectorXd xn = (y - g / lip).cwiseMax(0.0);
      double tn = (1 + std::sqrt(1 + 4 * t * t)) / 2;
      y = xn + ((t - 1) / tn) * (xn - xp);
      if (obj(xn) > obj(xp)) { y = xp; t = 1; xn = xp; }  // monotone restart
      else { xp = xn; t = tn; }
    }
    best = std::min(best, obj(xp));
  }
  return best;
}

// Active-set projected-Newton oracle for the strongly convex QP
// min_{x>=0} 0.5||Ax-r||^2 + (mu/2)(x-x_bar)^T P (x-x_bar).
inline VectorXd hybrid_qp_oracle(const MatrixXd& a, const VectorXd& r,
                                 const VectorXd& x_bar, const MatrixXd& p,
                                 double mu) {
  const int n = static_cast<int>(a.cols());
  MatrixXd h = a.transpose() * a + mu * p;
  VectorXd b = a.transpose() * r + mu * (p * x_bar);
  std::vector<bool> active(n, false);
  VectorXd x = VectorXd::Zero(n);
  for (int round = 0; round < 3 * n + 10; ++round) {
    std::vector<int> free_idx;
    for (int i = 0; i < n; ++i) if (!active[i]) free_idx.push_back(i);
    x.setZero();
    if (!free_idx.empty()) {
      MatrixXd hf(free_idx.size(), free_idx.size());
      VectorXd bf(free_idx.size());
      for (size_t i = 0; i < free_idx.size(); ++i) {
        bf[i] = b[free_idx[i]];
        for (size_t j = 0; j < free_idx.size(); ++j)
          hf(i, j) = h(free_idx[i], free_idx[j]);
      }
      VectorXd xf = hf.ldlt().solve(bf);
      for (size_t i = 0; i < free_idx.size(); ++i) x[free_idx[i]] = xf[i];
    }
    // repair: clamp negatives into the active set; release strictly
    // negative-gradient actives
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      if (!active[i] && x[i] < -1e-12) { active[i] = true; changed = true; }
    }
    if (!changed) {
      VectorXd g = h * x.cwiseMax(0.0) - b;
      for (int i = 0; i < n; ++i) {
        if (active[i] && g[i] < -1e-10) { active[i] = false; changed = true; }
      }
    }
    if (!changed) break;
  }
  return x.cwiseMax(0.0);
}

// Moore-Penrose pseudo-inverse via a different decomposition than the
// implementation (complete orthogonal decomposition vs SVD).
inline double pinv_inf_norm_oracle(const MatrixXd& m) {
  Eigen::CompleteOrthogonalDecomposition<MatrixXd> cod(m);
  MatrixXd pinv = cod.pseudoInverse();
  double best = 0;
  for (int i = 0; i < pinv.rows(); ++i)
    best = std::max(best, pinv.row(i).cwiseAbs().sum());
  return best;
}

// Multi-start projected-subgradient oracle (target-level / Polyak steps,
// geometrically shrinking target gap) for
//   min_{x >= 0} 0.5*||Ax - r||^2 + (mu/2)*(x - x_bar)' P (x - x_bar)
//              + lambda * chain_penalty_beta(x).
// The chain-penalty subgradient uses the minimizing scales: d/dx_n = x_n /
// sigma_n where sigma_n > 0, and 0 where x_n = 0 (the penalty is even in
// each coordinate, so 0 is a valid subgradient there).
inline double aps_subgradient_oracle(const MatrixXd& a, const VectorXd& r,
                                     const VectorXd& x_bar, const MatrixXd& p,
                                     double mu, double lambda, double beta,
                                     int starts, unsigned seed) {
  const int n = static_cast<int>(a.cols());
  auto objective = [&](const VectorXd& x) {
    const VectorXd d = x - x_bar;
    return 0.5 * (a * x - r).squaredNorm() + 0.5 * mu * d.dot(p * d) +
           lambda * lop::eval_lop_penalized(x, beta).value;
  };
  auto subgrad = [&](const VectorXd& x) {
    VectorXd g = a.transpose() * (a * x - r) + mu * (p * (x - x_bar));
    lop::PenaltyEvaluation pe = lop::eval_lop_penalized(x, beta);
    for (int i = 0; i < n; ++i)
      if (pe.sigma_hat[i] > 0) g[i] += lambda * x[i] / pe.sigma_hat[i];
    return g;
  };
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  double best = std::numeric_limits<double>::infinity();
  for (int s = 0; s < starts; ++s) {
    VectorXd x(n);
    if (s == 0) {
      x.setZero();
    } else {
      for (int i = 0; i < n; ++i) x[i] = std::abs(gauss(rng));
    }
    double f_rec = objective(x);
    double delta = 0.25 * (1.0 + std::abs(f_rec));
    for (int round = 0; round < 18; ++round) {
      for (int k = 0; k < 700; ++k) {
        const double f = objective(x);
        if (f < f_rec) f_rec = f;
        VectorXd g = subgrad(x);
        const double gg = g.squaredNorm();
        if (gg <= 1e-24) break;
        const double step = (f - (f_rec - delta)) / gg;
        x = (x - step * g).cwiseMax(0.0);
      }
      delta *= 0.5;
    }
    best = std::min(best, std::min(f_rec, objective(x)));
  }
  return best;
}

}  // namespace oracle
