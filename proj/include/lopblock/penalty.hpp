#pragma once
// Least-order-preserving l2/l1 penalty: evaluation, block oracle, proximal
// operator.
//
// The penalty of a signal x in R^N is the optimal value of a convex program
// over a nonnegative latent scale vector sigma:
//
//   psi_alpha(x) = min_{sigma >= 0, ||D sigma||_1 <= alpha}  sum_n phi(x_n, sigma_n)
//
// with phi(x,s) = x^2/(2s) + s/2 (perspective of the square; 0 at (0,0),
// +inf when s = 0 < |x| or s < 0) and D the (N-1)xN first-difference matrix.
// The total-variation budget alpha interpolates between sqrt(N)*||x||_2
// (alpha = 0, one shared scale) and ||x||_1 (alpha large, per-entry scales).
// The Lagrangian (penalized) form replaces the budget with + beta*||D sigma||_1.
//
// For fixed x both forms are chain-structured convex problems in sigma and are
// solved here exactly by one message-passing sweep (see penalty.cpp); no
// iterative descent is involved.

#include <Eigen/Dense>
#include <utility>
#include <vector>

namespace lop {

using SignalVector = Eigen::VectorXd;
using LatentVector = Eigen::VectorXd;

// Contiguous index block [start, end], 0-based inclusive.
struct Block {
  int start = 0;
  int end = 0;
  int size() const { return end - start + 1; }
};

// Ordered list of disjoint contiguous blocks.
struct BlockPartition {
  std::vector<Block> blocks;

  int count() const { return static_cast<int>(blocks.size()); }
  // Throws std::invalid_argument unless the blocks are nonempty, sorted,
  // disjoint, and exactly cover {0, ..., n-1}.
  void validate_cover(int n) const;
  // Same checks except the blocks may leave gaps inside {0, ..., n-1}.
  void validate_within(int n) const;
};

// Extended-real node cost; returns +inf outside the domain.
double phi(double x, double sigma);

// Mixed l2/l1 norm sum_k sqrt(|B_k|) * ||x_{B_k}||_2 for a known partition
// (blocks must cover the whole index range).
double mixed_l21(const SignalVector& x, const BlockPartition& partition);

struct PenaltyEvaluation {
  double value = 0.0;        // optimal objective (TV term included in the
                             // penalized form, excluded in the budget form)
  LatentVector sigma_hat;    // argmin scale vector
  double beta = 0.0;         // TV weight in effect (multiplier for budget form)
  double alpha = 0.0;        // ||D sigma_hat||_1 of the reported minimizer
  int iterations = 0;
  double residual = 0.0;     // certified optimality gap estimate
  bool converged = true;
};

// Penalized form: min_{sigma>=0} sum_n phi(x_n,sigma_n) + beta*||D sigma||_1.
// Solved exactly in one pass; `value` includes the TV term, `residual` is 0.
// Requires beta >= 0 and finite entries.
PenaltyEvaluation eval_lop_penalized(const SignalVector& x, double beta,
                                     double tol = 1e-10, int max_iter = 64);

// Budget form psi_alpha(x); beta reports the multiplier found by bisection,
// value excludes the TV term, residual is a certified duality gap.
// Requires alpha >= 0.
PenaltyEvaluation eval_lop_constrained(const SignalVector& x, double alpha,
                                       double tol = 1e-9);

// Exact minimum of sum_k ||x_{B_k}||_2 over all partitions of {0..N-1} into
// at most K contiguous blocks, by dynamic programming. Ties prefer fewer
// blocks, then lexicographically earliest split points.
std::pair<double, BlockPartition> nonconvex_oracle(const SignalVector& x,
                                                   int K);

struct ProxResult {
  SignalVector x;        // prox point
  LatentVector sigma;    // minimizing scale vector
  int iterations = 0;
  bool converged = true;
};

// Joint proximal step: minimize over (x, sigma >= 0)
//   (1/(2*gamma))*||x - x_bar||^2 + sum_n phi(x_n,sigma_n) + beta*||D sigma||_1.
// x is eliminated in closed form (x_n = x_bar_n*sigma_n/(sigma_n+gamma)) and
// the remaining sigma chain is solved exactly. Requires gamma > 0, beta >= 0.
ProxResult prox_lop(const SignalVector& x_bar, double gamma, double beta,
                    double tol = 1e-10, int max_iter = 64);

}  // namespace lop
