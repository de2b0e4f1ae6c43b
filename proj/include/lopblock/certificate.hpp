#pragma once
// Closed-form optimality certificates for the latent-scale chain problem.
//
// When the penalized minimizer's scale vector sigma_hat is piecewise constant
// on a candidate block partition of supp(x), the penalty value collapses to a
// weighted mixed l2/l1 norm  sum_k w_k * ||x_{B_k}||_2.  The certificate
// carries the candidate partition, the implied per-block scale levels and
// weights, and the data needed to check sufficient optimality conditions:
// a bound on the TV weight, pairwise-distinct levels, and an infinity-norm
// stationarity test involving the pseudo-inverse of a sub-matrix of the
// first-difference operator.

#include <Eigen/Dense>

#include "lopblock/penalty.hpp"

namespace lop {

struct Certificate {
  BlockPartition partition;    // blocks over supp(x), 0-based inclusive
  LatentVector sigma_hat;      // length-N scale vector (0 off support)
  Eigen::VectorXd eta_hat;     // per-block TV sign aggregation, |.| <= 2
  std::vector<int> I_hat;      // active difference rows (0-based; row i
                               // couples entries i and i+1)
  Eigen::VectorXd varsigma;    // per-block scale levels
  Eigen::VectorXd weights;     // per-block weights w_k
  double beta = 0.0;           // TV weight the certificate was built for
};

// Build a certificate for signal x and a candidate partition of its support.
// The scale levels are varsigma_k = ||x_{B_k}|| / sqrt(|B_k| + 2*beta*eta_k)
// where eta depends on the sign pattern of D*sigma_hat; the construction
// seeds with the beta = 0 levels and iterates until the sign pattern is
// stable (throws std::runtime_error if it oscillates or a level's radicand
// becomes nonpositive). Blocks must be nonempty, disjoint, sorted, and cover
// exactly the nonzero entries of x.
Certificate construct_certificate(const SignalVector& x,
                                  const BlockPartition& partition, double beta);

struct VerificationReport {
  bool beta_bound_ok = false;        // beta <= 1/4
  bool distinct_levels_ok = false;   // consecutive levels differ (rel 1e-9)
  bool infnorm_condition_ok = false; // stationarity test below
  double lhs_value = 0.0;            // max-norm of the stationarity residual
  double rhs_value = 0.0;            // beta / pinv_inf_norm(D restricted to
                                     // inactive rows / support columns)
  double certified_value = 0.0;      // sum_k w_k*||x_{B_k}|| (NaN unless all
                                     // conditions hold)
  double numeric_value = 0.0;        // independently computed penalty value
                                     // sum_n phi(x_n, sigma_n) at the exact
                                     // penalized minimizer (NaN unless all
                                     // conditions hold)
  double gap = 0.0;                  // |certified_value - numeric_value|
};

// Evaluate the sufficient conditions for certificate optimality and, when
// they all hold, cross-check the closed-form value against the chain solver.
VerificationReport verify_conditions(const Certificate& cert,
                                     const SignalVector& x);

// Closed-form value sum_k w_k * ||x_{B_k}||_2 implied by the certificate.
double certified_value(const Certificate& cert, const SignalVector& x);

// Infinity-norm (max absolute row sum) of the Moore-Penrose pseudo-inverse,
// via SVD with singular values below 1e-10 * sigma_max treated as zero.
double pinv_inf_norm(const Eigen::MatrixXd& m);

}  // namespace lop
