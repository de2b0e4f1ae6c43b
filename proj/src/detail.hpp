#pragma once
// Internal numeric helpers shared by the solver translation units.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

namespace lop::detail {

// Largest eigenvalue of a symmetric PSD matrix by power iteration.
inline double sym_op_norm(const Eigen::MatrixXd& m) {
  const int n = static_cast<int>(m.rows());
  if (n == 0) return 0.0;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(n);
  v.normalize();
  double lam = 0;
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd w = m * v;
    const double nw = w.norm();
    if (nw <= 0) return 0.0;
    w /= nw;
    const double lam_new = w.dot(m * w);
    if (it > 5 &&
        std::abs(lam_new - lam) <= 1e-12 * std::max(1.0, std::abs(lam_new))) {
      lam = lam_new;
      break;
    }
    lam = lam_new;
    v = std::move(w);
  }
  return std::max(lam, 0.0);
}

}  // namespace lop::detail
