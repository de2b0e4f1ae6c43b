#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "lopblock/penalty.hpp"
#include "oracles.hpp"

using Eigen::VectorXd;
using lop::Block;
using lop::BlockPartition;

namespace {

VectorXd vec(std::initializer_list<double> v) {
  VectorXd out(static_cast<long>(v.size()));
  int i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

VectorXd random_vec(int n, std::mt19937_64& rng, double scale = 3.0) {
  std::normal_distribution<double> gauss(0.0, scale);
  VectorXd x(n);
  for (int i = 0; i < n; ++i) x[i] = gauss(rng);
  return x;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST_CASE("phi: domain, values, lower bound") {
  CHECK(lop::phi(0, 0) == 0.0);
  CHECK(lop::phi(1, 0) == kInf);
  CHECK(lop::phi(-2, 0) == kInf);
  CHECK(lop::phi(1, -1) == kInf);
  CHECK(lop::phi(0, -0.5) == kInf);
  CHECK(lop::phi(3, 3) == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(lop::phi(0, 2) == doctest::Approx(1.0));

  // phi(x, s) >= |x| with equality exactly at s = |x| (AM-GM).
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(0.1, 10.0);
  for (int i = 0; i < 200; ++i) {
    double x = unif(rng) * (i % 2 ? 1 : -1);
    double s = unif(rng);
    CHECK(lop::phi(x, s) >= std::abs(x) - 1e-12);
    CHECK(lop::phi(x, std::abs(x)) == doctest::Approx(std::abs(x)));
  }

  // joint midpoint convexity on the domain
  for (int i = 0; i < 200; ++i) {
    double x1 = unif(rng), s1 = unif(rng), x2 = unif(rng), s2 = unif(rng);
    double mid = lop::phi(0.5 * (x1 + x2), 0.5 * (s1 + s2));
    CHECK(mid <= 0.5 * lop::phi(x1, s1) + 0.5 * lop::phi(x2, s2) + 1e-12);
  }
}

TEST_CASE("mixed_l21: frozen examples and degenerate partitions") {
  BlockPartition one{{Block{0, 1}}};
  CHECK(lop::mixed_l21(vec({3, 4}), one) ==
        doctest::Approx(5.0 * std::sqrt(2.0)).epsilon(1e-14));

  BlockPartition two{{Block{0, 1}, Block{2, 3}}};
  CHECK(lop::mixed_l21(vec({5, 5, 0.1, 0.1}), two) ==
        doctest::Approx(10.2).epsilon(1e-14));

  std::mt19937_64 rng(5);
  VectorXd x = random_vec(6, rng);
  BlockPartition singletons;
  for (int i = 0; i < 6; ++i) singletons.blocks.push_back(Block{i, i});
  CHECK(lop::mixed_l21(x, singletons) ==
        doctest::Approx(x.cwiseAbs().sum()).epsilon(1e-12));
  BlockPartition full{{Block{0, 5}}};
  CHECK(lop::mixed_l21(x, full) ==
        doctest::Approx(std::sqrt(6.0) * x.norm()).epsilon(1e-12));
}

TEST_CASE("mixed_l21: partition validation") {
  VectorXd x = vec({1, 2, 3});
  CHECK_THROWS_AS(lop::mixed_l21(x, BlockPartition{{Block{0, 1}}}),
                  std::invalid_argument);  // gap at the end
  CHECK_THROWS_AS(
      lop::mixed_l21(x, BlockPartition{{Block{0, 1}, Block{1, 2}}}),
      std::invalid_argument);  // overlap
  CHECK_THROWS_AS(
      lop::mixed_l21(x, BlockPartition{{Block{0, 1}, Block{2, 3}}}),
      std::invalid_argument);  // out of range
  CHECK_THROWS_AS(lop::mixed_l21(x, BlockPartition{{Block{2, 1}}}),
                  std::invalid_argument);  // empty block
  CHECK_THROWS_AS(
      lop::mixed_l21(x, BlockPartition{{Block{1, 2}, Block{0, 0}}}),
      std::invalid_argument);  // unsorted
}

TEST_CASE("eval_lop_penalized: constant vectors have flat scales") {
  for (double beta : {0.0, 0.05, 0.25, 1.0, 10.0}) {
    auto pe = lop::eval_lop_penalized(vec({1, 1, 1, 1}), beta);
    CHECK(pe.value == doctest::Approx(4.0).epsilon(1e-13));
    CHECK(pe.alpha == doctest::Approx(0.0).epsilon(1e-13));
    for (int i = 0; i < 4; ++i)
      CHECK(pe.sigma_hat[i] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(pe.converged);
  }
}

TEST_CASE("eval_lop_penalized: beta = 0 separates into absolute values") {
  std::mt19937_64 rng(21);
  for (int rep = 0; rep < 30; ++rep) {
    VectorXd x = random_vec(9, rng);
    if (rep % 4 == 0) x[rep % 9] = 0.0;  // include exact zeros
    auto pe = lop::eval_lop_penalized(x, 0.0);
    CHECK(pe.value == doctest::Approx(x.cwiseAbs().sum()).epsilon(1e-12));
    for (int i = 0; i < x.size(); ++i)
      CHECK(pe.sigma_hat[i] == doctest::Approx(std::abs(x[i])).epsilon(1e-12));
  }
}

TEST_CASE("eval_lop_penalized: huge beta reaches the flat-scale extreme") {
  std::mt19937_64 rng(22);
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd x = random_vec(7, rng);
    auto pe = lop::eval_lop_penalized(x, 1e7);
    CHECK(pe.value ==
          doctest::Approx(std::sqrt(7.0) * x.norm()).epsilon(1e-9));
    CHECK(pe.alpha <= 1e-9 * x.norm());
  }
}

TEST_CASE("eval_lop_penalized: frozen two-block instance") {
  // x = [5, 5, 0.1, 0.1], beta = 0.1: the minimizer has two scale levels
  //   5/sqrt(1.1) and 0.1/sqrt(0.9),
  // giving value 10.677825141311617 (TV term included).
  auto pe = lop::eval_lop_penalized(vec({5, 5, 0.1, 0.1}), 0.1);
  CHECK(pe.value == doctest::Approx(10.677825141311617).epsilon(1e-12));
  CHECK(pe.sigma_hat[0] ==
        doctest::Approx(4.767312946227961).epsilon(1e-12));
  CHECK(pe.sigma_hat[1] == doctest::Approx(pe.sigma_hat[0]).epsilon(1e-12));
  CHECK(pe.sigma_hat[2] ==
        doctest::Approx(0.10540925533894598).epsilon(1e-12));
  CHECK(pe.sigma_hat[3] == doctest::Approx(pe.sigma_hat[2]).epsilon(1e-12));
  CHECK(pe.alpha ==
        doctest::Approx(4.767312946227961 - 0.10540925533894598)
            .epsilon(1e-12));
  // independent confirmation by dense grid refinement
  double gv = oracle::grid_min_penalized(vec({5, 5, 0.1, 0.1}), 0.1);
  CHECK(pe.value == doctest::Approx(gv).epsilon(1e-4));
  CHECK(pe.value <= gv + 1e-8);  // solver is exact, grid is an upper bound
}

TEST_CASE("eval_lop_penalized: matches grid oracle on random small instances") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 25; ++rep) {
    int n = 2 + rep % 3;  // 2..4
    VectorXd x = random_vec(n, rng, 2.0);
    if (rep % 5 == 0) x[rep % n] = 0.0;
    for (double beta : {0.05, 0.2, 0.5}) {
      auto pe = lop::eval_lop_penalized(x, beta);
      double gv = oracle::grid_min_penalized(x, beta);
      CHECK(pe.value <= gv + 1e-8);                   // never above the oracle
      CHECK(gv - pe.value <= 2e-4 * (1 + std::abs(gv)));  // and not below it
      // objective evaluated at the reported minimizer reproduces the value
      CHECK(oracle::chain_objective(x, pe.sigma_hat, beta) ==
            doctest::Approx(pe.value).epsilon(1e-11));
    }
  }
}

TEST_CASE("eval_lop_penalized: reported minimizer survives perturbation") {
  std::mt19937_64 rng(41);
  std::normal_distribution<double> gauss;
  for (int rep = 0; rep < 10; ++rep) {
    VectorXd x = random_vec(12, rng);
    double beta = 0.15;
    auto pe = lop::eval_lop_penalized(x, beta);
    for (int trial = 0; trial < 200; ++trial) {
      VectorXd d(12);
      for (int i = 0; i < 12; ++i) d[i] = gauss(rng);
      double eps = (trial % 2) ? 1e-3 : 1e-1;
      VectorXd s = (pe.sigma_hat + eps * d).cwiseMax(0.0);
      CHECK(oracle::chain_objective(x, s, beta) >= pe.value - 1e-10);
    }
  }
}

TEST_CASE("eval_lop_penalized: scaling and input validation") {
  std::mt19937_64 rng(51);
  VectorXd x = random_vec(8, rng);
  for (double c : {2.0, -3.0, 0.25}) {
    auto a = lop::eval_lop_penalized(c * x, 0.2);
    auto b = lop::eval_lop_penalized(x, 0.2);
    CHECK(a.value == doctest::Approx(std::abs(c) * b.value).epsilon(1e-11));
  }
  CHECK_THROWS_AS(lop::eval_lop_penalized(x, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(lop::eval_lop_penalized(VectorXd(), 0.1),
                  std::invalid_argument);
  VectorXd bad = x;
  bad[2] = std::nan("");
  CHECK_THROWS_AS(lop::eval_lop_penalized(bad, 0.1), std::invalid_argument);
}

TEST_CASE("eval_lop_penalized: zero vector") {
  auto pe = lop::eval_lop_penalized(VectorXd::Zero(5), 0.3);
  CHECK(pe.value == 0.0);
  CHECK(pe.sigma_hat.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("eval_lop_constrained: extremes") {
  std::mt19937_64 rng(61);
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd x = random_vec(10, rng);
    auto a0 = lop::eval_lop_constrained(x, 0.0);
    CHECK(a0.value ==
          doctest::Approx(std::sqrt(10.0) * x.norm()).epsilon(1e-9));
    for (int i = 0; i < 10; ++i)
      CHECK(a0.sigma_hat[i] ==
            doctest::Approx(x.norm() / std::sqrt(10.0)).epsilon(1e-9));

    // budget large enough to afford sigma = |x| exactly
    VectorXd ax = x.cwiseAbs();
    double alpha0 = 0;
    for (int i = 0; i + 1 < 10; ++i) alpha0 += std::abs(ax[i + 1] - ax[i]);
    auto al = lop::eval_lop_constrained(x, alpha0);
    CHECK(al.value == doctest::Approx(ax.sum()).epsilon(1e-10));
    auto am = lop::eval_lop_constrained(x, alpha0 * 2);
    CHECK(am.value == doctest::Approx(ax.sum()).epsilon(1e-10));
    CHECK(am.beta == 0.0);
  }
}

TEST_CASE("eval_lop_constrained: frozen example and budget activity") {
  auto pe = lop::eval_lop_constrained(vec({5, 5, 0.1, 0.1}), 4.9);
  CHECK(pe.value == doctest::Approx(10.2).epsilon(1e-10));

  // interior budget: constraint active, value strictly between the extremes
  auto mid = lop::eval_lop_constrained(vec({5, 5, 0.1, 0.1}), 2.0);
  CHECK(mid.value > 10.2 + 1e-6);
  CHECK(mid.value < 2.0 * std::sqrt(50.02) - 1e-6);
  CHECK(std::abs(mid.alpha - 2.0) <= 1e-6 * (1 + 2.0));
  CHECK(mid.residual <= 1e-6 * (1 + mid.value));
}

TEST_CASE("eval_lop_constrained: sandwich and monotonicity") {
  std::mt19937_64 rng(71);
  for (int rep = 0; rep < 30; ++rep) {
    VectorXd x = random_vec(8, rng);
    double l1 = x.cwiseAbs().sum(), l2n = std::sqrt(8.0) * x.norm();
    double prev = kInf;
    for (int g = 0; g < 10; ++g) {
      double alpha = 0.6 * g;
      auto pe = lop::eval_lop_constrained(x, alpha);
      CHECK(pe.value >= l1 - 1e-8 * (1 + l1));
      CHECK(pe.value <= l2n + 1e-8 * (1 + l2n));
      CHECK(pe.value <= prev + 1e-8 * (1 + std::abs(prev)));
      prev = pe.value;
    }
  }
}

TEST_CASE("eval_lop_constrained: scaling identity") {
  std::mt19937_64 rng(81);
  VectorXd x = random_vec(7, rng);
  double alpha = 1.7;
  auto base = lop::eval_lop_constrained(x, alpha);
  for (double c : {2.0, -0.5, 10.0}) {
    auto scaled = lop::eval_lop_constrained(c * x, std::abs(c) * alpha);
    CHECK(scaled.value ==
          doctest::Approx(std::abs(c) * base.value).epsilon(1e-8));
  }
}

TEST_CASE("eval_lop_constrained: Lagrangian consistency with penalized form") {
  std::mt19937_64 rng(91);
  VectorXd x = random_vec(9, rng);
  for (double beta : {0.05, 0.15, 0.3}) {
    auto pen = lop::eval_lop_penalized(x, beta);
    auto con = lop::eval_lop_constrained(x, pen.alpha);
    CHECK(con.value ==
          doctest::Approx(pen.value - beta * pen.alpha).epsilon(1e-7));
  }
  auto z = lop::eval_lop_constrained(VectorXd::Zero(4), 1.0);
  CHECK(z.value == 0.0);
  CHECK_THROWS_AS(lop::eval_lop_constrained(x, -1.0), std::invalid_argument);
}

TEST_CASE("nonconvex_oracle: frozen examples") {
  auto [v1, p1] = lop::nonconvex_oracle(vec({3, 4}), 1);
  CHECK(v1 == doctest::Approx(5.0 * std::sqrt(2.0)).epsilon(1e-14));
  REQUIRE(p1.count() == 1);
  CHECK(p1.blocks[0].start == 0);
  CHECK(p1.blocks[0].end == 1);

  auto [v2, p2] = lop::nonconvex_oracle(vec({5, 5, 0.1, 0.1}), 2);
  CHECK(v2 == doctest::Approx(10.2).epsilon(1e-14));
  REQUIRE(p2.count() == 2);
  CHECK(p2.blocks[0].start == 0);
  CHECK(p2.blocks[0].end == 1);
  CHECK(p2.blocks[1].start == 2);
  CHECK(p2.blocks[1].end == 3);

  // all partitions of a constant vector tie; fewer blocks wins
  auto [v3, p3] = lop::nonconvex_oracle(vec({1, 1, 1}), 3);
  CHECK(v3 == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(p3.count() == 1);

  CHECK_THROWS_AS(lop::nonconvex_oracle(vec({1, 2}), 0),
                  std::invalid_argument);
  CHECK_THROWS_AS(lop::nonconvex_oracle(vec({1, 2}), 3),
                  std::invalid_argument);
}

TEST_CASE("nonconvex_oracle: exact match with exhaustive enumeration") {
  std::mt19937_64 rng(101);
  for (int rep = 0; rep < 200; ++rep) {
    int n = 2 + rep % 9;  // 2..10
    VectorXd x = random_vec(n, rng);
    if (rep % 7 == 0) x[rep % n] = 0.0;
    for (int k = 1; k <= n; ++k) {
      auto [v, p] = lop::nonconvex_oracle(x, k);
      double ref = oracle::enumerate_partition_min(x, k);
      CHECK(std::abs(v - ref) <= 1e-12 * (1 + std::abs(ref)));
      CHECK(p.count() <= k);
      CHECK(lop::mixed_l21(x, p) == doctest::Approx(v).epsilon(1e-12));
    }
  }
}

TEST_CASE("nonconvex_oracle: monotone in K and matches penalty extremes") {
  std::mt19937_64 rng(111);
  VectorXd x = random_vec(8, rng);
  double prev = kInf;
  for (int k = 1; k <= 8; ++k) {
    auto [v, p] = lop::nonconvex_oracle(x, k);
    CHECK(v <= prev + 1e-12);
    prev = v;
  }
  auto [v1, p1] = lop::nonconvex_oracle(x, 1);
  CHECK(v1 == doctest::Approx(std::sqrt(8.0) * x.norm()).epsilon(1e-12));
  auto [vn, pn] = lop::nonconvex_oracle(x, 8);
  CHECK(vn <= x.cwiseAbs().sum() + 1e-12);
}

TEST_CASE("prox_lop: soft threshold at beta = 0") {
  auto r = lop::prox_lop(vec({2}), 1.0, 0.0);
  CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-12));

  std::mt19937_64 rng(121);
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd xb = random_vec(7, rng);
    double gamma = 0.3 + 0.2 * rep;
    auto p = lop::prox_lop(xb, gamma, 0.0);
    for (int i = 0; i < 7; ++i) {
      double st = std::copysign(std::max(std::abs(xb[i]) - gamma, 0.0), xb[i]);
      CHECK(p.x[i] == doctest::Approx(st).epsilon(1e-10));
    }
  }
}

TEST_CASE("prox_lop: objective matches independent grid/golden oracle") {
  std::mt19937_64 rng(131);
  auto prox_objective = [](const VectorXd& xb, const VectorXd& x,
                           const VectorXd& s, double gamma, double beta) {
    double v = (x - xb).squaredNorm() / (2 * gamma);
    for (int i = 0; i < x.size(); ++i) v += oracle::phi_ref(x[i], s[i]);
    for (int i = 0; i + 1 < x.size(); ++i)
      v += beta * std::abs(s[i + 1] - s[i]);
    return v;
  };
  for (int rep = 0; rep < 12; ++rep) {
    int n = 2 + rep % 2;  // 2..3 (oracle is exponential in n)
    VectorXd xb = random_vec(n, rng, 2.0);
    double gamma = 0.4 + 0.3 * (rep % 3);
    double beta = (rep % 2) ? 0.25 : 0.05;
    auto p = lop::prox_lop(xb, gamma, beta);
    double impl = prox_objective(xb, p.x, p.sigma, gamma, beta);
    double ref = oracle::grid_min_prox(xb, gamma, beta);
    CHECK(impl <= ref + 1e-7);
    CHECK(ref - impl <= 2e-3 * (1 + std::abs(ref)));
  }
}

TEST_CASE("prox_lop: shrinkage, sign preservation, nonexpansiveness") {
  std::mt19937_64 rng(141);
  for (int rep = 0; rep < 20; ++rep) {
    VectorXd a = random_vec(10, rng), b = random_vec(10, rng);
    double gamma = 0.8, beta = 0.2;
    auto pa = lop::prox_lop(a, gamma, beta);
    auto pb = lop::prox_lop(b, gamma, beta);
    for (int i = 0; i < 10; ++i) {
      CHECK(std::abs(pa.x[i]) <= std::abs(a[i]) + 1e-12);
      CHECK(pa.x[i] * a[i] >= -1e-12);  // no sign flips
      CHECK(pa.sigma[i] >= 0.0);
    }
    CHECK((pa.x - pb.x).norm() <= (a - b).norm() + 1e-9);
  }
}

TEST_CASE("prox_lop: limits in gamma and validation") {
  std::mt19937_64 rng(151);
  VectorXd xb = random_vec(6, rng);
  auto tiny = lop::prox_lop(xb, 1e-9, 0.3);
  CHECK((tiny.x - xb).cwiseAbs().maxCoeff() <= 1e-5);
  auto huge = lop::prox_lop(xb, 1e9, 0.3);
  CHECK(huge.x.cwiseAbs().maxCoeff() <= 1e-5);
  CHECK_THROWS_AS(lop::prox_lop(xb, 0.0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(lop::prox_lop(xb, 1.0, -0.2), std::invalid_argument);
}

TEST_CASE("prox_lop: latent scales are consistent with the prox point") {
  // at the joint minimizer, sigma must also minimize the chain objective of
  // the returned x (cross-check against the evaluation solver)
  std::mt19937_64 rng(161);
  for (int rep = 0; rep < 10; ++rep) {
    VectorXd xb = random_vec(8, rng);
    auto p = lop::prox_lop(xb, 0.7, 0.15);
    auto pe = lop::eval_lop_penalized(p.x, 0.15);
    double chain_at_sigma = oracle::chain_objective(p.x, p.sigma, 0.15);
    CHECK(chain_at_sigma == doctest::Approx(pe.value).epsilon(1e-9));
  }
}
