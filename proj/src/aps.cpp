// Uniform-linear-array angular power spectrum model: ground-truth spectra,
// channel covariance synthesis/sampling, Toeplitz/PSD covariance shaping with
// a Halpern anchor, and the unfolding of a Hermitian Toeplitz covariance into
// a real linear observation system.

#include "lopblock/aps.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

namespace lop {

namespace {

constexpr std::complex<double> kI{0.0, 1.0};

ComplexMatrix hermitize(const ComplexMatrix& m) {
  return 0.5 * (m + m.adjoint());
}

void check_square(const ComplexMatrix& m, const char* name) {
  if (m.rows() != m.cols() || m.rows() == 0)
    throw std::invalid_argument(std::string(name) +
                                " must be square and nonempty");
  if (!m.allFinite())
    throw std::invalid_argument(std::string(name) + " has nonfinite entries");
}

// First Toeplitz column of a Hermitian matrix, unfolded into 2M-1 reals:
// [Re c_0 .. Re c_{M-1}; Im c_1 .. Im c_{M-1}].  All steps (hermitize,
// diagonal averaging, unfolding) are real-linear, so the unfolding of a sum
// is the sum of unfoldings.
Eigen::VectorXd unfold_first_column(const ComplexMatrix& m) {
  const ComplexMatrix t = project_toeplitz(m);
  const int mm = static_cast<int>(t.rows());
  Eigen::VectorXd out(2 * mm - 1);
  for (int i = 0; i < mm; ++i) out[i] = t(i, 0).real();
  for (int i = 1; i < mm; ++i) out[mm + i - 1] = t(i, 0).imag();
  return out;
}

}  // namespace

Eigen::VectorXd angular_grid(const ArrayConfig& cfg) {
  if (cfg.grid_size < 2)
    throw std::invalid_argument("grid needs at least two points");
  return Eigen::VectorXd::LinSpaced(cfg.grid_size, -M_PI / 2, M_PI / 2);
}

double antenna_gain(double theta, const ArrayConfig& cfg) {
  const double ratio = theta / cfg.theta_3db;
  const double g_db = -std::min(12.0 * ratio * ratio, cfg.sidelobe_floor_db);
  return std::pow(10.0, g_db / 20.0);
}

ComplexVector array_response(double theta, const ArrayConfig& cfg) {
  const int m = cfg.num_antennas;
  if (m < 1) throw std::invalid_argument("need at least one antenna");
  const double amp = antenna_gain(theta, cfg);
  const double phase = 2.0 * M_PI * cfg.spacing_wavelengths * std::sin(theta);
  ComplexVector a(m);
  for (int k = 0; k < m; ++k)
    a[k] = amp * std::exp(kI * (phase * k)) / std::sqrt(double(m));
  return a;
}

std::pair<SignalVector, ApsSpec> sample_aps(ApsPolicy policy,
                                            const ArrayConfig& cfg,
                                            std::mt19937_64& rng) {
  ApsSpec spec;
  const int q_max = policy == ApsPolicy::kTrue ? 2 : 5;
  std::uniform_int_distribution<int> q_dist(1, q_max);
  spec.num_clusters = q_dist(rng);

  std::uniform_real_distribution<double> unit(0.0, 1.0);
  spec.weights.resize(spec.num_clusters);
  double wsum = 0;
  for (double& w : spec.weights) {
    w = unit(rng);
    wsum += w;
  }
  if (wsum <= 0) wsum = 1;
  for (double& w : spec.weights) w /= wsum;

  const double center_lo = -2.0 * M_PI / 5.0;
  const double center_hi =
      policy == ApsPolicy::kTrue ? -M_PI / 5.0 : 2.0 * M_PI / 5.0;
  std::uniform_real_distribution<double> center_dist(center_lo, center_hi);
  spec.centers.resize(spec.num_clusters);
  for (double& c : spec.centers) c = center_dist(rng);

  std::uniform_real_distribution<double> width_dist(2.0 * M_PI / 180.0,
                                                    4.0 * M_PI / 180.0);
  spec.widths.resize(spec.num_clusters);
  for (double& w : spec.widths) w = width_dist(rng);

  const Eigen::VectorXd grid = angular_grid(cfg);
  SignalVector x = SignalVector::Zero(cfg.grid_size);
  for (int q = 0; q < spec.num_clusters; ++q) {
    const double a = spec.weights[q];
    const double mu = spec.centers[q];
    const double sd = spec.widths[q];
    const double norm = 1.0 / (sd * std::sqrt(2.0 * M_PI));
    for (int n = 0; n < cfg.grid_size; ++n) {
      const double d = (grid[n] - mu) / sd;
      x[n] += a * norm * std::exp(-0.5 * d * d);
    }
  }
  return {std::move(x), std::move(spec)};
}

ComplexMatrix true_covariance(const SignalVector& x_star,
                              const ArrayConfig& cfg) {
  if (x_star.size() != cfg.grid_size)
    throw std::invalid_argument("spectrum size does not match the grid");
  const int m = cfg.num_antennas;
  ComplexMatrix r = ComplexMatrix::Zero(m, m);
  const Eigen::VectorXd grid = angular_grid(cfg);
  for (int n = 0; n < cfg.grid_size; ++n) {
    if (x_star[n] == 0.0) continue;
    const ComplexVector a = array_response(grid[n], cfg);
    r.noalias() += x_star[n] * (a * a.adjoint());
  }
  return hermitize(r);
}

ComplexMatrix sample_channels(const ComplexMatrix& r, int num_samples,
                              double s2, std::mt19937_64& rng) {
  check_square(r, "R");
  if (num_samples < 1) throw std::invalid_argument("need at least one sample");
  if (!(s2 >= 0)) throw std::invalid_argument("noise variance must be >= 0");
  const int m = static_cast<int>(r.rows());

  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(hermitize(r));
  Eigen::VectorXd ev = eig.eigenvalues();
  const double ev_max = std::max(ev.cwiseAbs().maxCoeff(), 0.0);
  if (ev.minCoeff() < -1e-10 * std::max(ev_max, 1.0))
    throw std::invalid_argument("R is not positive semidefinite");
  for (int i = 0; i < ev.size(); ++i)
    ev[i] = std::sqrt(std::max(ev[i], 0.0));
  const ComplexMatrix root =
      eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().adjoint();

  std::normal_distribution<double> gauss(0.0, 1.0);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  ComplexMatrix z(m, num_samples);
  for (int t = 0; t < num_samples; ++t)
    for (int i = 0; i < m; ++i) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      z(i, t) = std::complex<double>(re, im) * inv_sqrt2;
    }
  ComplexMatrix h = root * z;
  if (s2 > 0) add_channel_noise(h, s2, rng);
  return h;
}

void add_channel_noise(ComplexMatrix& h, double s2, std::mt19937_64& rng) {
  if (!(s2 >= 0)) throw std::invalid_argument("noise variance must be >= 0");
  if (s2 == 0) return;
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double comp_sd = std::sqrt(s2 / 2.0);
  for (int t = 0; t < h.cols(); ++t)
    for (int i = 0; i < h.rows(); ++i) {
      const double re = gauss(rng);
      const double im = gauss(rng);
      h(i, t) += std::complex<double>(comp_sd * re, comp_sd * im);
    }
}

CovarianceEstimate estimate_covariance(const ComplexMatrix& samples, double s2,
                                       int halpern_iters) {
  if (samples.cols() < 1)
    throw std::invalid_argument("need at least one snapshot");
  if (halpern_iters < 1)
    throw std::invalid_argument("need at least one shaping iteration");
  const int m = static_cast<int>(samples.rows());
  const double t = static_cast<double>(samples.cols());
  ComplexMatrix raw = (samples * samples.adjoint()) / t;
  raw -= s2 * ComplexMatrix::Identity(m, m);
  CovarianceEstimate est;
  est.r_hat = halpern_project(raw, halpern_iters);
  est.num_samples = static_cast<int>(samples.cols());
  est.s2 = s2;
  est.halpern_iters = halpern_iters;
  return est;
}

ComplexMatrix project_toeplitz(const ComplexMatrix& m_in) {
  check_square(m_in, "input");
  const ComplexMatrix m = hermitize(m_in);
  const int n = static_cast<int>(m.rows());
  ComplexMatrix out(n, n);
  for (int d = 0; d < n; ++d) {  // d-th subdiagonal (and its conjugate)
    std::complex<double> avg = 0;
    for (int i = d; i < n; ++i) avg += m(i, i - d);
    avg /= static_cast<double>(n - d);
    for (int i = d; i < n; ++i) {
      out(i, i - d) = avg;
      out(i - d, i) = std::conj(avg);
    }
  }
  return out;
}

ComplexMatrix project_psd(const ComplexMatrix& m_in) {
  check_square(m_in, "input");
  Eigen::SelfAdjointEigenSolver<ComplexMatrix> eig(hermitize(m_in));
  Eigen::VectorXd ev = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * ev.asDiagonal() * eig.eigenvectors().adjoint();
}

ComplexMatrix halpern_project(const ComplexMatrix& m_in, int iters) {
  check_square(m_in, "input");
  if (iters < 0) throw std::invalid_argument("iteration count must be >= 0");
  if (iters == 0) return m_in;
  const ComplexMatrix anchor = hermitize(m_in);
  ComplexMatrix x = anchor;
  for (int k = 0; k < iters; ++k) {
    const double w = 1.0 / (k + 2.0);
    x = w * anchor + (1.0 - w) * project_toeplitz(project_psd(x));
  }
  return x;
}

ObservationSystem extract_observation(const ComplexMatrix& r_hat,
                                      const ArrayConfig& cfg) {
  check_square(r_hat, "R_hat");
  if (r_hat.rows() != cfg.num_antennas)
    throw std::invalid_argument("covariance size does not match the array");
  ObservationSystem sys;
  sys.m_bar = 2 * cfg.num_antennas - 1;
  sys.r_hat = unfold_first_column(r_hat);
  sys.a.resize(sys.m_bar, cfg.grid_size);
  const Eigen::VectorXd grid = angular_grid(cfg);
  for (int n = 0; n < cfg.grid_size; ++n) {
    const ComplexVector a = array_response(grid[n], cfg);
    sys.a.col(n) = unfold_first_column(a * a.adjoint());
  }
  return sys;
}

DatasetStats dataset_stats(const std::vector<SignalVector>& samples) {
  const int l = static_cast<int>(samples.size());
  if (l < 2) throw std::invalid_argument("need at least two samples");
  const int n = static_cast<int>(samples[0].size());
  for (const SignalVector& s : samples)
    if (s.size() != n)
      throw std::invalid_argument("samples must all have the same size");

  DatasetStats st;
  st.count = l;
  st.x_bar = SignalVector::Zero(n);
  for (const SignalVector& s : samples) st.x_bar += s;
  st.x_bar /= static_cast<double>(l);

  st.c = Eigen::MatrixXd::Zero(n, n);
  for (const SignalVector& s : samples) {
    const Eigen::VectorXd d = s - st.x_bar;
    st.c.noalias() += d * d.transpose();
  }
  st.c /= static_cast<double>(l - 1);
  st.c = 0.5 * (st.c + st.c.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(st.c);
  const double norm_c = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), 0.0);
  st.delta = norm_c > 0 ? norm_c / 100.0 : 1e-12;
  Eigen::MatrixXd reg = st.c + st.delta * Eigen::MatrixXd::Identity(n, n);
  st.p = Eigen::LLT<Eigen::MatrixXd>(reg).solve(
      Eigen::MatrixXd::Identity(n, n));
  st.p = 0.5 * (st.p + st.p.transpose()).eval();
  return st;
}

double snr_noise_variance(const ComplexMatrix& channel_samples, double snr_db,
                          int normalizer_dim) {
  if (channel_samples.cols() < 1)
    throw std::invalid_argument("need at least one snapshot");
  if (normalizer_dim < 1)
    throw std::invalid_argument("normalizer dimension must be positive");
  const double mean_power =
      channel_samples.squaredNorm() / static_cast<double>(channel_samples.cols());
  return mean_power / (normalizer_dim * std::pow(10.0, snr_db / 10.0));
}

}  // namespace lop
