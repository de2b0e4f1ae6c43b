#pragma once
// Angular power spectrum (APS) model for a uniform linear array: ground-truth
// spectra, channel covariances, sample generation, covariance shaping, and
// extraction of the real-valued linear observation system used for recovery.
//
// The APS x* lives on a fixed angular grid of N points spanning [-pi/2, pi/2].
// The channel covariance is R = sum_n x*_n a(theta_n) a(theta_n)^H with a(.)
// the gain-weighted array response. Estimated covariances are shaped by
// alternating Toeplitz/PSD projections with a Halpern anchor, and the first
// Toeplitz column is unfolded into a real observation r_hat ~ A x*.

#include <Eigen/Dense>
#include <complex>
#include <random>
#include <vector>

#include "lopblock/penalty.hpp"

namespace lop {

using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

struct ArrayConfig {
  int num_antennas = 8;        // M
  int grid_size = 100;         // N (angular grid points)
  double carrier_hz = 2.1e9;   // informational; spacing is half-wavelength
  double spacing_wavelengths = 0.5;            // d / lambda_c
  double theta_3db = 65.0 * M_PI / 180.0;      // antenna pattern half-power
  double sidelobe_floor_db = 30.0;             // pattern attenuation cap
};

// Uniform inclusive grid of cfg.grid_size angles over [-pi/2, pi/2].
Eigen::VectorXd angular_grid(const ArrayConfig& cfg);

// Antenna amplitude gain 10^(g_dB/20), g_dB = -min{12*(theta/theta_3db)^2, cap}.
double antenna_gain(double theta, const ArrayConfig& cfg);

// Gain-weighted steering vector: entry m is
//   gain(theta) * exp(i*2*pi*spacing*m*sin(theta)) / sqrt(M).
ComplexVector array_response(double theta, const ArrayConfig& cfg);

// Ground-truth APS: mixture of Q Gaussian-shaped angular densities.
struct ApsSpec {
  int num_clusters = 0;
  std::vector<double> weights;     // normalized to sum to 1
  std::vector<double> centers;     // radians
  std::vector<double> widths;      // radians (std deviations)
};

enum class ApsPolicy {
  kTrue,     // Q ~ U{1,2}, centers in [-2pi/5, -pi/5]
  kDataset,  // Q ~ U{1,..,5}, centers in [-2pi/5, 2pi/5]
};

// Draw a random APS and evaluate its density on the grid.
std::pair<SignalVector, ApsSpec> sample_aps(ApsPolicy policy,
                                            const ArrayConfig& cfg,
                                            std::mt19937_64& rng);

// R = A_c diag(x_star) A_c^H (Hermitian PSD by construction).
ComplexMatrix true_covariance(const SignalVector& x_star,
                              const ArrayConfig& cfg);

// T i.i.d. channel snapshots h_t = R^{1/2} z_t + noise, z_t standard complex
// normal, noise entries CN(0, s2). Columns of the result are the snapshots.
// Draw order: all z entries column-major, then (if s2 > 0) all noise entries
// column-major, so a noiseless call followed by add_channel_noise matches.
ComplexMatrix sample_channels(const ComplexMatrix& r, int num_samples,
                              double s2, std::mt19937_64& rng);

// Add CN(0, s2) noise in place (same draw order as sample_channels).
void add_channel_noise(ComplexMatrix& h, double s2, std::mt19937_64& rng);

struct CovarianceEstimate {
  ComplexMatrix r_hat;
  int num_samples = 0;
  double s2 = 0.0;
  int halpern_iters = 0;
};

// Sample covariance minus the known noise floor, then Halpern-anchored
// alternating projections onto the Toeplitz and PSD cones.
CovarianceEstimate estimate_covariance(const ComplexMatrix& samples, double s2,
                                       int halpern_iters);

// Orthogonal projection of a Hermitian matrix onto Hermitian Toeplitz
// matrices (diagonal averaging).
ComplexMatrix project_toeplitz(const ComplexMatrix& m);

// Projection onto the PSD cone (eigenvalue clamping).
ComplexMatrix project_psd(const ComplexMatrix& m);

// Halpern iteration x_{k+1} = (1/(k+2)) x_0 + (1 - 1/(k+2)) P_T(P_+(x_k)),
// anchored at the (hermitized) input.
ComplexMatrix halpern_project(const ComplexMatrix& m_in, int iters);

struct ObservationSystem {
  Eigen::MatrixXd a;        // (2M-1) x N real observation matrix
  Eigen::VectorXd r_hat;    // stacked re/im of the first Toeplitz column
  int m_bar = 0;            // 2M - 1
};

// Toeplitz-average the estimate, take its first column c, and stack
// [Re c(0..M-1); Im c(1..M-1)].  Column n of A is the same unfolding of
// a(theta_n) a(theta_n)^H.
ObservationSystem extract_observation(const ComplexMatrix& r_hat,
                                      const ArrayConfig& cfg);

struct DatasetStats {
  SignalVector x_bar;       // dataset mean
  Eigen::MatrixXd c;        // sample covariance (Bessel-corrected)
  Eigen::MatrixXd p;        // (C + delta I)^{-1}
  int count = 0;            // L
  double delta = 0.0;
};

// Mean/covariance of a dataset of APS vectors and the regularized precision
// matrix used as the prior weight. delta = ||C||_2 / 100, floored at 1e-12.
DatasetStats dataset_stats(const std::vector<SignalVector>& samples);

// Noise variance for a target SNR: s2 = mean_t ||h_t||^2 / (D * 10^(snr/10)),
// normalizer D = number of antennas by default.
double snr_noise_variance(const ComplexMatrix& channel_samples, double snr_db,
                          int normalizer_dim);

}  // namespace lop
