#pragma once

// Scenario geometry, channel generation and the signal-model quantities of
// an active-RIS-assisted multi-antenna wireless powered network.
//
// Conventions used throughout the project:
//  * channel vectors are stored as columns; h_u[k] is the vector whose
//    conjugate transpose multiplies Phi0 in the downlink cascade;
//  * RIS reflection profiles carry amplitude and phase separately and are
//    turned into complex coefficients phi_n = a_n exp(j theta_n);
//  * energies are joules per normalized block, powers are watts, rates are
//    bits per block (log base 2).

#include <complex>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace arwpcn {

using cd = std::complex<double>;
using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

namespace model {

/// Lower bound on slot durations inside the barrier domain; slots at or below
/// it are treated as unused.
inline constexpr double kTauMin = 1e-9;

double dbm_to_watts(double dbm);
double db_to_linear_power(double db);
/// Amplitude caps given in dB: 10^(dB/20).
double db_to_linear_amplitude(double db);

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Geometry {
  double x_r = 10.0;  // RIS at (x_r, 0)
  double x_u = 10.0;  // user disk centre (x_u, x_h)
  double x_s = 20.0;  // receiving station at (x_s, 0)
  double x_h = 2.0;
  double user_radius = 1.0;
};

struct SystemParams {
  int M = 4;   // PS antennas
  int L = 4;   // RS antennas
  int N = 10;  // RIS elements
  int K = 4;   // users
  double p0 = 0.1;             // W
  double pr = 0.1;             // W
  double a_max = 17.7827941;   // linear amplitude (25 dB)
  double sigma_v2 = 1e-12;     // W
  double sigma_r2 = 1e-12;     // W
  double sigma_u2 = 1e-12;     // W, stored only: neglected in energy and SNR
  double beta = 0.8;
  double rician_k = 10.0;
  double pathloss_ref = 1e-3;  // linear, at d0 = 1 m
  double alpha_ris = 2.2;
  double alpha_direct = 3.5;
  Geometry geometry;
  /// false models a passive surface: both amplification budgets are dropped.
  bool active_ris = true;

  /// Throws DomainError naming the first violated invariant.
  void validate() const;
};

/// One channel realization. Dimensions follow SystemParams.
struct ChannelSet {
  MatrixXcd H_r;                 // N x M, PS -> RIS
  std::vector<VectorXcd> h_u;    // K x (N), RIS -> user (downlink)
  std::vector<VectorXcd> h_d;    // K x (M), PS -> user
  std::vector<VectorXcd> g_u;    // K x (N), user -> RIS
  MatrixXcd G_r;                 // L x N, RIS -> RS
  std::vector<VectorXcd> g_d;    // K x (L), user -> RS
  std::vector<Point> users;      // sampled user positions

  int num_users() const { return static_cast<int>(h_u.size()); }
  int num_elements() const { return static_cast<int>(H_r.rows()); }
  int ps_antennas() const { return static_cast<int>(H_r.cols()); }
  int rs_antennas() const { return static_cast<int>(G_r.rows()); }
};

/// Per-element reflection amplitudes and phases (radians in [0, 2*pi)).
struct RisProfile {
  VectorXd amp;
  VectorXd phase;

  static RisProfile zeros(int n);
  static RisProfile from_coefficients(const VectorXcd& phi);
  VectorXcd coefficients() const;
  int size() const { return static_cast<int>(amp.size()); }
};

struct Allocation {
  double tau0 = 0.0;
  VectorXd tau;  // per-user WIT durations
  VectorXd e;    // per-user transmit energies (J per block)

  /// p_k = e_k / tau_k, zero for slots at or below kTauMin.
  VectorXd powers() const;
};

double wrap_phase(double theta);

/// pathloss_ref * (d / 1 m)^-alpha.
double path_loss(double d, double alpha, const SystemParams& params);

/// Deterministic in (params, seed).
ChannelSet generate_channels(const SystemParams& params, std::uint64_t seed);

/// h_k with h_k^H = h_u^H Phi0 H_r + h_d^H.
VectorXcd effective_downlink_channel(const ChannelSet& ch, const RisProfile& phi0, int k);

/// g_k = g_d + G_r Phi_k g_u.
VectorXcd effective_uplink_channel(const ChannelSet& ch, const RisProfile& phik, int k);

/// Energy harvested by user k during the WET slot (linear harvesting model,
/// user thermal noise neglected).
double harvested_energy(const ChannelSet& ch, const VectorXcd& w0, const RisProfile& phi0,
                        double tau0, int k, const SystemParams& params);

/// P0 ||Phi0 H_r||_F^2 + sigma_v^2 ||Phi0||_F^2, using the power cap P0.
double wet_amplification_power(const ChannelSet& ch, const RisProfile& phi0,
                               const SystemParams& params);

/// p_k ||Phi_k g_u,k||^2 + sigma_v^2 ||Phi_k||_F^2.
double wit_amplification_power(const ChannelSet& ch, const RisProfile& phik, double p_k,
                               int k, const SystemParams& params);

/// Uplink SNR of user k at the RS for receive beamformer w_k.
double uplink_snr(const ChannelSet& ch, const RisProfile& phik, const VectorXcd& w_k,
                  double p_k, int k, const SystemParams& params);

/// tau_k log2(1 + gamma_k), with the value 0 at tau_k = 0.
double user_rate(double tau_k, double gamma_k);

}  // namespace model
}  // namespace arwpcn
