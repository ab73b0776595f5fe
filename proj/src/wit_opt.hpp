#pragma once

// Information-transfer phase: MMSE receive beamforming, closed-form phase
// alignment of the WIT reflection and the SCA loop for its amplitudes.

#include <vector>

#include "model.hpp"

namespace arwpcn::wit {

using model::ChannelSet;
using model::RisProfile;
using model::SystemParams;

/// (g g^H + sigma_v^2/p G_r Phi Phi^H G_r^H + sigma_r^2/p I)^-1 g. For p_k = 0
/// the limiting direction (sigma_v^2 G_r Phi Phi^H G_r^H + sigma_r^2 I)^-1 g is
/// returned; the SNR does not depend on the scale of w.
VectorXcd mmse_receive_beamforming(const ChannelSet& ch, const RisProfile& phik, double p_k, int k,
                                   const SystemParams& params);

/// theta_n = arg(w^H g_d) - arg(g_u,n) + arg(g_r,n) with g_r = G_r^H w, wrapped
/// to [0, 2 pi). A vanishing direct term uses reference phase 0.
VectorXd optimal_phase_shifts(const ChannelSet& ch, const VectorXcd& wk, int k);

/// Per-user quantities of the amplitude problem for a unit-norm receive vector:
/// gamma = p (bbar' a + |g_d|)^2 / (sigma_v^2 a' Q_r a + sigma_r^2) at aligned phases.
struct WitUserContext {
  cd g_d_eff;     // w^H g_d
  VectorXcd g_r;  // G_r^H w
  VectorXcd b;    // conj(b) = conj(g_r) .* g_u, so b^H phi = sum conj(g_r,n) g_u,n phi_n
  VectorXd Q_r;   // |g_r,n|^2
  VectorXd F;     // p |g_u,n|^2 + sigma_v^2
  double p_k = 0.0;
  double sigma_v2 = 0.0;
  double sigma_r2 = 0.0;
  bool budget = true;  // false for a passive surface

  int size() const { return static_cast<int>(Q_r.size()); }
  /// SNR at amplitudes a with aligned phases.
  double snr(const VectorXd& a) const;
  /// a' F a, the WIT amplification power at aligned phases.
  double power(const VectorXd& a) const;
};

/// wk is normalized internally.
WitUserContext make_user_context(const ChannelSet& ch, const VectorXcd& wk, double p_k, int k,
                                 const SystemParams& params);

/// sqrt(g_t n_t) + 1/2 sqrt(n_t/g_t)(g - g_t) + 1/2 sqrt(g_t/n_t)(n - n_t),
/// an upper bound on sqrt(g n).
double taylor_majorant(double gamma, double n, double gamma_t, double n_t);

struct ScaResult {
  VectorXd amp;
  std::vector<double> trace;  // gamma_bar after each inner solve, trace[0] is the start
  int iterations = 0;
};

/// Feasible start: c a_max 1 with c = min(1, 0.9 sqrt(Pr / (a_max^2 1'F1))).
VectorXd sca_start(const WitUserContext& ctx, double a_max, double pr);

/// Successive convex approximation of the amplitude problem. Stops when the
/// relative change of gamma_bar drops below tol or after max_iter inner solves.
ScaResult sca_amplitudes(const WitUserContext& ctx, double a_max, double pr, double tol = 1e-4,
                         int max_iter = 50);

struct WitProfileResult {
  RisProfile profile;
  ScaResult sca;
};

/// Aligned phases composed with SCA amplitudes.
WitProfileResult wit_ris_profile(const ChannelSet& ch, const VectorXcd& wk, double p_k, int k,
                                 const SystemParams& params, double tol = 1e-4, int max_iter = 50);

}  // namespace arwpcn::wit
