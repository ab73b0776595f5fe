#pragma once

// Energy-transfer phase subproblems: the SDR transmit beamforming problem
// over (W0, tau, e) and the SDR reflection problem over (Psi0, tau0, tau, e).
//
// Both are posed in scaled variables so that every quantity the solver sees is
// O(1): W0 = P0 * What, e_k = e_ref * ehat_k, and Psi0 = D Psihat D with D the
// per-element amplitude ceiling. Rates are unaffected by the scaling.

#include <vector>

#include "conic.hpp"
#include "model.hpp"

namespace arwpcn::wet {

using model::ChannelSet;
using model::RisProfile;
using model::SystemParams;

struct WetContext {
  const ChannelSet& channels;
  VectorXcd w0;                  // transmit beamformer (fixed in the reflection problem)
  RisProfile phi0;               // WET reflection (fixed in the beamforming problem)
  std::vector<RisProfile> phik;  // WIT reflections, fixed
  std::vector<VectorXcd> wk;     // receive beamformers, fixed
  VectorXd eps;                  // gamma_k = eps_k * p_k
  double tau0 = 0.5;             // fixed WET duration for the beamforming problem
};

/// eps_k = |w_k^H g_k|^2 / (sigma_v^2 ||w_k^H G_r Phi_k||^2 + sigma_r^2 ||w_k||^2).
VectorXd epsilon_coefficients(const ChannelSet& ch, const std::vector<VectorXcd>& wk,
                              const std::vector<RisProfile>& phik, const SystemParams& params);

/// Sum over users of tau_k log2(1 + eps_k e_k / tau_k).
double rate_objective(const VectorXd& eps, const VectorXd& tau, const VectorXd& e);

/// What to do when a lifted optimum fails the rank-one test. Throw raises
/// RankOneViolation; Project keeps the dominant eigenvector and re-solves the
/// time and energy allocation for the recovered beamformer or reflection.
enum class RankOnePolicy { Throw, Project };

struct TransmitResult {
  VectorXcd w0;
  VectorXd tau;
  VectorXd e;
  double objective = 0.0;
  double rank_residual = 0.0;
  bool projected = false;  // rank test failed and the Project policy applied
  conic::SolverReport report;
};

/// Relaxed beamforming problem at fixed tau0. InfeasibleError or
/// NumericalError when the solver fails.
TransmitResult solve_transmit_beamforming(const WetContext& ctx, const SystemParams& params,
                                          double tol = 1e-8, double rank_tol = 1e-6,
                                          RankOnePolicy policy = RankOnePolicy::Throw);

enum class Tau0Search { Joint, Grid };

struct WetRisOptions {
  Tau0Search search = Tau0Search::Joint;
  double delta = 0.02;  // grid step; a second pass at delta/4 refines the incumbent
  bool refine = true;
  double tol = 1e-8;
  double rank_tol = 1e-6;
  RankOnePolicy rank_policy = RankOnePolicy::Throw;
};

struct WetRisResult {
  RisProfile phi0;
  model::Allocation alloc;
  double objective = 0.0;
  double rank_residual = 0.0;
  double clip = 0.0;  // largest amplitude reduction applied during recovery
  bool projected = false;
  double relaxed_objective = 0.0;  // value of the relaxation (upper bound)
  int solves = 0;
  std::vector<std::pair<double, double>> grid;  // (tau0, objective), grid mode only
  conic::SolverReport report;                   // report of the winning solve
};

/// Reflection, slot lengths and energies of the WET phase. Joint mode solves
/// the perspective reformulation over (tau0 Psi0, tau0, tau, e) once; grid mode
/// scans tau0 on {0, delta, ..., 1} plus the refinement pass.
WetRisResult optimize_wet_ris_and_allocation(const WetContext& ctx, const SystemParams& params,
                                             const WetRisOptions& options = {});

/// Relaxed reflection problem at a single fixed tau0 (the grid-mode kernel).
WetRisResult solve_reflection_fixed_tau0(const WetContext& ctx, const SystemParams& params,
                                         double tau0, const WetRisOptions& options = {});

struct AllocationResult {
  model::Allocation alloc;
  double objective = 0.0;
  conic::SolverReport report;
};

/// Best (tau0, tau, e) with w0 and phi0 held fixed. With fix_tau0 the WET
/// duration stays at ctx.tau0.
AllocationResult optimize_allocation(const WetContext& ctx, const SystemParams& params,
                                     bool fix_tau0, double tol = 1e-8);

}  // namespace arwpcn::wet
