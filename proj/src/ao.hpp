#pragma once

// Alternating optimization over the four blocks (receive beamformers, transmit
// beamformer, WET reflection with resource allocation, WIT reflections), the
// baseline schemes and an independent feasibility report.

#include <cstdint>
#include <string>
#include <vector>

#include "model.hpp"
#include "wet_opt.hpp"

namespace arwpcn::ao {

using model::ChannelSet;
using model::RisProfile;
using model::SystemParams;

enum class Scheme { ActiveMA, ActiveSA, PassiveMA, ActiveMAUebf };

const char* to_string(Scheme s);
/// Accepts the names printed by to_string, case-insensitively. DomainError otherwise.
Scheme scheme_from_string(const std::string& name);

struct AoOptions {
  double tol_ao = 1e-3;  // relative sum-rate change between sweeps
  int max_outer = 30;
  double tol_sca = 1e-4;
  int max_sca_iter = 50;
  wet::Tau0Search tau0_search = wet::Tau0Search::Joint;
  double delta_tau0 = 0.02;
  bool uniform_w0 = false;  // keep w0 = sqrt(P0/M) 1 and skip its block
  std::uint64_t seed = 0;   // initial phases
};

struct BlockTiming {
  double receive_ms = 0.0;
  double transmit_ms = 0.0;
  double wet_ris_ms = 0.0;
  double wit_ris_ms = 0.0;
  double total_ms = 0.0;
};

struct Solution {
  VectorXcd w0;
  std::vector<VectorXcd> wk;
  RisProfile phi0;
  std::vector<RisProfile> phik;
  model::Allocation alloc;
  VectorXd rates;  // bits per block, per user
  double sum_rate = 0.0;
  double initial_sum_rate = 0.0;
  std::vector<double> ao_trace;  // sum-rate after each full sweep
  int outer_iters = 0;
  BlockTiming timing;
  // Rank-one diagnostics of the lifted subproblems over all sweeps.
  double max_rank_residual_w0 = 0.0;
  double max_rank_residual_phi0 = 0.0;
  int projections = 0;  // lifted solutions that failed the test and were projected
};

/// Feasible start: random phases, uniform amplitudes at 90% of both budgets,
/// w0 maximum-ratio toward sum_k h_k at full power, tau0 = 0.5, tau_k = 0.5/K,
/// e_k = 0.9 E_k and MMSE receivers.
Solution initialize(const SystemParams& params, const ChannelSet& ch, std::uint64_t seed,
                    bool uniform_w0 = false);

/// Runs the four blocks in order until the relative sum-rate change falls below
/// tol_ao or max_outer sweeps. A block's result is accepted only when it does
/// not lower the sum-rate, so ao_trace is nondecreasing. Subproblem failures
/// are rethrown with the block and sweep named.
Solution ao_solve(const SystemParams& params, const ChannelSet& ch, const AoOptions& options = {});

/// Parameters of a scheme derived from the proposed system: ActiveSA uses
/// M = L = 1; PassiveMA uses a_max = 1, sigma_v^2 = 0, no amplification budgets
/// and passive_n elements (0 keeps N).
SystemParams scheme_params(Scheme scheme, const SystemParams& base, int passive_n = 100);

/// ao_solve under the scheme's restrictions. params must already be the
/// scheme's parameters and ch must match their dimensions.
Solution baseline_solve(Scheme scheme, const SystemParams& params, const ChannelSet& ch,
                        AoOptions options = {});

struct ConstraintCheck {
  std::string name;
  double lhs = 0.0;
  double rhs = 0.0;
  double slack = 0.0;           // rhs - lhs
  double relative_slack = 0.0;  // slack / max(|lhs|, |rhs|), 0 when both vanish
};

struct Evaluation {
  VectorXd rates;
  double sum_rate = 0.0;
  std::vector<ConstraintCheck> constraints;

  /// Every relative slack >= -tol.
  bool feasible(double tol = 1e-8) const;
  /// Most negative relative slack (0 when all hold).
  double worst_violation() const;
  /// Name of the most violated constraint, empty when none is violated.
  std::string worst_constraint() const;
};

/// Recomputes rates and every constraint from the channels and the decision
/// variables alone. Throws DomainError on mismatched dimensions.
Evaluation evaluate(const SystemParams& params, const ChannelSet& ch, const Solution& sol);

}  // namespace arwpcn::ao
