#include "ao.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "errors.hpp"
#include "wit_opt.hpp"

namespace arwpcn::ao {

using model::kTauMin;

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void check_dimensions(const SystemParams& params, const ChannelSet& ch) {
  if (ch.num_users() != params.K || ch.num_elements() != params.N || ch.ps_antennas() != params.M ||
      ch.rs_antennas() != params.L)
    throw DomainError("channel dimensions do not match the system parameters");
}

// Rethrows a subproblem failure with the block and sweep prepended.
template <class F>
auto run_block(const char* block, int sweep, F&& f) -> decltype(f()) {
  const std::string where = std::string(block) + " (sweep " + std::to_string(sweep) + "): ";
  try {
    return f();
  } catch (const RankOneViolation& e) {
    throw RankOneViolation(where + e.what(), e.residual());
  } catch (const InfeasibleError& e) {
    throw InfeasibleError(where + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(where + e.what());
  } catch (const DomainError& e) {
    throw DomainError(where + e.what());
  }
}

VectorXd user_rates(const SystemParams& params, const ChannelSet& ch, const std::vector<VectorXcd>& wk,
                    const std::vector<RisProfile>& phik, const model::Allocation& alloc) {
  const VectorXd p = alloc.powers();
  VectorXd r = VectorXd::Zero(params.K);
  for (int k = 0; k < params.K; ++k) {
    if (alloc.tau[k] <= kTauMin || p[k] <= 0.0) continue;
    r[k] = model::user_rate(alloc.tau[k], model::uplink_snr(ch, phik[k], wk[k], p[k], k, params));
  }
  return r;
}

void refresh_rates(const SystemParams& params, const ChannelSet& ch, Solution& s) {
  s.rates = user_rates(params, ch, s.wk, s.phik, s.alloc);
  s.sum_rate = s.rates.sum();
}

VectorXd random_phases(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
  VectorXd t(n);
  for (int i = 0; i < n; ++i) t[i] = u(rng);
  return t;
}

ConstraintCheck make_check(std::string name, double lhs, double rhs) {
  ConstraintCheck c;
  c.name = std::move(name);
  c.lhs = lhs;
  c.rhs = rhs;
  c.slack = rhs - lhs;
  const double scale = std::max(std::abs(lhs), std::abs(rhs));
  c.relative_slack = scale > 0.0 ? c.slack / scale : 0.0;
  return c;
}

}  // namespace

const char* to_string(Scheme s) {
  switch (s) {
    case Scheme::ActiveMA: return "active_ma";
    case Scheme::ActiveSA: return "active_sa";
    case Scheme::PassiveMA: return "passive_ma";
    case Scheme::ActiveMAUebf: return "active_ma_uebf";
  }
  return "unknown";
}

Scheme scheme_from_string(const std::string& name) {
  std::string n;
  for (char c : name) n += c == '-' ? '_' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (Scheme s : {Scheme::ActiveMA, Scheme::ActiveSA, Scheme::PassiveMA, Scheme::ActiveMAUebf})
    if (n == to_string(s)) return s;
  throw DomainError("unknown scheme '" + name + "'");
}

Solution initialize(const SystemParams& params, const ChannelSet& ch, std::uint64_t seed, bool uniform_w0) {
  check_dimensions(params, ch);
  const int M = params.M, N = params.N, K = params.K;
  std::mt19937_64 rng(seed);
  Solution s;

  s.phi0.phase = random_phases(N, rng);
  double a0 = params.a_max;
  if (params.active_ris) {
    const double per_amp2 = params.p0 * ch.H_r.rowwise().squaredNorm().sum() + N * params.sigma_v2;
    if (per_amp2 > 0.0) a0 = std::min(a0, std::sqrt(0.9 * params.pr / per_amp2));
  }
  s.phi0.amp = VectorXd::Constant(N, a0);

  s.w0 = VectorXcd::Constant(M, std::sqrt(params.p0 / M));
  if (!uniform_w0) {
    VectorXcd h = VectorXcd::Zero(M);
    for (int k = 0; k < K; ++k) h += model::effective_downlink_channel(ch, s.phi0, k);
    if (h.norm() > 0.0) s.w0 = std::sqrt(params.p0) * h / h.norm();
  }

  s.alloc.tau0 = 0.5;
  s.alloc.tau = VectorXd::Constant(K, 0.5 / K);
  s.alloc.e = VectorXd(K);
  for (int k = 0; k < K; ++k) s.alloc.e[k] = 0.9 * model::harvested_energy(ch, s.w0, s.phi0, 0.5, k, params);
  const VectorXd p = s.alloc.powers();

  for (int k = 0; k < K; ++k) {
    RisProfile r;
    r.phase = random_phases(N, rng);
    double a = params.a_max;
    if (params.active_ris) {
      const double per_amp2 = p[k] * ch.g_u[k].squaredNorm() + N * params.sigma_v2;
      if (per_amp2 > 0.0) a = std::min(a, std::sqrt(0.9 * params.pr / per_amp2));
    }
    r.amp = VectorXd::Constant(N, a);
    s.phik.push_back(std::move(r));
    s.wk.push_back(wit::mmse_receive_beamforming(ch, s.phik.back(), p[k], k, params));
  }
  refresh_rates(params, ch, s);
  s.initial_sum_rate = s.sum_rate;
  return s;
}

Solution ao_solve(const SystemParams& params, const ChannelSet& ch, const AoOptions& options) {
  params.validate();
  check_dimensions(params, ch);
  if (options.max_outer < 1) throw DomainError("max_outer must be >= 1");
  const auto start = Clock::now();
  const int K = params.K;
  Solution s = initialize(params, ch, options.seed, options.uniform_w0);

  wet::WetRisOptions wopt;
  wopt.search = options.tau0_search;
  wopt.delta = options.delta_tau0;
  wopt.rank_policy = wet::RankOnePolicy::Project;

  double prev = s.sum_rate;
  for (int sweep = 1; sweep <= options.max_outer; ++sweep) {
    auto t = Clock::now();
    VectorXd p = s.alloc.powers();
    run_block("receive beamforming", sweep, [&] {
      for (int k = 0; k < K; ++k) s.wk[k] = wit::mmse_receive_beamforming(ch, s.phik[k], p[k], k, params);
    });
    const VectorXd eps = run_block("receive beamforming", sweep,
                                   [&] { return wet::epsilon_coefficients(ch, s.wk, s.phik, params); });
    double incumbent = wet::rate_objective(eps, s.alloc.tau, s.alloc.e);
    s.timing.receive_ms += ms_since(t);

    if (!options.uniform_w0) {
      t = Clock::now();
      const wet::WetContext ctx{ch, s.w0, s.phi0, s.phik, s.wk, eps, s.alloc.tau0};
      const wet::TransmitResult r = run_block("transmit beamforming", sweep, [&] {
        return wet::solve_transmit_beamforming(ctx, params, 1e-8, 1e-6, wet::RankOnePolicy::Project);
      });
      s.max_rank_residual_w0 = std::max(s.max_rank_residual_w0, r.rank_residual);
      s.projections += r.projected;
      if (r.objective >= incumbent) {
        s.w0 = r.w0;
        s.alloc.tau = r.tau;
        s.alloc.e = r.e;
        incumbent = r.objective;
      }
      s.timing.transmit_ms += ms_since(t);
    }

    t = Clock::now();
    {
      const wet::WetContext ctx{ch, s.w0, s.phi0, s.phik, s.wk, eps, s.alloc.tau0};
      const wet::WetRisResult r = run_block("WET reflection and allocation", sweep,
                                            [&] { return wet::optimize_wet_ris_and_allocation(ctx, params, wopt); });
      s.max_rank_residual_phi0 = std::max(s.max_rank_residual_phi0, r.rank_residual);
      s.projections += r.projected;
      if (r.objective >= incumbent) {
        s.phi0 = r.phi0;
        s.alloc = r.alloc;
      }
    }
    s.timing.wet_ris_ms += ms_since(t);

    t = Clock::now();
    p = s.alloc.powers();
    for (int k = 0; k < K; ++k) {
      if (p[k] <= 0.0) continue;
      const wit::WitProfileResult r = run_block("WIT reflection", sweep, [&] {
        return wit::wit_ris_profile(ch, s.wk[k], p[k], k, params, options.tol_sca, options.max_sca_iter);
      });
      const double before = model::uplink_snr(ch, s.phik[k], s.wk[k], p[k], k, params);
      if (model::uplink_snr(ch, r.profile, s.wk[k], p[k], k, params) >= before) s.phik[k] = r.profile;
    }
    s.timing.wit_ris_ms += ms_since(t);

    refresh_rates(params, ch, s);
    s.ao_trace.push_back(s.sum_rate);
    s.outer_iters = sweep;
    const double change = std::abs(s.sum_rate - prev);
    prev = s.sum_rate;
    if (change <= options.tol_ao * std::max(std::abs(s.sum_rate), std::numeric_limits<double>::min())) break;
  }
  s.timing.total_ms = ms_since(start);
  return s;
}

SystemParams scheme_params(Scheme scheme, const SystemParams& base, int passive_n) {
  SystemParams p = base;
  switch (scheme) {
    case Scheme::ActiveMA:
    case Scheme::ActiveMAUebf:
      break;
    case Scheme::ActiveSA:
      p.M = 1;
      p.L = 1;
      break;
    case Scheme::PassiveMA:
      p.a_max = 1.0;
      p.sigma_v2 = 0.0;
      p.active_ris = false;
      if (passive_n > 0) p.N = passive_n;
      break;
  }
  return p;
}

Solution baseline_solve(Scheme scheme, const SystemParams& params, const ChannelSet& ch, AoOptions options) {
  switch (scheme) {
    case Scheme::ActiveSA:
      if (params.M != 1 || params.L != 1) throw DomainError("active_sa needs M = L = 1");
      break;
    case Scheme::PassiveMA:
      if (params.active_ris || params.a_max > 1.0 || params.sigma_v2 != 0.0)
        throw DomainError("passive_ma needs a passive surface with a_max <= 1 and no RIS noise");
      break;
    case Scheme::ActiveMAUebf:
      options.uniform_w0 = true;
      break;
    case Scheme::ActiveMA:
      break;
  }
  return ao_solve(params, ch, options);
}

bool Evaluation::feasible(double tol) const { return worst_violation() >= -tol; }

double Evaluation::worst_violation() const {
  double w = 0.0;
  for (const auto& c : constraints) w = std::min(w, c.relative_slack);
  return w;
}

std::string Evaluation::worst_constraint() const {
  double w = 0.0;
  std::string name;
  for (const auto& c : constraints) {
    if (c.relative_slack < w) {
      w = c.relative_slack;
      name = c.name;
    }
  }
  return name;
}

Evaluation evaluate(const SystemParams& params, const ChannelSet& ch, const Solution& sol) {
  check_dimensions(params, ch);
  const int K = params.K, N = params.N;
  if (sol.w0.size() != params.M || sol.phi0.size() != N || static_cast<int>(sol.phik.size()) != K ||
      static_cast<int>(sol.wk.size()) != K || sol.alloc.tau.size() != K || sol.alloc.e.size() != K)
    throw DomainError("evaluate: solution dimensions do not match the system");
  for (int k = 0; k < K; ++k)
    if (sol.phik[k].size() != N || sol.wk[k].size() != params.L)
      throw DomainError("evaluate: per-user dimensions do not match the system");

  Evaluation ev;
  ev.rates = user_rates(params, ch, sol.wk, sol.phik, sol.alloc);
  ev.sum_rate = ev.rates.sum();
  auto& cs = ev.constraints;
  const auto& a = sol.alloc;

  cs.push_back(make_check("time budget", a.tau0 + a.tau.sum(), 1.0));
  cs.push_back(make_check("tau0 >= 0", -a.tau0, 0.0));
  cs.push_back(make_check("transmit power", sol.w0.squaredNorm(), params.p0));
  for (int n = 0; n < N; ++n) cs.push_back(make_check("WET amplitude " + std::to_string(n), sol.phi0.amp[n], params.a_max));
  if (params.active_ris)
    cs.push_back(make_check("WET amplification power", model::wet_amplification_power(ch, sol.phi0, params), params.pr));
  const VectorXd p = a.powers();
  for (int k = 0; k < K; ++k) {
    const std::string u = " user " + std::to_string(k);
    cs.push_back(make_check("tau >= 0" + u, -a.tau[k], 0.0));
    cs.push_back(make_check("energy >= 0" + u, -a.e[k], 0.0));
    cs.push_back(make_check("energy causality" + u, p[k] * a.tau[k],
                            model::harvested_energy(ch, sol.w0, sol.phi0, a.tau0, k, params)));
    for (int n = 0; n < N; ++n)
      cs.push_back(make_check("WIT amplitude" + u + " element " + std::to_string(n), sol.phik[k].amp[n], params.a_max));
    if (params.active_ris && a.tau[k] > kTauMin)
      cs.push_back(make_check("WIT amplification power" + u,
                              model::wit_amplification_power(ch, sol.phik[k], p[k], k, params), params.pr));
  }
  return ev;
}

}  // namespace arwpcn::ao
