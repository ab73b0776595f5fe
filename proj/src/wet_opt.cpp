#include "wet_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "errors.hpp"

namespace arwpcn::wet {

using conic::ConicProblem;
using conic::LinearConstraint;
using model::kTauMin;

namespace {

// x = [tau0?, tau_1..tau_K, ehat_1..ehat_K]
struct Layout {
  int K = 0;
  bool joint = false;
  int tau(int k) const { return (joint ? 1 : 0) + k; }
  int e(int k) const { return (joint ? 1 : 0) + K + k; }
  int size() const { return (joint ? 1 : 0) + 2 * K; }
};

void check_context(const WetContext& ctx) {
  const int K = ctx.channels.num_users();
  if (static_cast<int>(ctx.phik.size()) != K || static_cast<int>(ctx.wk.size()) != K ||
      ctx.eps.size() != K)
    throw DomainError("wet: context sizes do not match the number of users");
  if (ctx.w0.size() != ctx.channels.ps_antennas()) throw DomainError("wet: w0 has the wrong length");
  if (ctx.phi0.size() != ctx.channels.num_elements()) throw DomainError("wet: phi0 has the wrong length");
  if ((ctx.eps.array() < 0.0).any()) throw DomainError("wet: eps must be nonnegative");
}

// Per-user data of the WIT amplification budget rewritten in (tau, e):
// e_k * gain_k + tau_k * noise_k <= tau_k * Pr.
struct WitBudget {
  VectorXd gain;
  VectorXd noise;
};

WitBudget wit_budget(const WetContext& ctx, const SystemParams& params) {
  const int K = ctx.channels.num_users();
  WitBudget b{VectorXd::Zero(K), VectorXd::Zero(K)};
  if (!params.active_ris) return b;
  for (int k = 0; k < K; ++k) {
    const VectorXcd phi = ctx.phik[k].coefficients();
    b.gain[k] = phi.cwiseProduct(ctx.channels.g_u[k]).squaredNorm();
    b.noise[k] = params.sigma_v2 * phi.squaredNorm();
  }
  return b;
}

// Largest ehat_k allowed by the WIT budget at slot length tau (infinite when
// the budget does not involve e_k).
double budget_cap(const WitBudget& b, int k, double tau, double e_ref, const SystemParams& params) {
  if (!params.active_ris || b.gain[k] <= 0.0) return std::numeric_limits<double>::infinity();
  return tau * (params.pr - b.noise[k]) / (b.gain[k] * e_ref);
}

// Time budget, WIT budgets, e >= 0 and the rate objective.
void add_user_side(ConicProblem& p, const Layout& lay, const WetContext& ctx, const WitBudget& wb,
                   const SystemParams& params, double e_ref, double tau0_fixed) {
  const int n = lay.size();
  LinearConstraint time;
  time.a = VectorXd::Zero(n);
  for (int k = 0; k < lay.K; ++k) time.a[lay.tau(k)] = 1.0;
  if (lay.joint) {
    time.a[0] = 1.0;
    time.b = 1.0;
  } else {
    time.b = 1.0 - tau0_fixed;
  }
  p.inequalities.push_back(std::move(time));

  for (int k = 0; k < lay.K; ++k) {
    if (params.active_ris && wb.gain[k] > 0.0) {
      LinearConstraint r;
      r.a = VectorXd::Zero(n);
      r.a[lay.e(k)] = wb.gain[k] * e_ref / params.pr;
      r.a[lay.tau(k)] = (wb.noise[k] - params.pr) / params.pr;
      p.inequalities.push_back(std::move(r));
    }
    LinearConstraint nonneg;
    nonneg.a = VectorXd::Zero(n);
    nonneg.a[lay.e(k)] = -1.0;
    p.inequalities.push_back(std::move(nonneg));
    p.perspective_terms.push_back({lay.tau(k), lay.e(k), ctx.eps[k] * e_ref, 1.0});
  }
}

// Interior start for the user-side variables given energy ceilings (in ehat
// units) at the chosen start point.
void user_start(VectorXd& x, const Layout& lay, const WitBudget& wb, const SystemParams& params,
                double e_ref, double tau0, const VectorXd& e_ceiling) {
  const double tau = (1.0 - tau0) / (2.0 * lay.K);
  for (int k = 0; k < lay.K; ++k) {
    x[lay.tau(k)] = tau;
    x[lay.e(k)] = 0.5 * std::min(e_ceiling[k], budget_cap(wb, k, tau, e_ref, params));
  }
}

void require_optimal(const conic::SolverReport& rep, const char* what) {
  using conic::Status;
  if (rep.status == Status::Optimal) return;
  const std::string msg = std::string(what) + ": " + conic::to_string(rep.status) +
                          (rep.message.empty() ? "" : " (" + rep.message + ")");
  if (rep.status == Status::Infeasible) throw InfeasibleError(msg);
  throw NumericalError(msg);
}

// Turns solver output into an allocation that satisfies every constraint with
// the recovered (w0, phi0) exactly: unused slots carry no energy and energies
// are clamped to what is actually harvested and to the WIT budgets.
model::Allocation finish_allocation(const WetContext& ctx, const SystemParams& params,
                                    const VectorXcd& w0, const RisProfile& phi0, double tau0,
                                    const VectorXd& tau, const VectorXd& e) {
  const int K = ctx.channels.num_users();
  const WitBudget wb = wit_budget(ctx, params);
  model::Allocation a;
  a.tau0 = std::clamp(tau0, 0.0, 1.0);
  a.tau = tau.cwiseMax(0.0);
  a.e = e.cwiseMax(0.0);
  const double total = a.tau0 + a.tau.sum();
  if (total > 1.0) a.tau *= (1.0 - a.tau0) / a.tau.sum();
  for (int k = 0; k < K; ++k) {
    if (a.tau[k] <= kTauMin) {
      a.tau[k] = 0.0;
      a.e[k] = 0.0;
      continue;
    }
    const double harvested = model::harvested_energy(ctx.channels, w0, phi0, a.tau0, k, params);
    a.e[k] = std::min(a.e[k], harvested);
    a.e[k] = std::min(a.e[k], budget_cap(wb, k, a.tau[k], 1.0, params));
    a.e[k] = std::max(a.e[k], 0.0);
  }
  return a;
}

model::Allocation idle_allocation(int K, double tau0) {
  model::Allocation a;
  a.tau0 = tau0;
  a.tau = VectorXd::Constant(K, (1.0 - tau0) / K);
  a.e = VectorXd::Zero(K);
  return a;
}

// ---------------------------------------------------------------------------
// Reflection problem data in the scaled lifted variable Psihat = D^-1 Psi D^-1.

struct Reflection {
  int N = 0;
  VectorXd s;                // amplitude ceiling per element
  VectorXd cap;              // (a_max / s_n)^2
  VectorXd budget;           // s_n^2 (P0 d_n + sigma_v^2) / Pr
  std::vector<VectorXcd> u;  // lifted energy vectors, scaled by D
  std::vector<VectorXd> q;   // sigma_v^2 |h_u,n|^2 s_n^2
  VectorXd bound;            // energy upper bound per user at tau0 = 1
};

Reflection reflection_data(const WetContext& ctx, const SystemParams& params) {
  const auto& ch = ctx.channels;
  const int N = ch.num_elements();
  const int K = ch.num_users();
  Reflection r;
  r.N = N;
  r.s = VectorXd::Constant(N, params.a_max);
  r.budget = VectorXd::Zero(N);
  if (params.active_ris) {
    for (int n = 0; n < N; ++n) {
      const double unit = params.p0 * ch.H_r.row(n).squaredNorm() + params.sigma_v2;
      if (unit > 0.0) r.s[n] = std::min(params.a_max, std::sqrt(params.pr / unit));
      r.budget[n] = r.s[n] * r.s[n] * unit / params.pr;
    }
  }
  r.cap = (params.a_max * params.a_max) * r.s.cwiseAbs2().cwiseInverse();
  const VectorXcd hw = ch.H_r * ctx.w0;
  r.bound.resize(K);
  for (int k = 0; k < K; ++k) {
    VectorXcd u(N + 1);
    u.head(N) = ch.h_u[k].cwiseProduct(hw.conjugate()).cwiseProduct(r.s.cast<cd>());
    u[N] = ctx.w0.dot(ch.h_d[k]);  // w0^H h_d
    VectorXd q = params.sigma_v2 * ch.h_u[k].cwiseAbs2().cwiseProduct(r.s.cwiseAbs2());
    const double l1 = u.cwiseAbs().sum();
    r.bound[k] = params.beta * (l1 * l1 + q.sum());
    r.u.push_back(std::move(u));
    r.q.push_back(std::move(q));
  }
  return r;
}

// joint: variables (tau0 Psihat, tau0, tau, e); otherwise tau0 is fixed.
WetRisResult solve_reflection(const WetContext& ctx, const SystemParams& params, bool joint,
                              double tau0_fixed, const WetRisOptions& opt) {
  check_context(ctx);
  const auto& ch = ctx.channels;
  const int K = ch.num_users();
  const int N = ch.num_elements();
  const Reflection rd = reflection_data(ctx, params);
  const WitBudget wb = wit_budget(ctx, params);

  const double tau_scale = joint ? 1.0 : tau0_fixed;
  const double e_ref = tau_scale * rd.bound.maxCoeff();
  WetRisResult out;
  if (!(e_ref > 0.0) || (!joint && (tau0_fixed <= kTauMin || tau0_fixed >= 1.0 - kTauMin))) {
    out.phi0 = ctx.phi0;
    out.alloc = idle_allocation(K, joint ? 0.0 : std::clamp(tau0_fixed, 0.0, 1.0));
    out.report.status = conic::Status::Optimal;
    out.report.message = "no harvestable energy";
    return out;
  }

  const Layout lay{K, joint};
  const int nc = N + 1;
  ConicProblem p;
  p.n_scalar = lay.size();
  p.matrix_dim = 2 * nc;

  // <A, Psihat> + a'x <= coeff * t, with t = tau0 (joint) or 1.
  auto scaled_rhs = [&](LinearConstraint& c, double coeff) {
    if (joint) {
      c.a[0] -= coeff;
      c.b = 0.0;
    } else {
      c.b = coeff;
    }
  };
  for (int n = 0; n < N; ++n) {
    LinearConstraint c;
    c.a = VectorXd::Zero(p.n_scalar);
    conic::add_hermitian_entry(c.A, nc, n, n, 1.0);
    scaled_rhs(c, rd.cap[n]);
    p.inequalities.push_back(std::move(c));
  }
  {
    LinearConstraint c;
    c.a = VectorXd::Zero(p.n_scalar);
    conic::add_hermitian_entry(c.A, nc, N, N, 1.0);
    scaled_rhs(c, 1.0);
    p.equalities.push_back(std::move(c));
  }
  if (params.active_ris) {
    LinearConstraint c;
    c.a = VectorXd::Zero(p.n_scalar);
    for (int n = 0; n < N; ++n) conic::add_hermitian_entry(c.A, nc, n, n, rd.budget[n]);
    scaled_rhs(c, 1.0);
    p.inequalities.push_back(std::move(c));
  }
  const double g = params.beta * tau_scale / e_ref;
  for (int k = 0; k < K; ++k) {
    LinearConstraint c;
    c.a = VectorXd::Zero(p.n_scalar);
    c.a[lay.e(k)] = 1.0;
    conic::add_hermitian_rank_one(c.A, -g, rd.u[k]);
    for (int n = 0; n < N; ++n)
      if (rd.q[k][n] != 0.0) conic::add_hermitian_entry(c.A, nc, n, n, -g * rd.q[k][n]);
    c.b = 0.0;
    p.inequalities.push_back(std::move(c));
  }
  add_user_side(p, lay, ctx, wb, params, e_ref, tau0_fixed);

  // Start: Psihat = t diag(c, .., c, 1).
  const double t0 = joint ? 0.5 : 1.0;
  const double tau0_start = joint ? 0.5 : tau0_fixed;
  const double c0 = 0.5 / N;
  VectorXd d = VectorXd::Constant(nc, t0 * c0);
  d[N] = t0;
  VectorXd x(p.n_scalar);
  if (joint) x[0] = t0;
  VectorXd ceiling(K);
  for (int k = 0; k < K; ++k) {
    double quad = 0.0;
    for (int i = 0; i < nc; ++i) quad += d[i] * std::norm(rd.u[k][i]);
    ceiling[k] = g * (quad + rd.q[k].dot(d.head(N)));
  }
  user_start(x, lay, wb, params, e_ref, tau0_start, ceiling);
  p.x0 = x;
  VectorXd dd(2 * nc);
  dd << d, d;
  p.X0 = MatrixXd(dd.asDiagonal());

  conic::ConicSolution sol = conic::solve(p, opt.tol);
  require_optimal(sol.report, "WET reflection problem");

  const double tau0 = joint ? sol.x[0] : tau0_fixed;
  MatrixXcd psi = conic::project_embedded(sol.X);
  if (joint) psi /= tau0;
  VectorXcd scale(nc);
  scale << rd.s.cast<cd>(), cd(1.0);
  psi = scale.asDiagonal() * psi * scale.asDiagonal();
  VectorXcd phi(N);
  double residual = 0.0;
  bool tight = true;
  if (ctx.w0.squaredNorm() == 0.0) {
    // Without a coherent signal only diag(Psi) matters, and any diagonal is
    // attained by phi_n = sqrt(Psi_nn).
    phi = psi.diagonal().head(N).real().cwiseMax(0.0).cwiseSqrt().cast<cd>();
  } else {
    const conic::RankOneFactor f = conic::extract_rank_one(psi);
    residual = f.residual;
    tight = f.residual <= opt.rank_tol;
    if (!tight && opt.rank_policy == RankOnePolicy::Throw)
      throw RankOneViolation("WET reflection problem: lifted solution is not rank one", f.residual);
    if (std::abs(f.v[N]) < 1e-12) throw NumericalError("WET reflection problem: lifted vector lost its anchor");
    phi = f.v.head(N) / f.v[N];
  }

  RisProfile prof = RisProfile::from_coefficients(phi);
  double clip = 0.0;
  for (int n = 0; n < N; ++n) {
    if (prof.amp[n] > params.a_max) {
      clip = std::max(clip, prof.amp[n] - params.a_max);
      prof.amp[n] = params.a_max;
    }
  }
  if (params.active_ris) {
    const double used = model::wet_amplification_power(ch, prof, params);
    if (used > params.pr) {
      const double shrink = std::sqrt(params.pr / used);
      clip = std::max(clip, (1.0 - shrink) * prof.amp.maxCoeff());
      prof.amp *= shrink;
    }
  }

  VectorXd tau(K), e(K);
  for (int k = 0; k < K; ++k) {
    tau[k] = sol.x[lay.tau(k)];
    e[k] = e_ref * sol.x[lay.e(k)];
  }
  out.phi0 = prof;
  if (tight) {
    out.alloc = finish_allocation(ctx, params, ctx.w0, prof, tau0, tau, e);
  } else {
    const WetContext fixed{ch, ctx.w0, prof, ctx.phik, ctx.wk, ctx.eps, tau0};
    out.alloc = optimize_allocation(fixed, params, !joint, opt.tol).alloc;
    out.projected = true;
  }
  out.objective = rate_objective(ctx.eps, out.alloc.tau, out.alloc.e);
  out.relaxed_objective = sol.report.objective_value;
  out.rank_residual = residual;
  out.clip = clip;
  out.solves = 1;
  out.report = std::move(sol.report);
  return out;
}

}  // namespace

VectorXd epsilon_coefficients(const ChannelSet& ch, const std::vector<VectorXcd>& wk,
                              const std::vector<RisProfile>& phik, const SystemParams& params) {
  const int K = ch.num_users();
  if (static_cast<int>(wk.size()) != K || static_cast<int>(phik.size()) != K)
    throw DomainError("epsilon_coefficients: one beamformer and profile per user required");
  VectorXd eps(K);
  for (int k = 0; k < K; ++k) {
    if (wk[k].squaredNorm() == 0.0) throw DomainError("epsilon_coefficients: zero receive beamformer");
    const VectorXcd g = model::effective_uplink_channel(ch, phik[k], k);
    const double signal = std::norm(wk[k].dot(g));
    const double noise = params.sigma_v2 * (ch.G_r.adjoint() * wk[k]).cwiseProduct(phik[k].coefficients().conjugate()).squaredNorm() +
                         params.sigma_r2 * wk[k].squaredNorm();
    eps[k] = signal / noise;
  }
  return eps;
}

double rate_objective(const VectorXd& eps, const VectorXd& tau, const VectorXd& e) {
  double r = 0.0;
  for (Eigen::Index k = 0; k < eps.size(); ++k)
    if (tau[k] > 0.0) r += model::user_rate(tau[k], eps[k] * e[k] / tau[k]);
  return r;
}

TransmitResult solve_transmit_beamforming(const WetContext& ctx, const SystemParams& params,
                                          double tol, double rank_tol, RankOnePolicy policy) {
  check_context(ctx);
  const auto& ch = ctx.channels;
  const int M = ch.ps_antennas();
  const int K = ch.num_users();
  const double tau0 = ctx.tau0;

  std::vector<VectorXcd> h(K);
  VectorXd floor_e(K);  // RIS-noise energy, independent of W0
  double e_ref = 0.0;
  for (int k = 0; k < K; ++k) {
    h[k] = model::effective_downlink_channel(ch, ctx.phi0, k);
    floor_e[k] = params.beta * tau0 * params.sigma_v2 *
                 ch.h_u[k].conjugate().cwiseProduct(ctx.phi0.coefficients()).squaredNorm();
    e_ref = std::max(e_ref, params.beta * tau0 * params.p0 * h[k].squaredNorm() + floor_e[k]);
  }

  TransmitResult out;
  if (!(params.p0 > 0.0)) {
    // Only the amplified RIS noise is left to harvest.
    WetContext silent = ctx;
    silent.w0 = VectorXcd::Zero(M);
    AllocationResult a = optimize_allocation(silent, params, true, tol);
    out.w0 = silent.w0;
    out.tau = a.alloc.tau;
    out.e = a.alloc.e;
    out.objective = a.objective;
    out.report = std::move(a.report);
    return out;
  }
  if (!(e_ref > 0.0) || tau0 <= kTauMin || tau0 >= 1.0 - kTauMin) {
    out.w0 = VectorXcd::Constant(M, std::sqrt(std::max(params.p0, 0.0) / M));
    const model::Allocation a = idle_allocation(K, std::clamp(tau0, 0.0, 1.0));
    out.tau = a.tau;
    out.e = a.e;
    out.report.status = conic::Status::Optimal;
    out.report.message = "no harvestable energy";
    return out;
  }

  const Layout lay{K, false};
  ConicProblem p;
  p.n_scalar = lay.size();
  p.matrix_dim = 2 * M;
  {
    LinearConstraint c;
    for (int i = 0; i < M; ++i) conic::add_hermitian_entry(c.A, M, i, i, 1.0);
    c.b = 1.0;
    p.inequalities.push_back(std::move(c));
  }
  const double g = params.beta * tau0 * params.p0 / e_ref;
  for (int k = 0; k < K; ++k) {
    LinearConstraint c;
    c.a = VectorXd::Zero(p.n_scalar);
    c.a[lay.e(k)] = 1.0;
    conic::add_hermitian_rank_one(c.A, -g, h[k]);
    c.b = floor_e[k] / e_ref;
    p.inequalities.push_back(std::move(c));
  }
  const WitBudget wb = wit_budget(ctx, params);
  add_user_side(p, lay, ctx, wb, params, e_ref, tau0);

  VectorXd x(p.n_scalar);
  VectorXd ceiling(K);
  for (int k = 0; k < K; ++k) ceiling[k] = g * h[k].squaredNorm() / (2.0 * M) + floor_e[k] / e_ref;
  user_start(x, lay, wb, params, e_ref, tau0, ceiling);
  p.x0 = x;
  p.X0 = MatrixXd::Identity(2 * M, 2 * M) / (2.0 * M);

  conic::ConicSolution sol = conic::solve(p, tol);
  require_optimal(sol.report, "transmit beamforming problem");

  const MatrixXcd W = params.p0 * conic::project_embedded(sol.X);
  const conic::RankOneFactor f = conic::extract_rank_one(W);
  const bool tight = f.residual <= rank_tol;
  if (!tight && policy == RankOnePolicy::Throw)
    throw RankOneViolation("transmit beamforming problem: lifted solution is not rank one", f.residual);
  VectorXcd w0 = f.v;
  const double nv = w0.norm();
  if (nv > 0.0) w0 *= std::sqrt(std::max(W.trace().real(), 0.0)) / nv;
  if (w0.squaredNorm() > params.p0) w0 *= std::sqrt(params.p0) / w0.norm();

  VectorXd tau(K), e(K);
  for (int k = 0; k < K; ++k) {
    tau[k] = sol.x[lay.tau(k)];
    e[k] = e_ref * sol.x[lay.e(k)];
  }
  model::Allocation a;
  if (tight) {
    a = finish_allocation(ctx, params, w0, ctx.phi0, tau0, tau, e);
  } else {
    const WetContext fixed{ch, w0, ctx.phi0, ctx.phik, ctx.wk, ctx.eps, tau0};
    a = optimize_allocation(fixed, params, true, tol).alloc;
    out.projected = true;
  }
  out.w0 = std::move(w0);
  out.tau = a.tau;
  out.e = a.e;
  out.objective = rate_objective(ctx.eps, a.tau, a.e);
  out.rank_residual = f.residual;
  out.report = std::move(sol.report);
  return out;
}

WetRisResult solve_reflection_fixed_tau0(const WetContext& ctx, const SystemParams& params,
                                         double tau0, const WetRisOptions& options) {
  return solve_reflection(ctx, params, false, tau0, options);
}

WetRisResult optimize_wet_ris_and_allocation(const WetContext& ctx, const SystemParams& params,
                                             const WetRisOptions& options) {
  if (options.search == Tau0Search::Joint)
    return solve_reflection(ctx, params, true, 0.0, options);

  if (!(options.delta > 0.0 && options.delta <= 1.0)) throw DomainError("tau0 grid step must lie in (0, 1]");
  WetRisResult best;
  bool have = false;
  std::vector<std::pair<double, double>> grid;
  int solves = 0;
  auto visit = [&](double t0) {
    WetRisResult r = solve_reflection(ctx, params, false, t0, options);
    solves += r.solves;
    grid.emplace_back(t0, r.objective);
    const bool better = !have || r.objective > best.objective + 1e-9 ||
                        (std::abs(r.objective - best.objective) <= 1e-9 && t0 < best.alloc.tau0);
    if (better) {
      best = std::move(r);
      have = true;
    }
  };
  const int steps = static_cast<int>(std::floor(1.0 / options.delta + 1e-9));
  for (int i = 0; i <= steps; ++i) visit(std::min(1.0, i * options.delta));
  if (options.refine) {
    const double centre = best.alloc.tau0;
    const double h = options.delta / 4.0;
    for (int j = -3; j <= 3; ++j) {
      const double t0 = centre + j * h;
      if (j == 0 || t0 <= 0.0 || t0 >= 1.0) continue;
      visit(t0);
    }
  }
  best.grid = std::move(grid);
  best.solves = solves;
  return best;
}

AllocationResult optimize_allocation(const WetContext& ctx, const SystemParams& params, bool fix_tau0,
                                     double tol) {
  check_context(ctx);
  const auto& ch = ctx.channels;
  const int K = ch.num_users();
  VectorXd eta(K);  // energy per unit WET time
  for (int k = 0; k < K; ++k) eta[k] = model::harvested_energy(ch, ctx.w0, ctx.phi0, 1.0, k, params);
  const double tau_scale = fix_tau0 ? ctx.tau0 : 1.0;
  const double e_ref = tau_scale * eta.maxCoeff();

  AllocationResult out;
  if (!(e_ref > 0.0) || (fix_tau0 && (ctx.tau0 <= kTauMin || ctx.tau0 >= 1.0 - kTauMin))) {
    out.alloc = idle_allocation(K, fix_tau0 ? std::clamp(ctx.tau0, 0.0, 1.0) : 0.0);
    out.report.status = conic::Status::Optimal;
    out.report.message = "no harvestable energy";
    return out;
  }

  const Layout lay{K, !fix_tau0};
  ConicProblem p;
  p.n_scalar = lay.size();
  for (int k = 0; k < K; ++k) {
    LinearConstraint c;
    c.a = VectorXd::Zero(p.n_scalar);
    c.a[lay.e(k)] = 1.0;
    if (lay.joint) {
      c.a[0] = -eta[k] / e_ref;
    } else {
      c.b = ctx.tau0 * eta[k] / e_ref;
    }
    p.inequalities.push_back(std::move(c));
  }
  const WitBudget wb = wit_budget(ctx, params);
  add_user_side(p, lay, ctx, wb, params, e_ref, ctx.tau0);
  const double tau0_start = lay.joint ? 0.5 : ctx.tau0;
  VectorXd x(p.n_scalar);
  if (lay.joint) x[0] = tau0_start;
  user_start(x, lay, wb, params, e_ref, tau0_start, tau0_start * eta / e_ref);
  p.x0 = x;

  conic::ConicSolution sol = conic::solve(p, tol);
  require_optimal(sol.report, "time and energy allocation problem");
  const double tau0 = lay.joint ? sol.x[0] : ctx.tau0;
  VectorXd tau(K), e(K);
  for (int k = 0; k < K; ++k) {
    tau[k] = sol.x[lay.tau(k)];
    e[k] = e_ref * sol.x[lay.e(k)];
  }
  out.alloc = finish_allocation(ctx, params, ctx.w0, ctx.phi0, tau0, tau, e);
  out.objective = rate_objective(ctx.eps, out.alloc.tau, out.alloc.e);
  out.report = std::move(sol.report);
  return out;
}

}  // namespace arwpcn::wet
