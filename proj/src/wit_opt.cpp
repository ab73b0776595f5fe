#include "wit_opt.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "conic.hpp"
#include "errors.hpp"

namespace arwpcn::wit {

namespace {

void check_user(const ChannelSet& ch, int k) {
  if (k < 0 || k >= ch.num_users()) throw DomainError("user index " + std::to_string(k) + " out of range");
}

}  // namespace

VectorXcd mmse_receive_beamforming(const ChannelSet& ch, const RisProfile& phik, double p_k, int k,
                                   const SystemParams& params) {
  check_user(ch, k);
  if (!(p_k >= 0.0)) throw DomainError("mmse_receive_beamforming: p_k must be >= 0");
  const VectorXcd g = model::effective_uplink_channel(ch, phik, k);
  const MatrixXcd GP = ch.G_r * phik.coefficients().asDiagonal();
  const int L = ch.rs_antennas();
  // A = p g g^H + sigma_v^2 G_r Phi Phi^H G_r^H + sigma_r^2 I, and w = p A^-1 g
  // is the textbook expression after multiplying through by p.
  MatrixXcd A = params.sigma_v2 * GP * GP.adjoint() + params.sigma_r2 * MatrixXcd::Identity(L, L);
  A.noalias() += p_k * g * g.adjoint();
  const VectorXcd x = A.ldlt().solve(g);
  return p_k > 0.0 ? VectorXcd(p_k * x) : x;
}

VectorXd optimal_phase_shifts(const ChannelSet& ch, const VectorXcd& wk, int k) {
  check_user(ch, k);
  const cd gd = wk.dot(ch.g_d[k]);  // w^H g_d
  const VectorXcd gr = ch.G_r.adjoint() * wk;
  const double ref = std::abs(gd) > 0.0 ? std::arg(gd) : 0.0;
  const int N = ch.num_elements();
  VectorXd theta(N);
  for (int n = 0; n < N; ++n) theta[n] = model::wrap_phase(ref - std::arg(ch.g_u[k][n]) + std::arg(gr[n]));
  return theta;
}

double WitUserContext::snr(const VectorXd& a) const {
  const double sig = b.cwiseAbs().dot(a) + std::abs(g_d_eff);
  const double noise = sigma_v2 * Q_r.dot(a.cwiseAbs2()) + sigma_r2;
  return p_k * sig * sig / noise;
}

double WitUserContext::power(const VectorXd& a) const { return F.dot(a.cwiseAbs2()); }

WitUserContext make_user_context(const ChannelSet& ch, const VectorXcd& wk, double p_k, int k,
                                 const SystemParams& params) {
  check_user(ch, k);
  const double nw = wk.norm();
  if (!(nw > 0.0)) throw DomainError("make_user_context: zero receive beamformer");
  const VectorXcd w = wk / nw;
  WitUserContext c;
  c.g_d_eff = w.dot(ch.g_d[k]);
  c.g_r = ch.G_r.adjoint() * w;
  c.b = c.g_r.cwiseProduct(ch.g_u[k].conjugate());
  c.Q_r = c.g_r.cwiseAbs2();
  c.F = (p_k * ch.g_u[k].cwiseAbs2()).array() + params.sigma_v2;
  c.p_k = p_k;
  c.sigma_v2 = params.sigma_v2;
  c.sigma_r2 = params.sigma_r2;
  c.budget = params.active_ris;
  return c;
}

double taylor_majorant(double gamma, double n, double gamma_t, double n_t) {
  if (!(gamma_t > 0.0) || !(n_t > 0.0)) throw DomainError("taylor_majorant: expansion point must be positive");
  const double r = std::sqrt(n_t / gamma_t);
  return std::sqrt(gamma_t * n_t) + 0.5 * r * (gamma - gamma_t) + 0.5 / r * (n - n_t);
}

VectorXd sca_start(const WitUserContext& ctx, double a_max, double pr) {
  const int N = ctx.size();
  double c = 1.0;
  if (ctx.budget) {
    const double tot = a_max * a_max * ctx.F.sum();
    if (tot > 0.0) c = std::min(1.0, 0.9 * std::sqrt(std::max(pr, 0.0) / tot));
  }
  return VectorXd::Constant(N, c * a_max);
}

ScaResult sca_amplitudes(const WitUserContext& ctx, double a_max, double pr, double tol, int max_iter) {
  const int N = ctx.size();
  if (!(a_max >= 0.0) || !(pr >= 0.0)) throw DomainError("sca_amplitudes: a_max and pr must be >= 0");
  if (!(ctx.sigma_r2 > 0.0)) throw DomainError("sca_amplitudes: sigma_r2 must be > 0");
  ScaResult out;
  out.amp = sca_start(ctx, a_max, pr);
  if (ctx.budget && ctx.power(out.amp) > pr * (1.0 + 1e-12)) throw InfeasibleError("sca_amplitudes: no feasible start");
  const double gamma0 = ctx.snr(out.amp);
  out.trace.push_back(gamma0);
  // Nothing to optimize: a zero budget, a silent user or a vanishing channel.
  if (N == 0 || a_max == 0.0 || (ctx.budget && pr == 0.0) || ctx.p_k <= 0.0 || !(gamma0 > 0.0)) {
    if (ctx.budget && pr == 0.0) out.amp.setZero();
    out.trace.back() = ctx.snr(out.amp);
    return out;
  }

  // Scaled variables x = [gamma / gamma0, n / sigma_r2, a / a_max].
  const double sig_scale = std::sqrt(ctx.p_k / (gamma0 * ctx.sigma_r2));
  const double c0 = sig_scale * std::abs(ctx.g_d_eff);
  const VectorXd cvec = sig_scale * a_max * ctx.b.cwiseAbs();
  const VectorXd qn = (ctx.sigma_v2 * a_max * a_max / ctx.sigma_r2) * ctx.Q_r;
  const VectorXd qb = (a_max * a_max / std::max(pr, 1e-300)) * ctx.F;

  conic::ConicProblem base;
  base.n_scalar = N + 2;
  base.objective = VectorXd::Zero(N + 2);
  base.objective[0] = 1.0;
  if (ctx.budget) {
    conic::QuadraticConstraint q;
    q.Q = MatrixXd::Zero(N + 2, N + 2);
    q.Q.diagonal().tail(N) = qb;
    q.q = VectorXd::Zero(N + 2);
    q.c = 1.0;
    base.quadratics.push_back(std::move(q));
  }
  {
    conic::QuadraticConstraint q;
    q.Q = MatrixXd::Zero(N + 2, N + 2);
    q.Q.diagonal().tail(N) = qn;
    q.q = VectorXd::Zero(N + 2);
    q.q[1] = -1.0;
    q.c = -1.0;
    base.quadratics.push_back(std::move(q));
  }
  for (int n = 0; n < N; ++n) {
    conic::LinearConstraint hi, lo;
    hi.a = VectorXd::Zero(N + 2);
    hi.a[2 + n] = 1.0;
    hi.b = 1.0;
    lo.a = VectorXd::Zero(N + 2);
    lo.a[2 + n] = -1.0;
    lo.b = 0.0;
    base.inequalities.push_back(std::move(hi));
    base.inequalities.push_back(std::move(lo));
  }

  VectorXd phi = out.amp / a_max;
  double g_t = 1.0;
  double n_t = 1.0 + qn.dot(phi.cwiseAbs2());
  for (int it = 1; it <= max_iter; ++it) {
    conic::ConicProblem prob = base;
    const double r = std::sqrt(n_t / g_t);
    conic::LinearConstraint lin;  // G(gamma, n; t) <= c0 + c' a
    lin.a = VectorXd::Zero(N + 2);
    lin.a[0] = 0.5 * r;
    lin.a[1] = 0.5 / r;
    lin.a.tail(N) = -cvec;
    lin.b = c0;
    prob.inequalities.push_back(lin);

    // Strictly interior start pulled off the box faces and the budget.
    VectorXd s = 0.9 * phi.array() + 0.05;
    if (ctx.budget) {
      const double used = qb.dot(s.cwiseAbs2());
      if (used > 0.0) s *= std::min(1.0, 0.95 / std::sqrt(used));
    }
    VectorXd x0(N + 2);
    x0.tail(N) = s;
    x0[1] = 1.0 + qn.dot(s.cwiseAbs2()) + 0.1;
    const double lhs = c0 + cvec.dot(s);
    x0[0] = (0.9 * lhs - lin.a[1] * x0[1]) / lin.a[0];
    prob.x0 = x0;

    conic::ConicSolution sol = conic::solve(prob, 1e-10);
    if (sol.report.status != conic::Status::Optimal) {
      if (sol.report.status == conic::Status::Infeasible)
        throw InfeasibleError("sca_amplitudes: inner problem " + std::to_string(it) + " infeasible");
      throw NumericalError("sca_amplitudes: inner problem " + std::to_string(it) + ": " + sol.report.message);
    }
    out.iterations = it;
    const double g_new = sol.x[0];
    // The previous iterate is feasible for this subproblem, so only solver
    // noise can lower the objective; keep the incumbent then.
    if (g_new < g_t) break;
    const double change = (g_new - g_t) / g_t;
    g_t = g_new;
    n_t = std::max(sol.x[1], 1.0);
    phi = sol.x.tail(N).cwiseMax(0.0).cwiseMin(1.0);
    out.trace.push_back(gamma0 * g_t);
    if (change < tol) break;
  }

  out.amp = a_max * phi;
  if (ctx.budget) {
    const double used = ctx.power(out.amp);
    if (used > pr) out.amp *= std::sqrt(pr / used);
  }
  return out;
}

WitProfileResult wit_ris_profile(const ChannelSet& ch, const VectorXcd& wk, double p_k, int k,
                                 const SystemParams& params, double tol, int max_iter) {
  WitProfileResult r;
  const WitUserContext ctx = make_user_context(ch, wk, p_k, k, params);
  r.sca = sca_amplitudes(ctx, params.a_max, params.pr, tol, max_iter);
  r.profile.amp = r.sca.amp;
  r.profile.phase = optimal_phase_shifts(ch, wk, k);
  return r;
}

}  // namespace arwpcn::wit
