#include <cmath>
#include <numbers>

#include "doctest.h"
#include "errors.hpp"
#include "wet_opt.hpp"

using namespace arwpcn;
using namespace arwpcn::model;
using arwpcn::wet::WetContext;

namespace {

constexpr double kPi = std::numbers::pi;

RisProfile uniform_profile(int n, double amp, double slope) {
  return RisProfile{VectorXd::Constant(n, amp), VectorXd::LinSpaced(n, 0.0, slope)};
}

// Fixed WIT side: moderate amplitudes and matched-filter receivers.
struct Fixture {
  SystemParams p;
  ChannelSet ch;
  std::vector<RisProfile> phik;
  std::vector<VectorXcd> wk;
  VectorXd eps;

  Fixture(const SystemParams& params, std::uint64_t seed) : p(params), ch(generate_channels(params, seed)) {
    for (int k = 0; k < p.K; ++k) {
      phik.push_back(uniform_profile(p.N, p.active_ris ? 2.0 : 1.0, 1.0 + 0.3 * k));
      wk.push_back(effective_uplink_channel(ch, phik.back(), k));
    }
    eps = wet::epsilon_coefficients(ch, wk, phik, p);
  }

  WetContext context(double tau0 = 0.5) const {
    return WetContext{ch,
                      VectorXcd::Constant(p.M, std::sqrt(p.p0 / p.M)),
                      uniform_profile(p.N, p.active_ris ? 1.0 : 1.0, 0.0),
                      phik,
                      wk,
                      eps,
                      tau0};
  }
};

// Best (tau, e) for one user with tau0 and w0 fixed: every remaining slot goes
// to the user and the energy is the smaller of harvest and WIT budget.
double single_user_value(const Fixture& f, const VectorXcd& w0, const RisProfile& phi0, double tau0) {
  const double tau = 1.0 - tau0;
  const double E = harvested_energy(f.ch, w0, phi0, tau0, 0, f.p);
  const VectorXcd c = f.phik[0].coefficients();
  const double gain = c.cwiseProduct(f.ch.g_u[0]).squaredNorm();
  const double noise = f.p.sigma_v2 * c.squaredNorm();
  double e = E;
  if (gain > 0.0) e = std::min(e, tau * (f.p.pr - noise) / gain);
  return tau * std::log2(1.0 + f.eps[0] * e / tau);
}

void check_wit_budget(const Fixture& f, const VectorXd& tau, const VectorXd& e) {
  for (int k = 0; k < f.p.K; ++k) {
    const VectorXcd c = f.phik[k].coefficients();
    const double lhs = e[k] * c.cwiseProduct(f.ch.g_u[k]).squaredNorm() + tau[k] * f.p.sigma_v2 * c.squaredNorm();
    CHECK(lhs <= tau[k] * f.p.pr + 1e-8);
  }
}

}  // namespace

TEST_CASE("epsilon reduces to the matched-filter gain without reflection") {
  SystemParams p;
  const ChannelSet ch = generate_channels(p, 3);
  std::vector<RisProfile> phik(p.K, RisProfile::zeros(p.N));
  std::vector<VectorXcd> wk;
  for (int k = 0; k < p.K; ++k) wk.push_back(ch.g_d[k] / ch.g_d[k].norm());
  const VectorXd eps = wet::epsilon_coefficients(ch, wk, phik, p);
  for (int k = 0; k < p.K; ++k)
    CHECK(eps[k] == doctest::Approx(ch.g_d[k].squaredNorm() / p.sigma_r2).epsilon(1e-10));
}

TEST_CASE("epsilon is scale invariant and consistent with the uplink SNR") {
  SystemParams p;
  const Fixture f(p, 5);
  std::vector<VectorXcd> scaled = f.wk;
  for (auto& w : scaled) w *= std::polar(3.0, kPi / 7.0);
  const VectorXd eps2 = wet::epsilon_coefficients(f.ch, scaled, f.phik, p);
  for (int k = 0; k < p.K; ++k) {
    CHECK(eps2[k] == doctest::Approx(f.eps[k]).epsilon(1e-10));
    for (double pk : {0.1, 1.0, 10.0})
      CHECK(uplink_snr(f.ch, f.phik[k], f.wk[k], pk, k, p) / pk == doctest::Approx(f.eps[k]).epsilon(1e-10));
  }
  std::vector<VectorXcd> bad = f.wk;
  bad[1].setZero();
  CHECK_THROWS_AS(wet::epsilon_coefficients(f.ch, bad, f.phik, p), DomainError);
}

TEST_CASE("rate objective treats empty slots as zero") {
  VectorXd eps(2), tau(2), e(2);
  eps << 3.0, 5.0;
  tau << 0.5, 0.0;
  e << 0.5, 0.2;
  CHECK(wet::rate_objective(eps, tau, e) == doctest::Approx(0.5 * std::log2(4.0)));
}

TEST_CASE("single antenna without reflection transmits at full power") {
  SystemParams p;
  p.M = 1;
  p.K = 1;
  Fixture f(p, 8);
  WetContext ctx = f.context();
  ctx.phi0 = RisProfile::zeros(p.N);
  const auto r = wet::solve_transmit_beamforming(ctx, p);
  CHECK(std::abs(r.w0[0]) == doctest::Approx(std::sqrt(p.p0)).epsilon(1e-6));
  CHECK(r.objective > 0.0);
}

TEST_CASE("transmit beamforming returns a feasible rank-one point") {
  SystemParams p;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Fixture f(p, seed);
    const WetContext ctx = f.context(0.4);
    const auto r = wet::solve_transmit_beamforming(ctx, p);
    CHECK(r.rank_residual <= 1e-6);
    CHECK_FALSE(r.projected);
    CHECK(r.w0.squaredNorm() <= p.p0 * (1.0 + 1e-8));
    CHECK(0.4 + r.tau.sum() <= 1.0 + 1e-8);
    CHECK((r.tau.array() >= -1e-12).all());
    CHECK((r.e.array() >= -1e-12).all());
    for (int k = 0; k < p.K; ++k) {
      const double E = harvested_energy(f.ch, r.w0, ctx.phi0, 0.4, k, p);
      CHECK(r.e[k] <= E + 1e-8 * std::max(1.0, E));
    }
    check_wit_budget(f, r.tau, r.e);
    CHECK(r.objective == doctest::Approx(wet::rate_objective(f.eps, r.tau, r.e)).epsilon(1e-9));
  }
}

TEST_CASE("transmit beamforming matches a grid over the two-antenna sphere") {
  SystemParams p;
  p.M = 2;
  p.K = 1;
  for (std::uint64_t seed = 20; seed < 23; ++seed) {
    Fixture f(p, seed);
    const WetContext ctx = f.context(0.5);
    const auto r = wet::solve_transmit_beamforming(ctx, p);
    // Full power is optimal, and a common phase is irrelevant.
    double best = 0.0;
    const int n = 300;
    for (int i = 0; i <= n; ++i) {
      const double a = 0.5 * kPi * i / n;
      for (int j = 0; j < n; ++j) {
        VectorXcd w(2);
        w << std::cos(a), std::polar(std::sin(a), 2.0 * kPi * j / n);
        best = std::max(best, single_user_value(f, std::sqrt(p.p0) * w, ctx.phi0, 0.5));
      }
    }
    CHECK(r.objective >= best * (1.0 - 1e-6));
    CHECK(r.objective <= best * 1.01);
  }
}

TEST_CASE("subproblems do not fall below the incoming iterate") {
  SystemParams p;
  for (std::uint64_t seed = 30; seed < 36; ++seed) {
    Fixture f(p, seed);
    WetContext ctx = f.context(0.5);
    const double incoming = wet::optimize_allocation(ctx, p, true).objective;
    const auto t = wet::solve_transmit_beamforming(ctx, p);
    CHECK(t.objective >= incoming - 1e-6);
    ctx.w0 = t.w0;
    const double before = wet::optimize_allocation(ctx, p, false).objective;
    wet::WetRisOptions opt;
    opt.rank_policy = wet::RankOnePolicy::Project;
    const auto r = wet::optimize_wet_ris_and_allocation(ctx, p, opt);
    CHECK(r.objective >= before - 1e-6);
    CHECK(r.relaxed_objective >= r.objective - 1e-6);
  }
}

TEST_CASE("reflection result satisfies amplitude, budget and energy contracts") {
  SystemParams p;
  wet::WetRisOptions opt;
  opt.rank_policy = wet::RankOnePolicy::Project;
  for (std::uint64_t seed = 40; seed < 46; ++seed) {
    Fixture f(p, seed);
    const WetContext ctx = f.context();
    const auto r = wet::optimize_wet_ris_and_allocation(ctx, p, opt);
    CHECK((r.phi0.amp.array() <= p.a_max + 1e-8).all());
    CHECK((r.phi0.amp.array() >= 0.0).all());
    CHECK(wet_amplification_power(f.ch, r.phi0, p) <= p.pr + 1e-8);
    CHECK(r.alloc.tau0 + r.alloc.tau.sum() <= 1.0 + 1e-8);
    for (int k = 0; k < p.K; ++k) {
      const double E = harvested_energy(f.ch, ctx.w0, r.phi0, r.alloc.tau0, k, p);
      CHECK(r.alloc.e[k] <= E + 1e-8 * std::max(1.0, E));
    }
    check_wit_budget(f, r.alloc.tau, r.alloc.e);
    CHECK(r.objective == doctest::Approx(wet::rate_objective(f.eps, r.alloc.tau, r.alloc.e)).epsilon(1e-9));
  }
}

TEST_CASE("coarse and fine tau0 grids agree and the joint search dominates") {
  SystemParams p;
  wet::WetRisOptions coarse;
  coarse.search = wet::Tau0Search::Grid;
  coarse.rank_policy = wet::RankOnePolicy::Project;
  wet::WetRisOptions fine = coarse;
  fine.delta = 0.005;
  fine.refine = false;
  wet::WetRisOptions joint;
  joint.rank_policy = wet::RankOnePolicy::Project;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Fixture f(p, 100 + seed);
    const WetContext ctx = f.context();
    const auto a = wet::optimize_wet_ris_and_allocation(ctx, p, coarse);
    const auto b = wet::optimize_wet_ris_and_allocation(ctx, p, fine);
    const auto j = wet::optimize_wet_ris_and_allocation(ctx, p, joint);
    CHECK(std::abs(a.alloc.tau0 - b.alloc.tau0) <= 0.02 + 1e-12);
    CHECK(std::abs(a.objective - b.objective) <= 0.005 * b.objective);
    // The joint solve maximizes the relaxation exactly over tau0.
    CHECK(j.relaxed_objective >= a.relaxed_objective * (1.0 - 1e-6));
  }
}

TEST_CASE("grid ties go to the smallest tau0 and the grid is recorded") {
  SystemParams p;
  Fixture f(p, 9);
  wet::WetRisOptions opt;
  opt.search = wet::Tau0Search::Grid;
  opt.delta = 0.25;
  opt.refine = false;
  opt.rank_policy = wet::RankOnePolicy::Project;
  const auto r = wet::optimize_wet_ris_and_allocation(f.context(), p, opt);
  REQUIRE(r.grid.size() == 5);
  CHECK(r.grid.front().first == 0.0);
  CHECK(r.grid.front().second == 0.0);
  CHECK(r.grid.back().second == 0.0);
  double best = 0.0;
  for (const auto& [t, v] : r.grid) best = std::max(best, v);
  CHECK(r.objective == doctest::Approx(best));
  opt.delta = 0.0;
  CHECK_THROWS_AS(wet::optimize_wet_ris_and_allocation(f.context(), p, opt), DomainError);
}

TEST_CASE("vanishing transmit power leaves only the RIS noise to harvest") {
  SystemParams p;
  p.p0 = 0.0;
  Fixture f(p, 4);
  const WetContext ctx = f.context();
  wet::WetRisOptions opt;
  opt.rank_policy = wet::RankOnePolicy::Project;
  // Amplified noise carries about sigma_v^2 a^2 |h_u|^2 per element, so the
  // rate is positive but negligible.
  const auto t = wet::solve_transmit_beamforming(ctx, p);
  CHECK(t.w0.norm() == 0.0);
  CHECK(t.objective >= 0.0);
  CHECK(t.objective < 1e-4);
  const auto r = wet::optimize_wet_ris_and_allocation(ctx, p, opt);
  CHECK(r.objective < 1e-4);
  CHECK(r.alloc.e.maxCoeff() < 1e-9);

  SystemParams passive = p;
  passive.sigma_v2 = 0.0;
  Fixture g(passive, 4);
  const auto z = wet::solve_transmit_beamforming(g.context(), passive);
  CHECK(z.objective == 0.0);
  CHECK(z.e.norm() == 0.0);

  // Shrinking P0 drives the objective down to that floor.
  double last = 1e300;
  for (double p0 : {1e-3, 1e-6, 1e-9}) {
    SystemParams q = p;
    q.p0 = p0;
    Fixture h(q, 4);
    const auto s = wet::optimize_wet_ris_and_allocation(h.context(), q, opt);
    CHECK(s.objective < last);
    last = s.objective;
  }
  CHECK(last < 1e-3);
}

TEST_CASE("context errors are reported") {
  SystemParams p;
  Fixture f(p, 1);
  WetContext ctx = f.context();
  ctx.w0 = VectorXcd::Zero(p.M + 1);
  CHECK_THROWS_AS(wet::solve_transmit_beamforming(ctx, p), DomainError);
  WetContext neg = f.context();
  neg.eps[0] = -1.0;
  CHECK_THROWS_AS(wet::optimize_wet_ris_and_allocation(neg, p), DomainError);
}
