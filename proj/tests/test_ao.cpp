#include <cmath>
#include <random>

#include "ao.hpp"
#include "doctest.h"
#include "errors.hpp"
#include "oracles.hpp"

using namespace arwpcn;
using namespace arwpcn::model;
using arwpcn::ao::Scheme;

namespace {

void check_trace(const ao::Solution& s) {
  REQUIRE(!s.ao_trace.empty());
  CHECK(s.ao_trace.front() >= s.initial_sum_rate - 1e-6);
  for (std::size_t i = 1; i < s.ao_trace.size(); ++i) CHECK(s.ao_trace[i] >= s.ao_trace[i - 1] - 1e-6);
  CHECK(s.ao_trace.back() == s.sum_rate);
  CHECK(static_cast<int>(s.ao_trace.size()) == s.outer_iters);
}

SystemParams tiny() {
  SystemParams p;
  p.M = p.L = p.N = p.K = 1;
  return p;
}

}  // namespace

TEST_CASE("scheme names round-trip") {
  for (Scheme s : {Scheme::ActiveMA, Scheme::ActiveSA, Scheme::PassiveMA, Scheme::ActiveMAUebf})
    CHECK(ao::scheme_from_string(ao::to_string(s)) == s);
  CHECK(ao::scheme_from_string("Active-SA") == Scheme::ActiveSA);
  CHECK_THROWS_AS(ao::scheme_from_string("hybrid"), DomainError);
}

TEST_CASE("initialization is feasible, deterministic and productive") {
  SystemParams p;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const ChannelSet ch = generate_channels(p, seed);
    const ao::Solution s = ao::initialize(p, ch, seed);
    const ao::Evaluation ev = ao::evaluate(p, ch, s);
    CHECK(ev.feasible(1e-12));
    CHECK(s.sum_rate > 0.0);
    CHECK(ev.sum_rate == doctest::Approx(s.sum_rate).epsilon(1e-12));
    if (seed < 3) {
      const ao::Solution t = ao::initialize(p, ch, seed);
      CHECK(t.sum_rate == s.sum_rate);
      CHECK((t.phi0.phase - s.phi0.phase).norm() == 0.0);
    }
  }
}

TEST_CASE("AO on the default system converges monotonically and feasibly") {
  SystemParams p;
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const ChannelSet ch = generate_channels(p, seed);
    const ao::Solution s = ao::ao_solve(p, ch);
    check_trace(s);
    CHECK(s.outer_iters <= 15);
    CHECK(s.sum_rate > s.initial_sum_rate);
    const ao::Evaluation ev = ao::evaluate(p, ch, s);
    CHECK(ev.sum_rate == doctest::Approx(s.sum_rate).epsilon(1e-8));
    CHECK(s.rates.sum() == doctest::Approx(s.sum_rate).epsilon(1e-10));
    INFO("worst constraint: " << ev.worst_constraint());
    CHECK(ev.feasible(1e-8));
  }
}

TEST_CASE("AO is deterministic") {
  SystemParams p;
  const ChannelSet ch = generate_channels(p, 12);
  const ao::Solution a = ao::ao_solve(p, ch);
  const ao::Solution b = ao::ao_solve(p, ch);
  CHECK(a.sum_rate == b.sum_rate);
  CHECK(a.ao_trace == b.ao_trace);
  CHECK((a.w0 - b.w0).norm() == 0.0);
}

TEST_CASE("grid search over tau0 gives the same AO answer as the joint solve") {
  SystemParams p;
  const ChannelSet ch = generate_channels(p, 3);
  ao::AoOptions grid;
  grid.tau0_search = wet::Tau0Search::Grid;
  const ao::Solution a = ao::ao_solve(p, ch);
  const ao::Solution b = ao::ao_solve(p, ch, grid);
  CHECK(b.sum_rate == doctest::Approx(a.sum_rate).epsilon(0.01));
  check_trace(b);
}

TEST_CASE("without transmit power only RIS noise is harvested") {
  SystemParams p;
  p.p0 = 0.0;
  const ChannelSet ch = generate_channels(p, 2);
  const ao::Solution s = ao::ao_solve(p, ch);
  const ao::Solution powered = ao::ao_solve(SystemParams{}, ch);
  CHECK(s.sum_rate >= 0.0);
  CHECK(s.sum_rate < 1e-3 * powered.sum_rate);
  CHECK(ao::evaluate(p, ch, s).feasible());

  SystemParams q = ao::scheme_params(Scheme::PassiveMA, p, 0);
  const ChannelSet cq = generate_channels(q, 2);
  CHECK(ao::baseline_solve(Scheme::PassiveMA, q, cq).sum_rate == 0.0);
}

TEST_CASE("one-user single-element system matches the exhaustive grid") {
  const SystemParams p = tiny();
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const ChannelSet ch = generate_channels(p, 40 + seed);
    const ao::Solution s = ao::ao_solve(p, ch);
    const double grid = oracle::tiny_system_grid(p, ch, 50);
    CHECK(s.sum_rate == doctest::Approx(grid).epsilon(0.02));
    CHECK(ao::evaluate(p, ch, s).feasible());
  }
}

TEST_CASE("baselines apply their restrictions") {
  SystemParams p;
  const ChannelSet ch = generate_channels(p, 5);

  SystemParams sa = ao::scheme_params(Scheme::ActiveSA, p);
  CHECK(sa.M == 1);
  CHECK(sa.L == 1);
  CHECK_THROWS_AS(ao::baseline_solve(Scheme::ActiveSA, p, ch), DomainError);
  const ChannelSet csa = generate_channels(sa, 5);
  CHECK(ao::baseline_solve(Scheme::ActiveSA, sa, csa).sum_rate == ao::ao_solve(sa, csa).sum_rate);

  const SystemParams pa = ao::scheme_params(Scheme::PassiveMA, p, 0);
  CHECK(pa.N == p.N);
  CHECK(ao::scheme_params(Scheme::PassiveMA, p).N == 100);
  CHECK_THROWS_AS(ao::baseline_solve(Scheme::PassiveMA, p, ch), DomainError);
  const ChannelSet cpa = generate_channels(pa, 5);
  const ao::Solution ps = ao::baseline_solve(Scheme::PassiveMA, pa, cpa);
  CHECK(ps.phi0.amp.maxCoeff() <= 1.0 + 1e-9);
  for (const auto& r : ps.phik) CHECK(r.amp.maxCoeff() <= 1.0 + 1e-9);
  CHECK(ao::evaluate(pa, cpa, ps).feasible());
  check_trace(ps);

  const ao::Solution u = ao::baseline_solve(Scheme::ActiveMAUebf, p, ch);
  CHECK((u.w0 - VectorXcd::Constant(p.M, std::sqrt(p.p0 / p.M))).norm() == 0.0);
  CHECK(u.timing.transmit_ms == 0.0);
  const ao::Solution full = ao::ao_solve(p, ch);
  CHECK(full.sum_rate >= u.sum_rate * 0.98);
}

TEST_CASE("evaluate reports raw budgets for an empty solution") {
  SystemParams p;
  const ChannelSet ch = generate_channels(p, 1);
  ao::Solution z;
  z.w0 = VectorXcd::Zero(p.M);
  z.phi0 = RisProfile::zeros(p.N);
  for (int k = 0; k < p.K; ++k) {
    z.phik.push_back(RisProfile::zeros(p.N));
    z.wk.push_back(VectorXcd::Ones(p.L));
  }
  z.alloc.tau = VectorXd::Zero(p.K);
  z.alloc.e = VectorXd::Zero(p.K);
  const ao::Evaluation ev = ao::evaluate(p, ch, z);
  CHECK(ev.sum_rate == 0.0);
  CHECK(ev.feasible(0.0));
  for (const auto& c : ev.constraints) {
    if (c.name == "time budget") CHECK(c.slack == 1.0);
    if (c.name == "transmit power") CHECK(c.slack == p.p0);
    if (c.name == "WET amplification power") CHECK(c.slack == p.pr);
    if (c.name.rfind("WET amplitude", 0) == 0) CHECK(c.slack == p.a_max);
  }
  z.alloc.tau0 = 0.7;
  z.alloc.tau[0] = 0.5;
  const ao::Evaluation bad = ao::evaluate(p, ch, z);
  CHECK_FALSE(bad.feasible());
  CHECK(bad.worst_constraint() == "time budget");
  z.alloc.tau = VectorXd::Zero(p.K + 1);
  CHECK_THROWS_AS(ao::evaluate(p, ch, z), DomainError);
}

TEST_CASE("feasible random perturbations do not beat the AO point") {
  SystemParams p;
  const ChannelSet ch = generate_channels(p, 21);
  const ao::Solution s = ao::ao_solve(p, ch);
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 0.05);
  std::uniform_real_distribution<double> u(0.9, 1.0);
  int tried = 0;
  for (int t = 0; t < 100; ++t) {
    ao::Solution q = s;
    switch (t % 4) {
      case 0:  // WIT phases
        for (auto& r : q.phik) r.phase = r.phase.unaryExpr([&](double x) { return wrap_phase(x + g(rng)); });
        break;
      case 1:  // WIT amplitudes shrink
        for (auto& r : q.phik) r.amp *= u(rng);
        break;
      case 2: {  // move slot time between two users at fixed power
        const int i = t % p.K, j = (t / 4) % p.K;
        const double d = 0.02 * q.alloc.tau[i];
        const VectorXd pw = q.alloc.powers();
        q.alloc.tau[i] -= d;
        q.alloc.tau[j] += d;
        for (int k = 0; k < p.K; ++k) q.alloc.e[k] = pw[k] * q.alloc.tau[k];
        break;
      }
      default:  // WET phases with energies rescaled to the new harvest
        q.phi0.phase = q.phi0.phase.unaryExpr([&](double x) { return wrap_phase(x + g(rng)); });
        for (int k = 0; k < p.K; ++k)
          q.alloc.e[k] = std::min(q.alloc.e[k], harvested_energy(ch, q.w0, q.phi0, q.alloc.tau0, k, p));
        break;
    }
    const ao::Evaluation ev = ao::evaluate(p, ch, q);
    if (!ev.feasible()) continue;
    ++tried;
    CHECK(ev.sum_rate <= s.sum_rate * (1.0 + 1e-3));
  }
  CHECK(tried >= 50);
}
