#include <doctest.h>

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "errors.hpp"
#include "experiments.hpp"

using namespace arwpcn;
using namespace arwpcn::experiments;

namespace {

config::Config small_config(int realizations = 3) {
  config::Config c;
  c.realizations = realizations;
  c.seed = 11;
  c.threads = 2;
  return c;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

TEST_CASE("family names and default grids") {
  CHECK(family_from_string("P0") == Family::TransmitPower);
  CHECK(family_from_string("xr") == Family::Location);
  CHECK(family_from_string("convergence") == Family::Convergence);
  CHECK_THROWS_AS(family_from_string("snr"), DomainError);
  CHECK(default_values(Family::TransmitPower) == std::vector<double>{0, 5, 10, 15, 20, 25, 30});
  CHECK(default_values(Family::Elements).front() == 2);
  CHECK(default_values(Family::Elements).back() == 20);
  CHECK(default_values(Family::Users).size() == 10);
  CHECK(default_values(Family::Location) == std::vector<double>{1, 4, 7, 10, 13, 16, 19});
  CHECK(default_values(Family::Convergence).empty());
}

TEST_CASE("point parameters follow the family and the scheme") {
  SweepSpec spec;
  spec.base = small_config();
  spec.family = Family::TransmitPower;
  CHECK(point_params(spec, ao::Scheme::ActiveMA, 10.0).p0 == doctest::Approx(0.01).epsilon(1e-12));
  const auto sa = point_params(spec, ao::Scheme::ActiveSA, 10.0);
  CHECK(sa.M == 1);
  CHECK(sa.L == 1);
  const auto pas = point_params(spec, ao::Scheme::PassiveMA, 10.0);
  CHECK(pas.N == 100);
  CHECK_FALSE(pas.active_ris);
  CHECK(pas.sigma_v2 == 0.0);
  CHECK(pas.a_max == 1.0);

  spec.family = Family::Elements;
  CHECK(point_params(spec, ao::Scheme::PassiveMA, 6.0).N == 6);
  CHECK(point_params(spec, ao::Scheme::ActiveMA, 6.0).K == 4);
  spec.base.k_tracks_n = true;
  CHECK(point_params(spec, ao::Scheme::ActiveMA, 6.0).K == 6);
  CHECK_THROWS_AS(point_params(spec, ao::Scheme::ActiveMA, 2.5), DomainError);

  spec.family = Family::Location;
  CHECK(point_params(spec, ao::Scheme::ActiveMA, 4.0).geometry.x_r == 4.0);
  spec.family = Family::Users;
  CHECK(point_params(spec, ao::Scheme::ActiveMA, 7.0).K == 7);
}

TEST_CASE("sweep CSV layout and mean rows") {
  SweepSpec spec;
  spec.base = small_config();
  spec.family = Family::Users;
  spec.values = {1, 3};
  spec.schemes = {ao::Scheme::ActiveMA, ao::Scheme::ActiveSA};
  spec.omit_timing = true;
  const auto rows = run_sweep(spec);
  REQUIRE(rows.size() == 2u * 2u * (3u + 1u));
  CHECK(all_ok(rows));

  const std::string csv = to_csv(rows);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  CHECK(line == "family,scheme,sweep_value,realization,seed,sum_rate_bits,tau0,outer_iters,wall_ms,status");

  // realization rows then the mean, schemes outermost
  std::vector<std::vector<std::string>> cells;
  while (std::getline(in, line)) cells.push_back(split(line));
  REQUIRE(cells.size() == rows.size());
  const char* expect_real[] = {"0", "1", "2", "mean"};
  for (std::size_t i = 0; i < cells.size(); ++i) {
    CAPTURE(i);
    REQUIRE(cells[i].size() == 10u);
    CHECK(cells[i][0] == "k");
    CHECK(cells[i][1] == (i < 8 ? "active_ma" : "active_sa"));
    CHECK(cells[i][2] == ((i / 4) % 2 == 0 ? "1" : "3"));
    CHECK(cells[i][3] == expect_real[i % 4]);
    if (i % 4 < 3) CHECK(cells[i][4] == std::to_string(11 + i % 4));
    CHECK(cells[i][8] == "0");
    CHECK(cells[i][9] == "ok");
  }

  for (std::size_t g = 0; g < rows.size(); g += 4) {
    double sum = 0.0, tau = 0.0, it = 0.0;
    for (int r = 0; r < 3; ++r) {
      CHECK(rows[g + r].realization == r);
      CHECK(rows[g + r].sum_rate > 0.0);
      sum += rows[g + r].sum_rate;
      tau += rows[g + r].tau0;
      it += rows[g + r].outer_iters;
    }
    const Row& m = rows[g + 3];
    CHECK(m.realization == -1);
    CHECK(std::abs(m.sum_rate - sum / 3) <= 1e-12 * std::abs(m.sum_rate));
    CHECK(std::abs(m.tau0 - tau / 3) <= 1e-12);
    CHECK(std::abs(m.outer_iters - it / 3) <= 1e-12);
  }
  // printed values parse back exactly
  CHECK(std::stod(cells[0][5]) == rows[0].sum_rate);
}

TEST_CASE("omitting timing makes sweeps byte-reproducible across thread counts") {
  SweepSpec spec;
  spec.base = small_config(4);
  spec.family = Family::Location;
  spec.values = {4, 16};
  spec.omit_timing = true;
  spec.base.threads = 1;
  const std::string a = to_csv(run_sweep(spec));
  spec.base.threads = 4;
  const std::string b = to_csv(run_sweep(spec));
  CHECK(a == b);
  spec.omit_timing = false;
  const auto timed = run_sweep(spec);
  CHECK(timed.front().wall_ms > 0.0);
}

TEST_CASE("convergence rows are per sweep and nondecreasing") {
  SweepSpec spec;
  spec.base = small_config(3);
  spec.family = Family::Convergence;
  spec.omit_timing = true;
  const auto rows = run_sweep(spec);
  std::map<int, std::vector<const Row*>> by_real;
  std::vector<const Row*> means;
  for (const Row& r : rows) {
    CHECK(r.family == "convergence");
    (r.realization < 0 ? means : by_real[r.realization]).push_back(&r);
  }
  REQUIRE(by_real.size() == 3u);
  std::size_t longest = 0;
  for (const auto& [r, seq] : by_real) {
    CAPTURE(r);
    REQUIRE(seq.size() >= 2u);
    longest = std::max(longest, seq.size());
    CHECK(static_cast<double>(seq.size() - 1) == seq.front()->outer_iters);
    for (std::size_t t = 0; t < seq.size(); ++t) {
      CHECK(seq[t]->sweep_value == static_cast<double>(t));
      if (t > 0) CHECK(seq[t]->sum_rate >= seq[t - 1]->sum_rate);
    }
    // index 0 is the initial point, the last index the converged rate
    const SingleRun single = run_single(spec.base, ao::Scheme::ActiveMA, spec.base.seed + r, true);
    CHECK(seq.front()->sum_rate == single.solution.initial_sum_rate);
    CHECK(seq.back()->sum_rate == single.solution.sum_rate);
  }
  REQUIRE(means.size() == longest);
  for (std::size_t t = 0; t < means.size(); ++t) {
    double sum = 0.0;
    for (const auto& [r, seq] : by_real) sum += seq[std::min(t, seq.size() - 1)]->sum_rate;
    CHECK(std::abs(means[t]->sum_rate - sum / 3) <= 1e-12 * sum);
    if (t > 0) CHECK(means[t]->sum_rate >= means[t - 1]->sum_rate);
  }
}

TEST_CASE("single runs are deterministic and match sweep rows") {
  const config::Config c = small_config();
  const SingleRun a = run_single(c, ao::Scheme::ActiveMA, 42, true);
  const SingleRun b = run_single(c, ao::Scheme::ActiveMA, 42, true);
  CHECK(to_csv({a.row}) == to_csv({b.row}));
  CHECK(summary(a) == summary(b));
  CHECK(a.row.status == "ok");
  CHECK(a.row.family == "single");
  CHECK(summary(a).find("sum_rate") != std::string::npos);
  CHECK(a.evaluation.feasible());

  SweepSpec spec;
  spec.base = c;
  spec.base.seed = 42;
  spec.base.realizations = 1;
  spec.family = Family::Users;
  spec.values = {4};
  spec.omit_timing = true;
  const auto rows = run_sweep(spec);
  CHECK(rows.front().sum_rate == a.row.sum_rate);
  CHECK(rows.front().tau0 == a.row.tau0);
}

TEST_CASE("sweep argument errors") {
  SweepSpec spec;
  spec.base = small_config();
  spec.family = Family::Users;
  spec.values = {3, 1};
  CHECK_THROWS_AS(run_sweep(spec), DomainError);
  spec.values = {0};
  CHECK_THROWS_AS(run_sweep(spec), DomainError);
  spec.values = {1};
  spec.schemes.clear();
  CHECK_THROWS_AS(run_sweep(spec), DomainError);
  spec.schemes = {ao::Scheme::ActiveMA};
  spec.base.realizations = 0;
  CHECK_THROWS_AS(run_sweep(spec), DomainError);
}

TEST_CASE("failed rows render as empty numeric cells") {
  Row r;
  r.family = "p0";
  r.scheme = "active_ma";
  r.sweep_value = 5;
  r.realization = 2;
  r.seed = 9;
  r.sum_rate = r.tau0 = r.outer_iters = r.wall_ms = std::nan("");
  r.status = "infeasible";
  CHECK(to_csv({r}) == csv_header() + "p0,active_ma,5,2,9,,,,,infeasible\n");
  CHECK_FALSE(all_ok({r}));
}

TEST_CASE("write_csv reports unwritable paths") {
  CHECK_THROWS_AS(write_csv({}, "/nonexistent/dir/out.csv"), IoError);
  const std::string path = "test_experiments_out.csv";
  write_csv({}, path);
  std::ifstream f(path);
  std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  CHECK(content == csv_header());
  std::remove(path.c_str());
}
