#pragma once

// Monte Carlo sweeps over the five experiment families and their CSV output.
//
// CSV columns: family, scheme, sweep_value, realization, seed, sum_rate_bits,
// tau0, outer_iters, wall_ms, status. Each (scheme, value) group of
// realization rows is followed by a row with realization "mean" that averages
// the group's successful rows. Convergence rows carry the sweep index in
// sweep_value (0 is the initial point) and the sum-rate after that sweep.

#include <cstdint>
#include <string>
#include <vector>

#include "ao.hpp"
#include "config.hpp"

namespace arwpcn::experiments {

enum class Family { Convergence, TransmitPower, Elements, Users, Location };

/// "convergence", "p0", "n", "k", "xr".
const char* to_string(Family f);
Family family_from_string(const std::string& name);
/// Convergence: {} (the sweep index is implicit); p0: 0..30 dBm step 5;
/// n: 2..20 step 2; k: 1..10; xr: 1..19 m step 3.
std::vector<double> default_values(Family f);

struct SweepSpec {
  Family family = Family::Convergence;
  std::vector<double> values;  // empty means default_values(family)
  std::vector<ao::Scheme> schemes{ao::Scheme::ActiveMA};
  config::Config base;
  bool omit_timing = false;  // write wall_ms as 0 for byte-reproducible output
};

struct Row {
  std::string family;
  std::string scheme;
  double sweep_value = 0.0;
  int realization = 0;  // -1 marks a mean row
  std::uint64_t seed = 0;
  double sum_rate = 0.0;
  double tau0 = 0.0;
  double outer_iters = 0.0;
  double wall_ms = 0.0;
  std::string status = "ok";
};

/// System parameters of one sweep point for one scheme.
model::SystemParams point_params(const SweepSpec& spec, ao::Scheme scheme, double value);

/// Solver failures become rows with a status other than "ok" ("infeasible",
/// "numerical", "rank_one", "domain", "error", or "constraint_violation" when
/// the returned point fails the feasibility report at 1e-8).
std::vector<Row> run_sweep(const SweepSpec& spec);

bool all_ok(const std::vector<Row>& rows);
std::string csv_header();
std::string to_csv(const std::vector<Row>& rows);
/// IoError naming the path on failure.
void write_csv(const std::vector<Row>& rows, const std::string& path);

struct SingleRun {
  model::SystemParams params;
  ao::Solution solution;
  ao::Evaluation evaluation;
  Row row;
};

/// One realization of one scheme at the configuration's point. Solver
/// failures propagate.
SingleRun run_single(const config::Config& cfg, ao::Scheme scheme, std::uint64_t seed, bool omit_timing = false);

/// Sum-rate, per-user rates, slot allocation and iteration count.
std::string summary(const SingleRun& run);

}  // namespace arwpcn::experiments
