// Command-line front end. Links only the C interface.
//
//   arwpcn run   --config cfg [--scheme active_ma] [--seed 1] [--out row.csv]
//   arwpcn sweep --family p0 --config cfg [--schemes a,b] [--values 0,10]
//                [--realizations R] [--seed S] [--threads T] [--omit-timing] --out out.csv
//
// Exit status: 0 on success (for sweeps, every row ok), 1 when a sweep
// produced failed rows or the solver failed, 2 on usage or configuration errors.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "arwpcn/arwpcn.h"

namespace {

int report(arwpcn_status s) {
  std::fprintf(stderr, "arwpcn: %s: %s\n", arwpcn_status_string(s), arwpcn_last_error());
  return s == ARWPCN_E_CONFIG || s == ARWPCN_E_ARGUMENT || s == ARWPCN_E_IO ? 2 : 1;
}

struct ConfigHandle {
  arwpcn_config* p = nullptr;
  ~ConfigHandle() { arwpcn_config_free(p); }
};

struct SolutionHandle {
  arwpcn_solution* p = nullptr;
  ~SolutionHandle() { arwpcn_solution_free(p); }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active-RIS WPCN sum-throughput optimizer"};
  app.require_subcommand(1);

  std::string config_path, scheme = "active_ma", out_path;
  std::optional<std::uint64_t> seed;
  auto* run = app.add_subcommand("run", "Solve one channel realization");
  run->add_option("--config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
  run->add_option("--scheme", scheme, "active_ma, active_sa, passive_ma or active_ma_uebf");
  run->add_option("--seed", seed, "Channel seed (default: the configuration's seed)");
  run->add_option("--out", out_path, "Write the result row as CSV");
  bool omit_timing = false;
  run->add_flag("--omit-timing", omit_timing, "Write wall_ms as 0");

  std::string family, schemes = "active_ma", values;
  std::optional<int> realizations, threads;
  auto* sweep = app.add_subcommand("sweep", "Monte Carlo sweep of one experiment family");
  sweep->add_option("--family", family, "convergence, p0, n, k or xr")->required();
  sweep->add_option("--config", config_path, "Configuration file")->required()->check(CLI::ExistingFile);
  sweep->add_option("--schemes", schemes, "Comma-separated scheme list");
  sweep->add_option("--values", values, "Comma-separated sweep values (default grid when omitted)");
  sweep->add_option("--realizations", realizations, "Override the configuration's realization count");
  sweep->add_option("--seed", seed, "Base seed; realization r uses seed + r");
  sweep->add_option("--threads", threads, "Worker threads (0 = hardware concurrency)");
  sweep->add_option("--out", out_path, "Output CSV")->required();
  sweep->add_flag("--omit-timing", omit_timing, "Write wall_ms as 0 for byte-reproducible output");

  CLI11_PARSE(app, argc, argv);

  ConfigHandle cfg;
  if (arwpcn_status s = arwpcn_config_load(config_path.c_str(), &cfg.p); s != ARWPCN_OK) return report(s);
  auto set = [&](const char* key, const std::string& v) { return arwpcn_config_set(cfg.p, key, v.c_str()); };

  if (*run) {
    std::uint64_t sd = 0;
    if (seed) {
      sd = *seed;
    } else {
      char buf[32];
      arwpcn_config_get(cfg.p, "seed", buf, sizeof buf, nullptr);
      sd = std::stoull(buf);
    }
    SolutionHandle sol;
    if (arwpcn_status s = arwpcn_solve(cfg.p, scheme.c_str(), sd, &sol.p); s != ARWPCN_OK) return report(s);
    std::fputs(arwpcn_solution_summary(sol.p), stdout);
    if (!out_path.empty())
      if (arwpcn_status s = arwpcn_solution_write_csv(sol.p, out_path.c_str(), omit_timing); s != ARWPCN_OK)
        return report(s);
    return arwpcn_solution_worst_violation(sol.p) >= -1e-8 ? 0 : 1;
  }

  if (realizations)
    if (arwpcn_status s = set("realizations", std::to_string(*realizations)); s != ARWPCN_OK) return report(s);
  if (seed)
    if (arwpcn_status s = set("seed", std::to_string(*seed)); s != ARWPCN_OK) return report(s);
  if (threads)
    if (arwpcn_status s = set("threads", std::to_string(*threads)); s != ARWPCN_OK) return report(s);

  int all_ok = 0;
  if (arwpcn_status s = arwpcn_sweep(cfg.p, family.c_str(), schemes.c_str(), values.c_str(), omit_timing,
                                     out_path.c_str(), &all_ok);
      s != ARWPCN_OK)
    return report(s);
  if (!all_ok) std::fprintf(stderr, "arwpcn: some rows did not complete; see the status column of %s\n", out_path.c_str());
  return all_ok ? 0 : 1;
}
