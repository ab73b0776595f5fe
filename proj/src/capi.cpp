#include "arwpcn/arwpcn.h"

#include <cstring>
#include <exception>
#include <sstream>
#include <string>

#include "config.hpp"
#include "errors.hpp"
#include "experiments.hpp"

using namespace arwpcn;

struct arwpcn_config {
  config::Config cfg;
};

struct arwpcn_solution {
  experiments::SingleRun run;
  std::string summary;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_error_key;

arwpcn_status fail(arwpcn_status s, const std::string& msg, const std::string& key = {}) {
  g_error = msg;
  g_error_key = key;
  return s;
}

// Maps the core's exception hierarchy to status codes.
template <class F>
arwpcn_status guarded(F&& f) {
  try {
    f();
    g_error.clear();
    g_error_key.clear();
    return ARWPCN_OK;
  } catch (const ConfigError& e) {
    return fail(ARWPCN_E_CONFIG, e.what(), e.key());
  } catch (const IoError& e) {
    return fail(ARWPCN_E_IO, e.what());
  } catch (const RankOneViolation& e) {
    return fail(ARWPCN_E_RANK_ONE, e.what());
  } catch (const InfeasibleError& e) {
    return fail(ARWPCN_E_INFEASIBLE, e.what());
  } catch (const NumericalError& e) {
    return fail(ARWPCN_E_NUMERICAL, e.what());
  } catch (const DomainError& e) {
    return fail(ARWPCN_E_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(ARWPCN_E_INTERNAL, e.what());
  } catch (...) {
    return fail(ARWPCN_E_INTERNAL, "unknown exception");
  }
}

std::vector<std::string> split(const char* list) {
  std::vector<std::string> out;
  if (!list) return out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

double parse_value(const std::string& s) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != s.size()) throw DomainError("sweep value '" + s + "' is not a number");
  return x;
}

bool valid_user(const arwpcn_solution* sol, int k) {
  return sol && k >= 0 && k < static_cast<int>(sol->run.solution.rates.size());
}

}  // namespace

extern "C" {

const char* arwpcn_status_string(arwpcn_status s) {
  switch (s) {
    case ARWPCN_OK: return "ok";
    case ARWPCN_E_ARGUMENT: return "invalid argument";
    case ARWPCN_E_CONFIG: return "configuration error";
    case ARWPCN_E_IO: return "i/o error";
    case ARWPCN_E_INFEASIBLE: return "infeasible subproblem";
    case ARWPCN_E_NUMERICAL: return "numerical failure";
    case ARWPCN_E_RANK_ONE: return "rank-one violation";
    case ARWPCN_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* arwpcn_last_error(void) { return g_error.c_str(); }
const char* arwpcn_last_error_key(void) { return g_error_key.c_str(); }

arwpcn_status arwpcn_config_default(arwpcn_config** out) {
  if (!out) return fail(ARWPCN_E_ARGUMENT, "null output pointer");
  return guarded([&] { *out = new arwpcn_config{}; });
}

arwpcn_status arwpcn_config_load(const char* path, arwpcn_config** out) {
  if (!path || !out) return fail(ARWPCN_E_ARGUMENT, "null argument");
  return guarded([&] { *out = new arwpcn_config{config::load(path)}; });
}

arwpcn_status arwpcn_config_parse(const char* text, arwpcn_config** out) {
  if (!text || !out) return fail(ARWPCN_E_ARGUMENT, "null argument");
  return guarded([&] { *out = new arwpcn_config{config::parse(text)}; });
}

arwpcn_status arwpcn_config_set(arwpcn_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return fail(ARWPCN_E_ARGUMENT, "null argument");
  return guarded([&] { config::set(cfg->cfg, key, value); });
}

arwpcn_status arwpcn_config_get(const arwpcn_config* cfg, const char* key, char* buf, size_t size, size_t* needed) {
  if (!cfg || !key || (!buf && size > 0)) return fail(ARWPCN_E_ARGUMENT, "null argument");
  return guarded([&] {
    const std::string v = config::get(cfg->cfg, key);
    if (needed) *needed = v.size();
    if (size > 0) {
      const std::size_t n = std::min(v.size(), size - 1);
      std::memcpy(buf, v.data(), n);
      buf[n] = '\0';
    }
  });
}

arwpcn_status arwpcn_config_write(const arwpcn_config* cfg, const char* path) {
  if (!cfg || !path) return fail(ARWPCN_E_ARGUMENT, "null argument");
  return guarded([&] {
    std::FILE* f = std::fopen(path, "wb");
    if (!f) throw IoError(std::string("cannot write config file '") + path + "'");
    const std::string text = config::to_text(cfg->cfg);
    const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
    if (std::fclose(f) != 0 || !ok) throw IoError(std::string("failed while writing config file '") + path + "'");
  });
}

void arwpcn_config_free(arwpcn_config* cfg) { delete cfg; }

arwpcn_status arwpcn_solve(const arwpcn_config* cfg, const char* scheme, uint64_t seed, arwpcn_solution** out) {
  if (!cfg || !scheme || !out) return fail(ARWPCN_E_ARGUMENT, "null argument");
  *out = nullptr;
  return guarded([&] {
    auto* sol = new arwpcn_solution{experiments::run_single(cfg->cfg, ao::scheme_from_string(scheme), seed), {}};
    sol->summary = experiments::summary(sol->run);
    *out = sol;
  });
}

void arwpcn_solution_free(arwpcn_solution* sol) { delete sol; }

double arwpcn_solution_sum_rate(const arwpcn_solution* sol) { return sol ? sol->run.solution.sum_rate : 0.0; }
double arwpcn_solution_initial_sum_rate(const arwpcn_solution* sol) {
  return sol ? sol->run.solution.initial_sum_rate : 0.0;
}
int arwpcn_solution_num_users(const arwpcn_solution* sol) {
  return sol ? static_cast<int>(sol->run.solution.rates.size()) : 0;
}
double arwpcn_solution_rate(const arwpcn_solution* sol, int k) {
  return valid_user(sol, k) ? sol->run.solution.rates[k] : 0.0;
}
double arwpcn_solution_tau0(const arwpcn_solution* sol) { return sol ? sol->run.solution.alloc.tau0 : 0.0; }
double arwpcn_solution_tau(const arwpcn_solution* sol, int k) {
  return valid_user(sol, k) ? sol->run.solution.alloc.tau[k] : 0.0;
}
double arwpcn_solution_energy(const arwpcn_solution* sol, int k) {
  return valid_user(sol, k) ? sol->run.solution.alloc.e[k] : 0.0;
}
int arwpcn_solution_outer_iters(const arwpcn_solution* sol) { return sol ? sol->run.solution.outer_iters : 0; }
double arwpcn_solution_wall_ms(const arwpcn_solution* sol) { return sol ? sol->run.solution.timing.total_ms : 0.0; }
int arwpcn_solution_trace_length(const arwpcn_solution* sol) {
  return sol ? static_cast<int>(sol->run.solution.ao_trace.size()) : 0;
}
double arwpcn_solution_trace(const arwpcn_solution* sol, int i) {
  if (!sol || i < 0 || i >= static_cast<int>(sol->run.solution.ao_trace.size())) return 0.0;
  return sol->run.solution.ao_trace[i];
}
double arwpcn_solution_worst_violation(const arwpcn_solution* sol) {
  return sol ? sol->run.evaluation.worst_violation() : 0.0;
}
const char* arwpcn_solution_summary(const arwpcn_solution* sol) { return sol ? sol->summary.c_str() : ""; }

arwpcn_status arwpcn_solution_write_csv(const arwpcn_solution* sol, const char* path, int omit_timing) {
  if (!sol || !path) return fail(ARWPCN_E_ARGUMENT, "null argument");
  return guarded([&] {
    experiments::Row row = sol->run.row;
    if (omit_timing) row.wall_ms = 0.0;
    experiments::write_csv({row}, path);
  });
}

arwpcn_status arwpcn_sweep(const arwpcn_config* cfg, const char* family, const char* schemes, const char* values,
                           int omit_timing, const char* out_path, int* all_ok) {
  if (!cfg || !family || !schemes || !out_path) return fail(ARWPCN_E_ARGUMENT, "null argument");
  return guarded([&] {
    experiments::SweepSpec spec;
    spec.family = experiments::family_from_string(family);
    spec.base = cfg->cfg;
    spec.omit_timing = omit_timing != 0;
    spec.schemes.clear();
    for (const auto& s : split(schemes)) spec.schemes.push_back(ao::scheme_from_string(s));
    for (const auto& v : split(values)) spec.values.push_back(parse_value(v));
    const auto rows = experiments::run_sweep(spec);
    experiments::write_csv(rows, out_path);
    if (all_ok) *all_ok = experiments::all_ok(rows) ? 1 : 0;
  });
}

}  // extern "C"
