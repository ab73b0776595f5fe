#include "experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "errors.hpp"

namespace arwpcn::experiments {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Outcome {
  ao::Solution solution;
  std::string status = "ok";
};

Outcome solve_point(const model::SystemParams& p, ao::Scheme scheme, const ao::AoOptions& opt, std::uint64_t seed) {
  Outcome o;
  try {
    const model::ChannelSet ch = model::generate_channels(p, seed);
    ao::AoOptions local = opt;
    local.seed = seed;
    o.solution = ao::baseline_solve(scheme, p, ch, local);
    if (!ao::evaluate(p, ch, o.solution).feasible(1e-8)) o.status = "constraint_violation";
  } catch (const RankOneViolation&) {
    o.status = "rank_one";
  } catch (const InfeasibleError&) {
    o.status = "infeasible";
  } catch (const NumericalError&) {
    o.status = "numerical";
  } catch (const DomainError&) {
    o.status = "domain";
  } catch (const std::exception&) {
    o.status = "error";
  }
  return o;
}

// Runs f(i) for i in [0, n) on a bounded pool; results are indexed by i, so
// the output order never depends on completion order.
template <class F>
void parallel_for(int n, int threads, F&& f) {
  int t = threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  t = std::min(t, n);
  if (t <= 1) {
    for (int i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < t; ++w)
    pool.emplace_back([&] {
      for (int i = next++; i < n; i = next++) f(i);
    });
  for (auto& th : pool) th.join();
}

Row mean_row(const std::vector<Row>& members) {
  Row m = members.front();
  m.realization = -1;
  m.seed = members.front().seed;
  m.sum_rate = m.tau0 = m.outer_iters = m.wall_ms = 0.0;
  int ok = 0;
  for (const Row& r : members) {
    if (r.status != "ok") continue;
    ++ok;
    m.sum_rate += r.sum_rate;
    m.tau0 += r.tau0;
    m.outer_iters += r.outer_iters;
    m.wall_ms += r.wall_ms;
  }
  if (ok > 0) {
    m.sum_rate /= ok;
    m.tau0 /= ok;
    m.outer_iters /= ok;
    m.wall_ms /= ok;
  }
  m.status = ok == static_cast<int>(members.size()) ? "ok" : ok > 0 ? "partial" : "failed";
  if (ok == 0) m.sum_rate = m.tau0 = m.outer_iters = m.wall_ms = std::nan("");
  return m;
}

}  // namespace

const char* to_string(Family f) {
  switch (f) {
    case Family::Convergence: return "convergence";
    case Family::TransmitPower: return "p0";
    case Family::Elements: return "n";
    case Family::Users: return "k";
    case Family::Location: return "xr";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  std::string n;
  for (char c : name) n += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  for (Family f : {Family::Convergence, Family::TransmitPower, Family::Elements, Family::Users, Family::Location})
    if (n == to_string(f)) return f;
  throw DomainError("unknown sweep family '" + name + "' (expected convergence, p0, n, k or xr)");
}

std::vector<double> default_values(Family f) {
  std::vector<double> v;
  switch (f) {
    case Family::Convergence: break;
    case Family::TransmitPower: for (int x = 0; x <= 30; x += 5) v.push_back(x); break;
    case Family::Elements: for (int x = 2; x <= 20; x += 2) v.push_back(x); break;
    case Family::Users: for (int x = 1; x <= 10; ++x) v.push_back(x); break;
    case Family::Location: for (int x = 1; x <= 19; x += 3) v.push_back(x); break;
  }
  return v;
}

model::SystemParams point_params(const SweepSpec& spec, ao::Scheme scheme, double value) {
  model::SystemParams p = spec.base.params;
  int passive_n = spec.base.passive_n;
  auto count = [&](const char* what) {
    if (value < 1.0 || value != std::floor(value)) throw DomainError(std::string(what) + " sweep values must be positive integers");
    return static_cast<int>(value);
  };
  switch (spec.family) {
    case Family::Convergence: break;
    case Family::TransmitPower: p.p0 = model::dbm_to_watts(value); break;
    case Family::Elements:
      p.N = count("element");
      if (spec.base.k_tracks_n) p.K = p.N;
      passive_n = 0;  // the passive baseline follows the swept N
      break;
    case Family::Users: p.K = count("user"); break;
    case Family::Location: p.geometry.x_r = value; break;
  }
  p = ao::scheme_params(scheme, p, passive_n);
  p.validate();
  return p;
}

std::vector<Row> run_sweep(const SweepSpec& spec) {
  if (spec.schemes.empty()) throw DomainError("sweep needs at least one scheme");
  const bool conv = spec.family == Family::Convergence;
  std::vector<double> values = spec.values.empty() ? default_values(spec.family) : spec.values;
  if (conv) values = {0.0};
  if (values.empty()) throw DomainError("sweep needs at least one value");
  if (!std::is_sorted(values.begin(), values.end())) throw DomainError("sweep values must be sorted");
  const int R = spec.base.realizations;
  if (R < 1) throw DomainError("realizations must be >= 1");

  const int S = static_cast<int>(spec.schemes.size()), V = static_cast<int>(values.size());
  std::vector<model::SystemParams> params;
  for (int s = 0; s < S; ++s)
    for (int v = 0; v < V; ++v) params.push_back(point_params(spec, spec.schemes[s], values[v]));

  std::vector<Outcome> out(static_cast<std::size_t>(S) * V * R);
  parallel_for(static_cast<int>(out.size()), spec.base.threads, [&](int i) {
    const int s = i / (V * R), v = (i / R) % V, r = i % R;
    out[i] = solve_point(params[s * V + v], spec.schemes[s], spec.base.ao, spec.base.seed + r);
  });

  std::vector<Row> rows;
  for (int s = 0; s < S; ++s) {
    for (int v = 0; v < V; ++v) {
      Row proto;
      proto.family = to_string(spec.family);
      proto.scheme = ao::to_string(spec.schemes[s]);
      proto.sweep_value = values[v];
      if (!conv) {
        std::vector<Row> group;
        for (int r = 0; r < R; ++r) {
          const Outcome& o = out[(s * V + v) * R + r];
          Row row = proto;
          row.realization = r;
          row.seed = spec.base.seed + r;
          row.status = o.status;
          if (o.status == "ok" || o.status == "constraint_violation") {
            row.sum_rate = o.solution.sum_rate;
            row.tau0 = o.solution.alloc.tau0;
            row.outer_iters = o.solution.outer_iters;
            row.wall_ms = spec.omit_timing ? 0.0 : o.solution.timing.total_ms;
          } else {
            row.sum_rate = row.tau0 = row.outer_iters = row.wall_ms = std::nan("");
          }
          group.push_back(row);
        }
        rows.insert(rows.end(), group.begin(), group.end());
        rows.push_back(mean_row(group));
        continue;
      }
      // Convergence: one row per sweep of each run, traces padded with their
      // final value when averaging.
      std::size_t longest = 0;
      for (int r = 0; r < R; ++r) {
        const Outcome& o = out[(s * V + v) * R + r];
        if (o.status == "ok") longest = std::max(longest, o.solution.ao_trace.size());
      }
      std::vector<std::vector<Row>> by_step(longest + 1);
      for (int r = 0; r < R; ++r) {
        const Outcome& o = out[(s * V + v) * R + r];
        Row row = proto;
        row.realization = r;
        row.seed = spec.base.seed + r;
        row.status = o.status;
        if (o.status != "ok") {
          row.sum_rate = row.tau0 = row.outer_iters = row.wall_ms = std::nan("");
          rows.push_back(row);
          for (auto& step : by_step) step.push_back(row);
          continue;
        }
        const auto& tr = o.solution.ao_trace;
        row.tau0 = o.solution.alloc.tau0;
        row.outer_iters = o.solution.outer_iters;
        row.wall_ms = spec.omit_timing ? 0.0 : o.solution.timing.total_ms;
        for (std::size_t t = 0; t <= longest; ++t) {
          Row at = row;
          at.sweep_value = static_cast<double>(t);
          at.sum_rate = t == 0 ? o.solution.initial_sum_rate : tr[std::min(t, tr.size()) - 1];
          if (t <= tr.size()) rows.push_back(at);
          by_step[t].push_back(at);
        }
      }
      for (std::size_t t = 0; t < by_step.size(); ++t) rows.push_back(mean_row(by_step[t]));
    }
  }
  return rows;
}

bool all_ok(const std::vector<Row>& rows) {
  return std::all_of(rows.begin(), rows.end(), [](const Row& r) { return r.status == "ok"; });
}

std::string csv_header() {
  return "family,scheme,sweep_value,realization,seed,sum_rate_bits,tau0,outer_iters,wall_ms,status\n";
}

std::string to_csv(const std::vector<Row>& rows) {
  std::string s = csv_header();
  for (const Row& r : rows) {
    auto cell = [](double x) { return std::isnan(x) ? std::string() : fmt(x); };
    s += r.family + ',' + r.scheme + ',' + fmt(r.sweep_value) + ',' +
         (r.realization < 0 ? std::string("mean") : std::to_string(r.realization)) + ',' + std::to_string(r.seed) +
         ',' + cell(r.sum_rate) + ',' + cell(r.tau0) + ',' + cell(r.outer_iters) + ',' + cell(r.wall_ms) + ',' +
         r.status + '\n';
  }
  return s;
}

void write_csv(const std::vector<Row>& rows, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write CSV file '" + path + "'");
  f << to_csv(rows);
  if (!f) throw IoError("failed while writing CSV file '" + path + "'");
}

SingleRun run_single(const config::Config& cfg, ao::Scheme scheme, std::uint64_t seed, bool omit_timing) {
  SweepSpec spec;
  spec.base = cfg;
  SingleRun run;
  run.params = point_params(spec, scheme, 0.0);
  const model::ChannelSet ch = model::generate_channels(run.params, seed);
  ao::AoOptions opt = cfg.ao;
  opt.seed = seed;
  run.solution = ao::baseline_solve(scheme, run.params, ch, opt);
  run.evaluation = ao::evaluate(run.params, ch, run.solution);
  Row& r = run.row;
  r.family = "single";
  r.scheme = ao::to_string(scheme);
  r.sweep_value = 0.0;
  r.realization = 0;
  r.seed = seed;
  r.sum_rate = run.solution.sum_rate;
  r.tau0 = run.solution.alloc.tau0;
  r.outer_iters = run.solution.outer_iters;
  r.wall_ms = omit_timing ? 0.0 : run.solution.timing.total_ms;
  r.status = run.evaluation.feasible(1e-8) ? "ok" : "constraint_violation";
  return run;
}

std::string summary(const SingleRun& run) {
  const auto& s = run.solution;
  char buf[160];
  std::string out;
  std::snprintf(buf, sizeof buf, "scheme        %s\nseed          %llu\nsum_rate      %.6f bits/block\n",
                run.row.scheme.c_str(), static_cast<unsigned long long>(run.row.seed), s.sum_rate);
  out += buf;
  std::snprintf(buf, sizeof buf, "outer_iters   %d\ntau0          %.6f\n", s.outer_iters, s.alloc.tau0);
  out += buf;
  for (int k = 0; k < static_cast<int>(s.rates.size()); ++k) {
    std::snprintf(buf, sizeof buf, "user %-3d      rate %.6f  tau %.6f  energy %.6e J\n", k, s.rates[k], s.alloc.tau[k],
                  s.alloc.e[k]);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "feasible      %s (worst relative slack %.3e)\n",
                run.evaluation.feasible(1e-8) ? "yes" : "no", run.evaluation.worst_violation());
  out += buf;
  return out;
}

}  // namespace arwpcn::experiments
