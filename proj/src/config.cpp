#include "config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "errors.hpp"

namespace arwpcn::config {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& v) {
  if (v == "-inf") return -std::numeric_limits<double>::infinity();
  double x = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(x))
    throw ConfigError(key, "config key '" + key + "': '" + v + "' is not a number");
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  long long x = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
  if (ec != std::errc() || p != v.data() + v.size())
    throw ConfigError(key, "config key '" + key + "': '" + v + "' is not an integer");
  return x;
}

int to_positive(const std::string& key, const std::string& v, int lo = 1) {
  const long long x = to_int(key, v);
  if (x < lo || x > 1'000'000)
    throw ConfigError(key, "config key '" + key + "' must be an integer >= " + std::to_string(lo));
  return static_cast<int>(x);
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key, "config key '" + key + "': '" + v + "' is not a boolean");
}

double positive(const std::string& key, double x) {
  if (!(x > 0.0)) throw ConfigError(key, "config key '" + key + "' must be positive");
  return x;
}

std::string num(double x) {
  if (std::isinf(x)) return "-inf";
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);  // shortest round-trip form
  return std::string(buf, r.ptr);
}

double watts_to_dbm(double w) { return w > 0.0 ? 10.0 * std::log10(w) + 30.0 : -std::numeric_limits<double>::infinity(); }

// Range checks that need more than one key.
void check(const Config& c, const std::string& key = {}) {
  try {
    c.params.validate();
  } catch (const DomainError& e) {
    throw ConfigError(key, std::string("invalid configuration") + (key.empty() ? "" : " after setting '" + key + "'") +
                               ": " + e.what());
  }
}

}  // namespace

const std::vector<std::string>& required_keys() {
  static const std::vector<std::string> keys{
      "m",      "l",         "n",           "k",           "p0_dbm",          "pr_dbm",    "a_max_db",
      "sigma_v_dbm", "sigma_r_dbm", "beta", "rician_k", "pathloss_ref_db", "alpha_ris", "alpha_direct",
      "x_r",    "x_u",       "x_s",         "x_h",         "user_radius",     "realizations", "delta_tau0",
      "tol_ao", "tol_sca",   "max_outer",   "max_sca_iter"};
  return keys;
}

const std::vector<std::string>& optional_keys() {
  static const std::vector<std::string> keys{"tau0_search", "passive_n", "k_tracks_n", "seed", "threads"};
  return keys;
}

namespace {

void apply(Config& c, const std::string& key, const std::string& v) {
  auto& p = c.params;
  auto& g = p.geometry;
  if (key == "m") p.M = to_positive(key, v);
  else if (key == "l") p.L = to_positive(key, v);
  else if (key == "n") p.N = to_positive(key, v);
  else if (key == "k") p.K = to_positive(key, v);
  else if (key == "p0_dbm") p.p0 = model::dbm_to_watts(to_double(key, v));
  else if (key == "pr_dbm") p.pr = model::dbm_to_watts(to_double(key, v));
  else if (key == "a_max_db") p.a_max = model::db_to_linear_amplitude(to_double(key, v));
  else if (key == "sigma_v_dbm") p.sigma_v2 = model::dbm_to_watts(to_double(key, v));
  else if (key == "sigma_r_dbm") p.sigma_r2 = model::dbm_to_watts(to_double(key, v));
  else if (key == "beta") p.beta = to_double(key, v);
  else if (key == "rician_k") p.rician_k = to_double(key, v);
  else if (key == "pathloss_ref_db") p.pathloss_ref = model::db_to_linear_power(to_double(key, v));
  else if (key == "alpha_ris") p.alpha_ris = to_double(key, v);
  else if (key == "alpha_direct") p.alpha_direct = to_double(key, v);
  else if (key == "x_r") g.x_r = to_double(key, v);
  else if (key == "x_u") g.x_u = to_double(key, v);
  else if (key == "x_s") g.x_s = to_double(key, v);
  else if (key == "x_h") g.x_h = to_double(key, v);
  else if (key == "user_radius") g.user_radius = to_double(key, v);
  else if (key == "realizations") c.realizations = to_positive(key, v);
  else if (key == "delta_tau0") {
    const double d = to_double(key, v);
    if (!(d > 0.0 && d <= 1.0)) throw ConfigError(key, "config key 'delta_tau0' must lie in (0, 1]");
    c.ao.delta_tau0 = d;
  } else if (key == "tol_ao") c.ao.tol_ao = positive(key, to_double(key, v));
  else if (key == "tol_sca") c.ao.tol_sca = positive(key, to_double(key, v));
  else if (key == "max_outer") c.ao.max_outer = to_positive(key, v);
  else if (key == "max_sca_iter") c.ao.max_sca_iter = to_positive(key, v);
  else if (key == "tau0_search") {
    if (v == "joint") c.ao.tau0_search = wet::Tau0Search::Joint;
    else if (v == "grid") c.ao.tau0_search = wet::Tau0Search::Grid;
    else throw ConfigError(key, "config key 'tau0_search' must be 'joint' or 'grid'");
  } else if (key == "passive_n") c.passive_n = to_positive(key, v, 0);
  else if (key == "k_tracks_n") c.k_tracks_n = to_bool(key, v);
  else if (key == "seed") {
    const long long s = to_int(key, v);
    if (s < 0) throw ConfigError(key, "config key 'seed' must be >= 0");
    c.seed = static_cast<std::uint64_t>(s);
  } else if (key == "threads") c.threads = to_positive(key, v, 0);
  else throw ConfigError(key, "unknown config key '" + key + "'");
}

}  // namespace

Config parse(std::string_view text) {
  Config c;
  std::set<std::string> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    const std::string where = "line " + std::to_string(lineno);
    if (eq == std::string::npos) throw ConfigError(where, where + ": expected 'key = value'");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    const std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError(where, where + ": missing key");
    if (value.empty()) throw ConfigError(key, "config key '" + key + "' has no value");
    if (!seen.insert(key).second) throw ConfigError(key, "config key '" + key + "' appears twice");
    apply(c, key, value);
  }
  for (const auto& k : required_keys())
    if (!seen.count(k)) throw ConfigError(k, "missing config key '" + k + "'");
  check(c);
  return c;
}

Config load(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

void set(Config& cfg, const std::string& key, const std::string& value) {
  Config c = cfg;
  apply(c, key, trim(value));
  check(c, key);
  cfg = c;
}

std::string get(const Config& c, const std::string& key) {
  const auto& p = c.params;
  const auto& g = p.geometry;
  if (key == "m") return std::to_string(p.M);
  if (key == "l") return std::to_string(p.L);
  if (key == "n") return std::to_string(p.N);
  if (key == "k") return std::to_string(p.K);
  if (key == "p0_dbm") return num(watts_to_dbm(p.p0));
  if (key == "pr_dbm") return num(watts_to_dbm(p.pr));
  if (key == "a_max_db") return num(20.0 * std::log10(p.a_max));
  if (key == "sigma_v_dbm") return num(watts_to_dbm(p.sigma_v2));
  if (key == "sigma_r_dbm") return num(watts_to_dbm(p.sigma_r2));
  if (key == "beta") return num(p.beta);
  if (key == "rician_k") return num(p.rician_k);
  if (key == "pathloss_ref_db") return num(10.0 * std::log10(p.pathloss_ref));
  if (key == "alpha_ris") return num(p.alpha_ris);
  if (key == "alpha_direct") return num(p.alpha_direct);
  if (key == "x_r") return num(g.x_r);
  if (key == "x_u") return num(g.x_u);
  if (key == "x_s") return num(g.x_s);
  if (key == "x_h") return num(g.x_h);
  if (key == "user_radius") return num(g.user_radius);
  if (key == "realizations") return std::to_string(c.realizations);
  if (key == "delta_tau0") return num(c.ao.delta_tau0);
  if (key == "tol_ao") return num(c.ao.tol_ao);
  if (key == "tol_sca") return num(c.ao.tol_sca);
  if (key == "max_outer") return std::to_string(c.ao.max_outer);
  if (key == "max_sca_iter") return std::to_string(c.ao.max_sca_iter);
  if (key == "tau0_search") return c.ao.tau0_search == wet::Tau0Search::Joint ? "joint" : "grid";
  if (key == "passive_n") return std::to_string(c.passive_n);
  if (key == "k_tracks_n") return c.k_tracks_n ? "true" : "false";
  if (key == "seed") return std::to_string(c.seed);
  if (key == "threads") return std::to_string(c.threads);
  throw ConfigError(key, "unknown config key '" + key + "'");
}

std::string to_text(const Config& c) {
  std::string out;
  for (const auto* keys : {&required_keys(), &optional_keys()})
    for (const auto& k : *keys) out += k + " = " + get(c, k) + "\n";
  return out;
}

}  // namespace arwpcn::config
