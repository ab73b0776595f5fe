#include <doctest.h>

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "config.hpp"
#include "errors.hpp"

using namespace arwpcn;

namespace {

std::string read(const std::string& path) {
  std::ifstream f(path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

const std::string kDefault = read(ARWPCN_SOURCE_DIR "/configs/default.cfg");

std::string without(const std::string& key) {
  std::string out, line;
  std::istringstream in(kDefault);
  while (std::getline(in, line))
    if (line.rfind(key + " =", 0) != 0) out += line + "\n";
  return out;
}

std::string error_key(const std::string& text) {
  try {
    config::parse(text);
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<none>";
}

}  // namespace

TEST_CASE("shipped configuration parses to the evaluation setup") {
  REQUIRE(!kDefault.empty());
  const config::Config c = config::parse(kDefault);
  CHECK(c.params.M == 4);
  CHECK(c.params.L == 4);
  CHECK(c.params.N == 10);
  CHECK(c.params.K == 4);
  CHECK(c.params.p0 == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(c.params.pr == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(c.params.a_max == doctest::Approx(17.7827941).epsilon(1e-9));
  CHECK(c.params.sigma_v2 == doctest::Approx(1e-12).epsilon(1e-12));
  CHECK(c.params.sigma_r2 == doctest::Approx(1e-12).epsilon(1e-12));
  CHECK(c.params.beta == 0.8);
  CHECK(c.params.pathloss_ref == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(c.params.geometry.x_r == 10.0);
  CHECK(c.params.geometry.x_s == 20.0);
  CHECK(c.realizations == 50);
  CHECK(c.seed == 1);
}

TEST_CASE("every required key is enforced and named") {
  for (const auto& k : config::required_keys()) {
    CAPTURE(k);
    std::string msg;
    try {
      config::parse(without(k));
    } catch (const ConfigError& e) {
      msg = e.what();
      CHECK(e.key() == k);
    }
    CHECK(msg.find(k) != std::string::npos);
  }
  // optional keys fall back to their defaults
  for (const auto& k : config::optional_keys()) CHECK_NOTHROW(config::parse(without(k)));
}

TEST_CASE("malformed entries are rejected with the key") {
  CHECK(error_key(kDefault + "bogus = 1\n") == "bogus");
  CHECK(error_key(kDefault + "n = 12\n") == "n");
  CHECK(error_key(without("n") + "n = ten\n") == "n");
  CHECK(error_key(without("n") + "n = 0\n") == "n");
  CHECK(error_key(without("n") + "n = 2.5\n") == "n");
  CHECK(error_key(without("p0_dbm") + "p0_dbm = 20dBm\n") == "p0_dbm");
  CHECK(error_key(without("p0_dbm") + "p0_dbm =\n") == "p0_dbm");
  CHECK(error_key(without("tol_ao") + "tol_ao = -1\n") == "tol_ao");
  CHECK(error_key(without("delta_tau0") + "delta_tau0 = 1.5\n") == "delta_tau0");
  CHECK(error_key(without("tau0_search") + "tau0_search = bisect\n") == "tau0_search");
  CHECK(error_key(without("k_tracks_n") + "k_tracks_n = maybe\n") == "k_tracks_n");
  CHECK(error_key(kDefault + "just words\n").rfind("line ", 0) == 0);
  CHECK_THROWS_AS(config::load("/nonexistent/dir/x.cfg"), IoError);
}

TEST_CASE("comments and whitespace are ignored") {
  std::string text = "# header\n\n" + without("n") + "   n   =  12   # trailing comment\n";
  CHECK(config::parse(text).params.N == 12);
}

TEST_CASE("a silent power station is accepted") {
  const config::Config c = config::parse(without("p0_dbm") + "p0_dbm = -inf\n");
  CHECK(c.params.p0 == 0.0);
  CHECK(config::get(c, "p0_dbm") == "-inf");
}

TEST_CASE("to_text round-trips") {
  config::Config c = config::parse(kDefault);
  config::set(c, "n", "17");
  config::set(c, "p0_dbm", "13.25");
  config::set(c, "x_r", "7.5");
  config::set(c, "tau0_search", "grid");
  config::set(c, "k_tracks_n", "true");
  config::set(c, "seed", "123456789012");
  const config::Config d = config::parse(config::to_text(c));
  CHECK(config::to_text(d) == config::to_text(c));
  for (const auto* keys : {&config::required_keys(), &config::optional_keys()})
    for (const auto& k : *keys) {
      CAPTURE(k);
      CHECK(config::get(d, k) == config::get(c, k));
    }
  CHECK(d.params.N == 17);
  CHECK(d.params.p0 == c.params.p0);
  CHECK(d.params.a_max == c.params.a_max);
  CHECK(d.seed == 123456789012ULL);
  CHECK(d.ao.tau0_search == wet::Tau0Search::Grid);
}

TEST_CASE("set validates and leaves the configuration untouched on failure") {
  config::Config c = config::parse(kDefault);
  const std::string before = config::to_text(c);
  CHECK_THROWS_AS(config::set(c, "n", "-3"), ConfigError);
  CHECK_THROWS_AS(config::set(c, "nope", "1"), ConfigError);
  CHECK_THROWS_AS(config::set(c, "beta", "1.5"), ConfigError);
  try {
    config::set(c, "beta", "1.5");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "beta");
  }
  CHECK(config::to_text(c) == before);
  CHECK_THROWS_AS(config::get(c, "nope"), ConfigError);
}
