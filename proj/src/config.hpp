#pragma once

// Flat "key = value" configuration. Lines starting with '#' are comments.
// Powers are given in dBm, the amplitude cap in dB (amplitude convention,
// a = 10^(dB/20)) and the path-loss reference in dB.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ao.hpp"
#include "model.hpp"

namespace arwpcn::config {

struct Config {
  model::SystemParams params;
  int realizations = 50;
  ao::AoOptions ao;
  int passive_n = 100;      // elements of the passive baseline (0 keeps n)
  bool k_tracks_n = false;  // element sweep sets K = N
  std::uint64_t seed = 1;   // base seed; realization r uses seed + r
  int threads = 0;          // 0 picks the hardware concurrency
};

/// Keys every configuration must define.
const std::vector<std::string>& required_keys();
/// Keys with defaults.
const std::vector<std::string>& optional_keys();

/// Parses the text; ConfigError names the offending key (or "line N" for syntax errors).
Config parse(std::string_view text);
/// IoError when the file cannot be read.
Config load(const std::string& path);
/// Sets one key on an existing configuration and revalidates it.
void set(Config& cfg, const std::string& key, const std::string& value);
/// Value of a key rendered as in a configuration file.
std::string get(const Config& cfg, const std::string& key);
/// Text that parses back to cfg.
std::string to_text(const Config& cfg);

}  // namespace arwpcn::config
