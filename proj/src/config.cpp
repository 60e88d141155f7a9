// SPDX-License-Identifier: Apache-2.0
#include "irsnoma/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace irsnoma {

namespace {

struct Key {
  const char* name;
  const char* unit;
  std::function<void(SystemConfig&, double)> set;
  std::function<double(const SystemConfig&)> get;
  bool integral = false;
};

// Keys appear in the file in this order; units follow Table-style conventions.
const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      {"num_bs_antennas", "count", [](SystemConfig& c, double v) { c.num_bs_antennas = int(v); },
       [](const SystemConfig& c) { return double(c.num_bs_antennas); }, true},
      {"num_irs_elements", "count", [](SystemConfig& c, double v) { c.num_irs_elements = int(v); },
       [](const SystemConfig& c) { return double(c.num_irs_elements); }, true},
      {"users_per_cluster", "count", [](SystemConfig& c, double v) { c.users_per_cluster = int(v); },
       [](const SystemConfig& c) { return double(c.users_per_cluster); }, true},
      {"num_clusters", "count", [](SystemConfig& c, double v) { c.num_clusters = int(v); },
       [](const SystemConfig& c) { return double(c.num_clusters); }, true},
      {"total_users", "count", [](SystemConfig& c, double v) { c.total_users = int(v); },
       [](const SystemConfig& c) { return double(c.total_users); }, true},
      {"cluster_power", "dBm", [](SystemConfig& c, double v) { c.cluster_power = dbm_to_watt(v); },
       [](const SystemConfig& c) { return watt_to_dbm(c.cluster_power); }},
      {"max_power", "dBm", [](SystemConfig& c, double v) { c.max_power = dbm_to_watt(v); },
       [](const SystemConfig& c) { return watt_to_dbm(c.max_power); }},
      {"circuit_power", "dBm", [](SystemConfig& c, double v) { c.circuit_power = dbm_to_watt(v); },
       [](const SystemConfig& c) { return watt_to_dbm(c.circuit_power); }},
      {"noise_power", "dBm", [](SystemConfig& c, double v) { c.noise_power = dbm_to_watt(v); },
       [](const SystemConfig& c) { return watt_to_dbm(c.noise_power); }},
      {"bandwidth", "Hz", [](SystemConfig& c, double v) { c.bandwidth = v; },
       [](const SystemConfig& c) { return c.bandwidth; }},
      {"rician_bs_irs", "dB", [](SystemConfig& c, double v) { c.rician_bs_irs = db_to_linear(v); },
       [](const SystemConfig& c) { return linear_to_db(c.rician_bs_irs); }},
      {"rician_irs_user", "dB", [](SystemConfig& c, double v) { c.rician_irs_user = db_to_linear(v); },
       [](const SystemConfig& c) { return linear_to_db(c.rician_irs_user); }},
      {"ref_pathloss", "dB", [](SystemConfig& c, double v) { c.ref_pathloss = db_to_linear(v); },
       [](const SystemConfig& c) { return linear_to_db(c.ref_pathloss); }},
      {"ref_distance", "m", [](SystemConfig& c, double v) { c.ref_distance = v; },
       [](const SystemConfig& c) { return c.ref_distance; }},
      {"bs_irs_distance", "m", [](SystemConfig& c, double v) { c.bs_irs_distance = v; },
       [](const SystemConfig& c) { return c.bs_irs_distance; }},
      {"pathloss_exp_bs_irs", "unitless", [](SystemConfig& c, double v) { c.pathloss_exp_bs_irs = v; },
       [](const SystemConfig& c) { return c.pathloss_exp_bs_irs; }},
      {"pathloss_exp_irs_user", "unitless", [](SystemConfig& c, double v) { c.pathloss_exp_irs_user = v; },
       [](const SystemConfig& c) { return c.pathloss_exp_irs_user; }},
      {"user_radius", "m", [](SystemConfig& c, double v) { c.user_radius = v; },
       [](const SystemConfig& c) { return c.user_radius; }},
      {"min_sinr", "dB", [](SystemConfig& c, double v) { c.min_sinr = db_to_linear(v); },
       [](const SystemConfig& c) { return linear_to_db(c.min_sinr); }},
      {"sic_power_gap", "dBm", [](SystemConfig& c, double v) { c.sic_power_gap = dbm_to_watt(v); },
       [](const SystemConfig& c) { return watt_to_dbm(c.sic_power_gap); }},
      {"correlation_threshold", "unitless, [0,1]",
       [](SystemConfig& c, double v) { c.correlation_threshold = v; },
       [](const SystemConfig& c) { return c.correlation_threshold; }},
      {"element_spacing_ratio", "d/lambda", [](SystemConfig& c, double v) { c.element_spacing_ratio = v; },
       [](const SystemConfig& c) { return c.element_spacing_ratio; }},
      {"rng_seed", "integer", [](SystemConfig& c, double v) { c.rng_seed = std::uint64_t(v); },
       [](const SystemConfig& c) { return double(c.rng_seed); }, true},
      {"stage1_tolerance", "relative", [](SystemConfig& c, double v) { c.opac.tolerance = v; },
       [](const SystemConfig& c) { return c.opac.tolerance; }},
      {"stage1_max_iterations", "count", [](SystemConfig& c, double v) { c.opac.max_iterations = int(v); },
       [](const SystemConfig& c) { return double(c.opac.max_iterations); }, true},
      {"stage2_tolerance", "relative", [](SystemConfig& c, double v) { c.orca.tolerance = v; },
       [](const SystemConfig& c) { return c.orca.tolerance; }},
      {"stage2_max_iterations", "count", [](SystemConfig& c, double v) { c.orca.max_iterations = int(v); },
       [](const SystemConfig& c) { return double(c.orca.max_iterations); }, true},
      {"penalty_initial", "unitless", [](SystemConfig& c, double v) { c.orca.penalty_initial = v; },
       [](const SystemConfig& c) { return c.orca.penalty_initial; }},
      {"penalty_growth", "unitless", [](SystemConfig& c, double v) { c.orca.penalty_growth = v; },
       [](const SystemConfig& c) { return c.orca.penalty_growth; }},
      {"penalty_max", "unitless", [](SystemConfig& c, double v) { c.orca.penalty_max = v; },
       [](const SystemConfig& c) { return c.orca.penalty_max; }},
      {"penalty_tolerance", "relative to tr(B)", [](SystemConfig& c, double v) { c.orca.penalty_tolerance = v; },
       [](const SystemConfig& c) { return c.orca.penalty_tolerance; }},
      {"sdp_tolerance", "relative", [](SystemConfig& c, double v) { c.orca.sdp_tolerance = v; },
       [](const SystemConfig& c) { return c.orca.sdp_tolerance; }},
      {"randomization_candidates", "count",
       [](SystemConfig& c, double v) { c.orca.randomization_candidates = int(v); },
       [](const SystemConfig& c) { return double(c.orca.randomization_candidates); }, true},
  };
  return table;
}

const Key* find_key(const std::string& name) {
  for (const auto& k : keys()) {
    if (name == k.name) return &k;
  }
  return nullptr;
}

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void fail(int line, const std::string& what) {
  throw std::invalid_argument("config line " + std::to_string(line) + ": " + what);
}

}  // namespace

void validate(const SystemConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw std::invalid_argument(std::string("invalid config: ") + what);
  };
  require(c.num_bs_antennas >= 1, "num_bs_antennas must be >= 1");
  require(c.num_irs_elements >= 1, "num_irs_elements must be >= 1");
  require(c.users_per_cluster >= 1, "users_per_cluster must be >= 1");
  require(c.num_clusters >= 1, "num_clusters must be >= 1");
  require(c.num_bs_antennas > c.num_clusters - 1,
          "num_bs_antennas must exceed num_clusters - 1 (zero-forcing null space)");
  require(c.total_users >= c.users_per_cluster * c.num_clusters,
          "total_users must be >= users_per_cluster * num_clusters");
  require(c.cluster_power > 0 && c.max_power > 0 && c.circuit_power > 0, "powers must be positive");
  require(c.noise_power > 0, "noise_power must be positive");
  require(c.bandwidth > 0, "bandwidth must be positive");
  require(c.ref_distance > 0 && c.bs_irs_distance > 0 && c.user_radius > 0, "distances must be positive");
  require(c.ref_pathloss > 0, "ref_pathloss must be positive");
  require(c.rician_bs_irs >= 0 && c.rician_irs_user >= 0, "rician factors must be nonnegative");
  require(c.min_sinr > 0, "min_sinr must be positive");
  require(c.sic_power_gap > 0, "sic_power_gap must be positive");
  require(c.correlation_threshold >= 0 && c.correlation_threshold <= 1,
          "correlation_threshold must lie in [0, 1]");
  require(c.element_spacing_ratio > 0, "element_spacing_ratio must be positive");
  require(c.opac.tolerance > 0 && c.opac.max_iterations >= 1, "stage-1 controls");
  require(c.orca.tolerance > 0 && c.orca.max_iterations >= 1, "stage-2 controls");
  require(c.orca.penalty_initial > 0 && c.orca.penalty_growth >= 1 &&
              c.orca.penalty_max >= c.orca.penalty_initial,
          "penalty schedule");
  require(c.orca.randomization_candidates >= 0, "randomization_candidates must be >= 0");
}

SystemConfig parse_config(std::istream& in) {
  SystemConfig config;
  std::set<std::string> seen;
  bool gap_given = false;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected 'key = value'");
    const std::string name = trim(line.substr(0, eq));
    const std::string text = trim(line.substr(eq + 1));
    const Key* key = find_key(name);
    if (key == nullptr) fail(line_no, "unknown key '" + name + "'");
    if (!seen.insert(name).second) fail(line_no, "duplicate key '" + name + "'");
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size() || !std::isfinite(value)) {
      fail(line_no, "malformed value '" + text + "' for '" + name + "'");
    }
    if (key->integral && (value != std::floor(value) || value < 0)) {
      fail(line_no, "'" + name + "' must be a nonnegative integer");
    }
    key->set(config, value);
    if (name == "sic_power_gap") gap_given = true;
  }
  // The SIC gap tracks the noise floor unless set explicitly.
  if (!gap_given) config.sic_power_gap = 100.0 * config.noise_power;
  validate(config);
  return config;
}

SystemConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  return parse_config(in);
}

std::string format_config(const SystemConfig& config) {
  std::ostringstream out;
  char buf[64];
  for (const auto& k : keys()) {
    const double v = k.get(config);
    if (k.integral) {
      std::snprintf(buf, sizeof buf, "%llu", static_cast<unsigned long long>(v));
    } else {
      std::snprintf(buf, sizeof buf, "%.17g", v);
    }
    out << k.name << " = " << buf << "  # " << k.unit << '\n';
  }
  return out.str();
}

}  // namespace irsnoma
