// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <string>

namespace irsnoma {

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }
inline double dbm_to_watt(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w) + 30.0; }

/// Stage-1 (power allocation) iteration controls.
struct OpacOptions {
  double tolerance = 1e-4;       // on the normalized Dinkelbach residual F/R
  int max_iterations = 100;
  int dual_iterations = 150;     // subgradient steps per Dinkelbach iteration
  double step_size = 0.5;        // c in omega(t) = c / sqrt(t), normalized slacks
  double warm_start_fraction = 0.9;
};

/// Stage-2 (reflection) iteration controls.
struct OrcaOptions {
  double tolerance = 1e-4;
  int max_iterations = 20;
  double penalty_initial = 1e2;
  double penalty_growth = 10.0;
  double penalty_max = 1e6;
  double penalty_tolerance = 1e-3;  // exact penalty relative to tr(B)
  double sdp_tolerance = 1e-6;
  int randomization_candidates = 50;
};

/// Scenario description. Every quantity is stored in linear units (W, m, ratio);
/// dB/dBm conversions only happen in the config file reader and writer.
struct SystemConfig {
  int num_bs_antennas = 8;
  int num_irs_elements = 32;
  int users_per_cluster = 2;
  int num_clusters = 5;
  int total_users = 30;

  double cluster_power = dbm_to_watt(30.0);
  double max_power = dbm_to_watt(30.0);
  double circuit_power = dbm_to_watt(30.0);
  double noise_power = dbm_to_watt(-114.0);
  double bandwidth = 1.0;

  double rician_bs_irs = db_to_linear(3.0);
  double rician_irs_user = db_to_linear(3.0);
  double ref_pathloss = db_to_linear(-30.0);
  double ref_distance = 1.0;
  double bs_irs_distance = 30.0;
  double pathloss_exp_bs_irs = 2.2;
  double pathloss_exp_irs_user = 2.2;
  double user_radius = 10.0;

  double min_sinr = db_to_linear(3.0);
  double sic_power_gap = 100.0 * dbm_to_watt(-114.0);
  double correlation_threshold = 0.7;
  double element_spacing_ratio = 0.5;
  std::uint64_t rng_seed = 1;

  OpacOptions opac;
  OrcaOptions orca;
};

/// Throws std::invalid_argument naming the first violated invariant.
void validate(const SystemConfig& config);

/// Parses the flat `key = value` format. Lines starting with '#' and text after
/// '#' are comments. Unknown keys, duplicate keys and malformed values throw
/// std::invalid_argument with the offending line number.
SystemConfig parse_config(std::istream& in);
SystemConfig load_config(const std::string& path);

/// Writes every key in file units (dBm, dB) with a unit comment per line.
std::string format_config(const SystemConfig& config);

}  // namespace irsnoma
