// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "irsnoma/channel.hpp"
#include "irsnoma/config.hpp"

namespace irsnoma {

enum class Method { Proposed, Conventional, RandomClustering, RandomPac, NoOrca };

inline constexpr std::array<Method, 5> kAllMethods{Method::Proposed, Method::Conventional, Method::RandomClustering,
                                                   Method::RandomPac, Method::NoOrca};

const char* to_string(Method method);
/// Accepts the CLI names (proposed, conventional, random-clustering, random-pac, no-orca).
Method parse_method(const std::string& name);

/// How the conventional beamforming benchmark shares a beam between its users.
enum class ConventionalMode { TimeSharing, SingleUser };

struct ExperimentSpec {
  std::vector<int> irs_elements{16, 32, 48, 64};
  std::vector<int> bs_antennas{8};
  int num_trials = 200;
  std::vector<Method> methods{Method::Proposed, Method::Conventional, Method::RandomClustering};
  ConventionalMode conventional_mode = ConventionalMode::TimeSharing;
  std::filesystem::path output_dir = "results";
  std::uint64_t seed = 1;
  int workers = 1;

  /// Throws std::invalid_argument on an empty grid, nonpositive trial count or bad size.
  void validate() const;
};

struct MethodResult {
  bool ran = false;
  bool completed = false;  // false when the method could not produce an allocation
  bool feasible = false;   // the configured SINR target holds
  double energy_efficiency = 0.0;
  double far_user_interference = 0.0;  // W
};

struct TrialRecord {
  std::uint64_t seed = 0;
  int trial = 0;
  int irs_elements = 0;
  int bs_antennas = 0;
  std::array<MethodResult, kAllMethods.size()> results{};

  // Proposed-method internals.
  double sinr_target = 0.0;
  double stage1_energy_efficiency = 0.0;
  std::vector<double> stage1_trace;  // EE per Dinkelbach iteration
  std::vector<double> stage2_trace;  // EE returned after each reflection iteration
  std::vector<double> stage2_penalty;
  int stage1_iterations = 0;
  int stage2_iterations = 0;
  bool stage2_fallback = false;
  double stage1_seconds = 0.0;
  double stage2_seconds = 0.0;

  MethodResult& result(Method m) { return results[static_cast<std::size_t>(m)]; }
  const MethodResult& result(Method m) const { return results[static_cast<std::size_t>(m)]; }
};

/// Seed of trial `trial` in an experiment seeded with `base`. Every scenario of a
/// trial shares it, so the user geometry is paired across the N and M grids.
std::uint64_t trial_seed(std::uint64_t base, int trial);

/// One Monte Carlo draw with every requested method on the same channels.
/// `config` carries N and M.
TrialRecord run_trial(const SystemConfig& config, const ExperimentSpec& spec, std::uint64_t seed);

/// Sum of per-beam EE when each ZF beam serves its users orthogonally at full
/// power: time sharing with duty cycle 1/K, or only the strongest user.
struct ConventionalResult {
  double energy_efficiency = 0.0;
  double far_user_interference = 0.0;
};

ConventionalResult run_conventional_bf_baseline(const LinkGains& links, const SystemConfig& config,
                                                ConventionalMode mode = ConventionalMode::TimeSharing);

/// All scenarios times all trials on `spec.workers` threads; records sorted by
/// (N, M, trial).
std::vector<TrialRecord> run_experiment(const SystemConfig& base, const ExperimentSpec& spec);

inline constexpr const char* kNullToken = "NA";

/// Writes summary.csv, convergence_stage1.csv, convergence_stage2.csv, ici.csv,
/// trials.csv, plot_results.py and manifest.txt. Throws std::runtime_error naming
/// the path when a file cannot be written.
void emit_results(const std::vector<TrialRecord>& records, const ExperimentSpec& spec, const SystemConfig& base);

/// Lowercase hex SHA-1 of a git blob holding `content` ("blob <size>\0" prefix).
std::string git_blob_hash(const std::string& content);

}  // namespace irsnoma
