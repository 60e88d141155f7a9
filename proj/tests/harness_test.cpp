// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "irsnoma/harness.hpp"

namespace irsnoma {
namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("irsnoma_harness_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

TEST(Methods, NamesRoundTrip) {
  for (Method m : kAllMethods) EXPECT_EQ(parse_method(to_string(m)), m);
  EXPECT_THROW(parse_method("optimal"), std::invalid_argument);
}

TEST(ExperimentSpec, Validation) {
  ExperimentSpec s;
  EXPECT_NO_THROW(s.validate());
  s.num_trials = 0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = {};
  s.irs_elements.clear();
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = {};
  s.methods.clear();
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(GitBlobHash, KnownValues) {
  EXPECT_EQ(git_blob_hash(""), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
  EXPECT_EQ(git_blob_hash("hello\n"), "ce013625030ba8dba906f756967f9e9ca394464a");
}

LinkGains toy_links(int k_count) {
  LinkGains l;
  l.gain.resize(2);
  l.channel_norm_sq.resize(2);
  for (int i = 0; i < 2; ++i) {
    l.gain[i] = Eigen::MatrixXd(k_count, 2);
    for (int k = 0; k < k_count; ++k) {
      l.gain[i](k, i) = 1e-10 * (1 + k + i);
      l.gain[i](k, 1 - i) = k + 1 == k_count ? 0.0 : 1e-13 * (2 + i);
    }
    l.channel_norm_sq[i] = Eigen::VectorXd::LinSpaced(k_count, 1.0, double(k_count));
  }
  l.beam_norm_sq = Eigen::Vector2d::Ones();
  return l;
}

TEST(Conventional, TimeSharingFormula) {
  SystemConfig c;
  const LinkGains l = toy_links(2);
  const double p = c.cluster_power;
  double expected = 0.0;
  for (int i = 0; i < 2; ++i) {
    double rate = 0.0;
    for (int k = 0; k < 2; ++k) {
      const double psi = p * l.gain[i](k, 1 - i);
      rate += std::log2(1.0 + p * l.gain[i](k, i) / (psi + c.noise_power)) / 2.0;
    }
    expected += c.bandwidth * rate / (p + c.circuit_power);
  }
  const ConventionalResult r = run_conventional_bf_baseline(l, c);
  EXPECT_NEAR(r.energy_efficiency, expected, 1e-12 * expected);
  const double far = 0.5 * (p * l.gain[0](0, 1) + p * l.gain[1](0, 0));
  EXPECT_NEAR(r.far_user_interference, far, 1e-25);

  const ConventionalResult single = run_conventional_bf_baseline(l, c, ConventionalMode::SingleUser);
  const double strong = std::log2(1.0 + p * l.gain[0](1, 0) / c.noise_power) / (p + c.circuit_power) +
                        std::log2(1.0 + p * l.gain[1](1, 1) / c.noise_power) / (p + c.circuit_power);
  EXPECT_NEAR(single.energy_efficiency, strong, 1e-12 * strong);
}

TEST(Conventional, SingleUserClustersMatchFullPowerNoma) {
  SystemConfig c;
  c.users_per_cluster = 1;
  const LinkGains l = toy_links(1);
  const Eigen::MatrixXd full = Eigen::MatrixXd::Ones(2, 1);
  const double noma = evaluate_system(l, full, c).energy_efficiency;
  EXPECT_NEAR(run_conventional_bf_baseline(l, c).energy_efficiency, noma, 1e-12 * noma);
}

SystemConfig quick_config() {
  SystemConfig c;
  c.num_irs_elements = 16;
  return c;
}

TEST(RunTrial, DeterministicAndPaired) {
  ExperimentSpec spec;
  spec.methods = {Method::Proposed, Method::Conventional, Method::RandomPac, Method::NoOrca};
  const TrialRecord a = run_trial(quick_config(), spec, 42);
  const TrialRecord b = run_trial(quick_config(), spec, 42);
  for (Method m : spec.methods) {
    EXPECT_TRUE(a.result(m).ran);
    EXPECT_EQ(a.result(m).energy_efficiency, b.result(m).energy_efficiency) << to_string(m);
    EXPECT_EQ(a.result(m).far_user_interference, b.result(m).far_user_interference);
  }
  EXPECT_EQ(a.stage1_trace, b.stage1_trace);
  EXPECT_EQ(a.stage2_trace, b.stage2_trace);
  EXPECT_FALSE(a.result(Method::RandomClustering).ran);
  // Stage 2 never loses EE relative to Stage 1.
  ASSERT_TRUE(a.result(Method::Proposed).completed);
  EXPECT_GE(a.result(Method::Proposed).energy_efficiency, a.stage1_energy_efficiency - 1e-6);
  EXPECT_NEAR(a.result(Method::NoOrca).energy_efficiency, a.stage1_energy_efficiency, 1e-12);
}

TEST(RunTrial, SeedsDiffer) {
  EXPECT_NE(trial_seed(1, 0), trial_seed(1, 1));
  EXPECT_NE(trial_seed(1, 0), trial_seed(2, 0));
  EXPECT_EQ(trial_seed(5, 3), trial_seed(5, 3));
}

TEST(Emit, SchemaNullTokenAndDeterminism) {
  ExperimentSpec spec;
  spec.irs_elements = {16};
  spec.methods = {Method::Proposed};
  spec.output_dir = scratch_dir("emit");
  TrialRecord r;
  r.irs_elements = 16;
  r.bs_antennas = 8;
  r.result(Method::Proposed).ran = true;  // ran but produced nothing
  emit_results({r, r}, spec, SystemConfig{});
  const std::string summary = slurp(spec.output_dir / "summary.csv");
  EXPECT_EQ(summary, "method,N,M,mean_ee,std_ee,trials,infeasible\nproposed,16,8,NA,NA,0,2\n");
  EXPECT_EQ(slurp(spec.output_dir / "ici.csv"), "method,N,M,mean_ici,std_ici,trials\nproposed,16,8,NA,NA,0\n");
  for (const char* f : {"convergence_stage1.csv", "convergence_stage2.csv", "trials.csv", "manifest.txt",
                        "plot_results.py", "timing.txt"}) {
    EXPECT_TRUE(std::filesystem::exists(spec.output_dir / f)) << f;
  }
  EXPECT_EQ(slurp(spec.output_dir / "convergence_stage1.csv"), "N,M,iteration,mean_ee,runs\n");
}

TEST(Emit, RepeatedEmissionIsByteIdentical) {
  ExperimentSpec spec;
  spec.irs_elements = {16};
  spec.num_trials = 2;
  spec.methods = {Method::Proposed, Method::Conventional};
  const auto records = run_experiment(quick_config(), spec);
  ASSERT_EQ(records.size(), 2u);
  spec.output_dir = scratch_dir("first");
  emit_results(records, spec, quick_config());
  const auto first = spec.output_dir;
  spec.output_dir = scratch_dir("second");
  emit_results(records, spec, quick_config());
  for (const char* f : {"summary.csv", "ici.csv", "trials.csv", "convergence_stage1.csv", "convergence_stage2.csv",
                        "manifest.txt"}) {
    EXPECT_EQ(slurp(first / f), slurp(spec.output_dir / f)) << f;
  }
  const std::string manifest = slurp(first / "manifest.txt");
  EXPECT_NE(manifest.find("num_irs_elements = 16"), std::string::npos);
  EXPECT_NE(manifest.find("inputs_sha1 = "), std::string::npos);
}

TEST(Emit, UnwritableDirectoryNamesPath) {
  ExperimentSpec spec;
  spec.output_dir = "/proc/irsnoma_cannot_write_here";
  TrialRecord r;
  try {
    emit_results({r}, spec, SystemConfig{});
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("/proc/irsnoma_cannot_write_here"), std::string::npos);
  }
}

}  // namespace
}  // namespace irsnoma
