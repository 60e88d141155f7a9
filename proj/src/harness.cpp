// SPDX-License-Identifier: Apache-2.0
#include "irsnoma/harness.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "irsnoma/beamforming.hpp"
#include "irsnoma/clustering.hpp"
#include "irsnoma/opac.hpp"
#include "irsnoma/orca.hpp"

namespace irsnoma {

const char* to_string(Method method) {
  switch (method) {
    case Method::Proposed: return "proposed";
    case Method::Conventional: return "conventional";
    case Method::RandomClustering: return "random-clustering";
    case Method::RandomPac: return "random-pac";
    case Method::NoOrca: return "no-orca";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  for (Method m : kAllMethods) {
    if (name == to_string(m)) return m;
  }
  throw std::invalid_argument("unknown method: " + name);
}

void ExperimentSpec::validate() const {
  if (irs_elements.empty() || bs_antennas.empty()) throw std::invalid_argument("experiment grids must be nonempty");
  if (num_trials < 1) throw std::invalid_argument("num_trials must be >= 1");
  if (workers < 1) throw std::invalid_argument("workers must be >= 1");
  if (methods.empty()) throw std::invalid_argument("at least one method is required");
  for (int n : irs_elements) {
    if (n < 1) throw std::invalid_argument("IRS element counts must be positive");
  }
  for (int m : bs_antennas) {
    if (m < 1) throw std::invalid_argument("BS antenna counts must be positive");
  }
}

std::uint64_t trial_seed(std::uint64_t base, int trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                    static_cast<std::uint32_t>(trial)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (std::uint64_t{out[0]} << 32) | out[1];
}

namespace {

// Independent stream per (trial seed, N, M, purpose).
enum Stream : std::uint32_t { kGeometry = 1, kChannels, kClustering, kRandomClustering, kRandomPac, kReflection };

std::mt19937_64 stream(std::uint64_t seed, const SystemConfig& config, Stream purpose) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(config.num_irs_elements),
                    static_cast<std::uint32_t>(config.num_bs_antennas), static_cast<std::uint32_t>(purpose)};
  return std::mt19937_64(seq);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct Served {
  LinkGains links;
  BeamformerSet beams;
};

Served serve(const std::vector<CRowVectord>& u, const ClusterPlan& plan) {
  std::vector<CRowVectord> strongest;
  std::vector<std::vector<CRowVectord>> users;
  for (const auto& cluster : plan.clusters) {
    strongest.push_back(u[cluster.back()]);
    std::vector<CRowVectord> rows;
    for (int idx : cluster) rows.push_back(u[idx]);
    users.push_back(std::move(rows));
  }
  Served s;
  s.beams = build_zf_beamformers(strongest);
  s.links = link_gains(users, s.beams.beams);
  return s;
}

struct PipelineRun {
  MethodResult result;
  Stage1State stage1;
  ReflectionState stage2;
  double stage1_energy_efficiency = 0.0;
  double stage1_seconds = 0.0;
  double stage2_seconds = 0.0;
  LinkGains final_links;
};

// Stage 1 at the all-ones reflection, then Stage 2 with beta fixed.
PipelineRun run_pipeline(const SystemConfig& config, const ChannelSet& channels, const Served& served,
                         const ClusterPlan& plan, bool with_reflection, std::mt19937_64& rng) {
  PipelineRun run;
  run.result.ran = true;
  auto t0 = std::chrono::steady_clock::now();
  run.stage1 = dinkelbach_outer(served.links, config);
  run.stage1_seconds = seconds_since(t0);
  run.final_links = served.links;
  if (!(run.stage1.sinr_target > 0.0)) return run;

  run.stage1_energy_efficiency = evaluate_system(served.links, run.stage1.beta, config).energy_efficiency;
  if (with_reflection) {
    t0 = std::chrono::steady_clock::now();
    const LiftedSystem lifted = lift_user_matrices(channels, served.beams, plan);
    run.stage2 = orca_iterate(lifted, served.links, run.stage1.beta, run.stage1.sinr_target, config, rng);
    run.stage2_seconds = seconds_since(t0);
    run.final_links = reflection_link_gains(lifted, run.stage2.b, served.links);
  }
  const SystemMetrics m = evaluate_system(run.final_links, run.stage1.beta, config);
  run.result.completed = true;
  run.result.feasible = run.stage1.feasible && m.feasible();
  run.result.energy_efficiency = m.energy_efficiency;
  run.result.far_user_interference = m.far_user_interference;
  return run;
}

MethodResult random_pac(const SystemConfig& config, const LinkGains& links, std::mt19937_64& rng) {
  const int clusters = links.num_clusters();
  const int k_count = links.users_per_cluster();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd beta(clusters, k_count);
  for (int i = 0; i < clusters; ++i) {
    for (int k = 0; k < k_count; ++k) beta(i, k) = unit(rng);
    const double budget = std::min(1.0, config.max_power / (links.beam_norm_sq(i) * config.cluster_power));
    beta.row(i) *= budget / beta.row(i).sum();
  }
  const SystemMetrics m = evaluate_system(links, beta, config);
  MethodResult r;
  r.ran = r.completed = true;
  r.feasible = m.feasible();
  r.energy_efficiency = m.energy_efficiency;
  r.far_user_interference = m.far_user_interference;
  return r;
}

bool requested(const ExperimentSpec& spec, Method m) {
  return std::find(spec.methods.begin(), spec.methods.end(), m) != spec.methods.end();
}

}  // namespace

ConventionalResult run_conventional_bf_baseline(const LinkGains& links, const SystemConfig& config,
                                                ConventionalMode mode) {
  const int clusters = links.num_clusters();
  const int k_count = links.users_per_cluster();
  const double p = config.cluster_power;
  // Every beam is on for the whole frame at its full admissible power.
  Eigen::VectorXd level(clusters);
  for (int i = 0; i < clusters; ++i) level(i) = std::min(1.0, config.max_power / (links.beam_norm_sq(i) * p));

  ConventionalResult out;
  for (int i = 0; i < clusters; ++i) {
    double rate = 0.0;
    for (int k = 0; k < k_count; ++k) {
      if (mode == ConventionalMode::SingleUser && k != k_count - 1) continue;
      double psi = 0.0;
      for (int j = 0; j < clusters; ++j) {
        if (j != i) psi += p * level(j) * links.gain[i](k, j);
      }
      if (k == 0) out.far_user_interference += psi;
      const double snr = p * level(i) * links.gain[i](k, i) / (psi + config.noise_power);
      rate += config.bandwidth * std::log2(1.0 + snr);
    }
    if (mode == ConventionalMode::TimeSharing) rate /= k_count;
    const double power = links.beam_norm_sq(i) * p * level(i) + config.circuit_power;
    out.energy_efficiency += rate / power;
  }
  out.far_user_interference /= clusters;
  return out;
}

TrialRecord run_trial(const SystemConfig& config, const ExperimentSpec& spec, std::uint64_t seed) {
  validate(config);
  TrialRecord rec;
  rec.seed = seed;
  rec.irs_elements = config.num_irs_elements;
  rec.bs_antennas = config.num_bs_antennas;

  // Geometry uses a stream without N and M so the user drop is paired across the grid.
  SystemConfig geometry_key = config;
  geometry_key.num_irs_elements = 0;
  geometry_key.num_bs_antennas = 0;
  auto geometry_rng = stream(seed, geometry_key, kGeometry);
  const UserGeometry geometry = draw_geometry(config, geometry_rng);
  auto channel_rng = stream(seed, config, kChannels);
  const ChannelSet channels = synthesize_channels(config, geometry, channel_rng);
  const std::vector<CRowVectord> u = effective_channels(channels, CVectord::Ones(config.num_irs_elements));

  const bool need_proposed = requested(spec, Method::Proposed) || requested(spec, Method::Conventional) ||
                             requested(spec, Method::NoOrca) || requested(spec, Method::RandomPac);
  if (need_proposed) {
    auto cluster_rng = stream(seed, config, kClustering);
    const ClusterPlan plan = cluster_users(u, config.users_per_cluster, config.num_clusters,
                                           config.correlation_threshold, cluster_rng);
    std::optional<Served> served;
    try {
      served = serve(u, plan);
    } catch (const ZeroForcingError&) {
    }
    if (served) {
      const bool reflect = requested(spec, Method::Proposed) || requested(spec, Method::Conventional);
      auto reflection_rng = stream(seed, config, kReflection);
      const PipelineRun run = run_pipeline(config, channels, *served, plan, reflect, reflection_rng);
      rec.sinr_target = run.stage1.sinr_target;
      rec.stage1_energy_efficiency = run.stage1_energy_efficiency;
      rec.stage1_iterations = run.stage1.iterations;
      for (const auto& t : run.stage1.trace) rec.stage1_trace.push_back(t.energy_efficiency);
      rec.stage1_seconds = run.stage1_seconds;
      rec.stage2_seconds = run.stage2_seconds;
      rec.stage2_iterations = run.stage2.iterations;
      rec.stage2_fallback = run.stage2.fallback;
      for (const auto& t : run.stage2.trace) {
        rec.stage2_trace.push_back(t.energy_efficiency);
        rec.stage2_penalty.push_back(t.exact_penalty);
      }

      if (requested(spec, Method::Proposed)) rec.result(Method::Proposed) = run.result;
      if (requested(spec, Method::NoOrca)) {
        MethodResult& r = rec.result(Method::NoOrca);
        r.ran = true;
        if (run.result.completed) {
          const SystemMetrics m = evaluate_system(served->links, run.stage1.beta, config);
          r.completed = true;
          r.feasible = run.stage1.feasible && m.feasible();
          r.energy_efficiency = m.energy_efficiency;
          r.far_user_interference = m.far_user_interference;
        }
      }
      if (requested(spec, Method::Conventional)) {
        const ConventionalResult c = run_conventional_bf_baseline(run.final_links, config, spec.conventional_mode);
        MethodResult& r = rec.result(Method::Conventional);
        r.ran = r.completed = true;
        r.feasible = true;  // no QoS target applies to orthogonal service
        r.energy_efficiency = c.energy_efficiency;
        r.far_user_interference = c.far_user_interference;
      }
      if (requested(spec, Method::RandomPac)) {
        auto pac_rng = stream(seed, config, kRandomPac);
        rec.result(Method::RandomPac) = random_pac(config, served->links, pac_rng);
      }
    } else {
      for (Method m : {Method::Proposed, Method::Conventional, Method::NoOrca, Method::RandomPac}) {
        if (requested(spec, m)) rec.result(m).ran = true;
      }
    }
  }

  if (requested(spec, Method::RandomClustering)) {
    auto rng = stream(seed, config, kRandomClustering);
    const ClusterPlan plan = random_clusters(u, config.users_per_cluster, config.num_clusters, rng);
    MethodResult& r = rec.result(Method::RandomClustering);
    r.ran = true;
    try {
      const Served served = serve(u, plan);
      r = run_pipeline(config, channels, served, plan, true, rng).result;
    } catch (const ZeroForcingError&) {
    }
  }
  return rec;
}

std::vector<TrialRecord> run_experiment(const SystemConfig& base, const ExperimentSpec& spec) {
  spec.validate();
  struct Job {
    int n;
    int m;
    int trial;
  };
  std::vector<Job> jobs;
  for (int n : spec.irs_elements) {
    for (int m : spec.bs_antennas) {
      for (int t = 0; t < spec.num_trials; ++t) jobs.push_back({n, m, t});
    }
  }
  std::vector<TrialRecord> records(jobs.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;

  auto worker = [&] {
    for (std::size_t idx = next++; idx < jobs.size(); idx = next++) {
      try {
        SystemConfig config = base;
        config.num_irs_elements = jobs[idx].n;
        config.num_bs_antennas = jobs[idx].m;
        records[idx] = run_trial(config, spec, trial_seed(spec.seed, jobs[idx].trial));
        records[idx].trial = jobs[idx].trial;
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = jobs.size();
      }
    }
  };
  std::vector<std::thread> pool;
  const int threads = std::min<int>(spec.workers, static_cast<int>(jobs.size()));
  for (int w = 1; w < threads; ++w) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
  return records;
}

// ---------------------------------------------------------------------------
// Emission

namespace {

std::string num(double v) {
  if (!std::isfinite(v)) return kNullToken;
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct Moments {
  int count = 0;
  double mean = 0.0;
  double std = 0.0;
};

Moments moments(const std::vector<double>& xs) {
  Moments m;
  m.count = static_cast<int>(xs.size());
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= m.count;
  if (m.count > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - m.mean) * (x - m.mean);
    m.std = std::sqrt(ss / (m.count - 1));
  }
  return m;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  out.close();
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

// Records of one scenario, in emission order.
std::vector<std::pair<int, int>> scenarios(const ExperimentSpec& spec) {
  std::vector<std::pair<int, int>> out;
  for (int n : spec.irs_elements) {
    for (int m : spec.bs_antennas) out.emplace_back(n, m);
  }
  return out;
}

template <typename Fn>
void for_scenario(const std::vector<TrialRecord>& records, int n, int m, Fn&& fn) {
  for (const auto& r : records) {
    if (r.irs_elements == n && r.bs_antennas == m) fn(r);
  }
}

// Mean over runs with the last value carried forward once a run has stopped.
std::string convergence_rows(const std::vector<TrialRecord>& records, const ExperimentSpec& spec,
                             const std::vector<double> TrialRecord::*trace, const std::vector<double> TrialRecord::*extra) {
  std::ostringstream out;
  for (const auto& [n, m] : scenarios(spec)) {
    std::size_t longest = 0;
    for_scenario(records, n, m, [&](const TrialRecord& r) { longest = std::max(longest, (r.*trace).size()); });
    for (std::size_t it = 0; it < longest; ++it) {
      double sum = 0.0;
      double extra_sum = 0.0;
      int runs = 0;
      int active = 0;
      for_scenario(records, n, m, [&](const TrialRecord& r) {
        const auto& tr = r.*trace;
        if (tr.empty()) return;
        const std::size_t at = std::min(it, tr.size() - 1);
        sum += tr[at];
        if (extra) extra_sum += (r.*extra)[at];
        ++runs;
        if (it < tr.size()) ++active;
      });
      out << n << ',' << m << ',' << it + 1 << ',' << num(runs ? sum / runs : NAN);
      if (extra) out << ',' << num(runs ? extra_sum / runs : NAN);
      out << ',' << active << '\n';
    }
  }
  return out.str();
}

constexpr const char* kPlotScript = R"PY(#!/usr/bin/env python3
"""Plots the CSV outputs of `simulate`. Usage: plot_results.py [result_dir]"""
import sys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import pandas as pd

root = Path(sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent)
summary = pd.read_csv(root / "summary.csv", na_values="NA")
ici = pd.read_csv(root / "ici.csv", na_values="NA")
stage1 = pd.read_csv(root / "convergence_stage1.csv", na_values="NA")
stage2 = pd.read_csv(root / "convergence_stage2.csv", na_values="NA")

fig, ax = plt.subplots()
for (method, m), grp in summary.groupby(["method", "M"]):
    ax.errorbar(grp["N"], grp["mean_ee"], yerr=grp["std_ee"], marker="o", capsize=3, label=f"{method}, M={m}")
ax.set_xlabel("IRS elements N")
ax.set_ylabel("energy efficiency (bits/J)")
ax.legend()
fig.savefig(root / "ee_vs_n.png", dpi=150)

fig, ax = plt.subplots()
for (method, m), grp in ici.groupby(["method", "M"]):
    ax.plot(grp["N"], grp["mean_ici"], marker="s", label=f"{method}, M={m}")
ax.set_xlabel("IRS elements N")
ax.set_ylabel("far-user inter-cluster interference (W)")
ax.set_yscale("log")
ax.legend()
fig.savefig(root / "ici_vs_n.png", dpi=150)

for name, frame in (("stage1", stage1), ("stage2", stage2)):
    fig, ax = plt.subplots()
    for (n, m), grp in frame.groupby(["N", "M"]):
        ax.plot(grp["iteration"], grp["mean_ee"], marker=".", label=f"N={n}, M={m}")
    ax.set_xlabel("iteration")
    ax.set_ylabel("mean energy efficiency (bits/J)")
    ax.legend()
    fig.savefig(root / f"convergence_{name}.png", dpi=150)
)PY";

}  // namespace

std::string git_blob_hash(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(blob.data(), blob.size(), digest, &len, EVP_sha1(), nullptr) != 1) {
    throw std::runtime_error("SHA-1 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) {
    hex += kHex[digest[i] >> 4];
    hex += kHex[digest[i] & 15];
  }
  return hex;
}

void emit_results(const std::vector<TrialRecord>& records, const ExperimentSpec& spec, const SystemConfig& base) {
  if (records.empty()) throw std::invalid_argument("emit_results: no records");
  const auto& dir = spec.output_dir;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir.string() + ": " + ec.message());

  std::ostringstream summary, ici, trials;
  summary << "method,N,M,mean_ee,std_ee,trials,infeasible\n";
  ici << "method,N,M,mean_ici,std_ici,trials\n";
  trials << "trial,seed,N,M,method,completed,feasible,energy_efficiency,far_user_interference,sinr_target,"
            "stage1_iterations,stage2_iterations,stage2_fallback\n";
  for (Method method : kAllMethods) {
    if (!requested(spec, method)) continue;
    for (const auto& [n, m] : scenarios(spec)) {
      std::vector<double> ee, far;
      int infeasible = 0;
      for_scenario(records, n, m, [&](const TrialRecord& r) {
        const MethodResult& res = r.result(method);
        if (!res.ran) return;
        if (!res.feasible) ++infeasible;
        if (!res.completed) return;
        ee.push_back(res.energy_efficiency);
        far.push_back(res.far_user_interference);
      });
      const Moments e = moments(ee);
      const Moments f = moments(far);
      const bool none = e.count == 0;
      summary << to_string(method) << ',' << n << ',' << m << ',' << (none ? kNullToken : num(e.mean)) << ','
              << (none ? kNullToken : num(e.std)) << ',' << e.count << ',' << infeasible << '\n';
      ici << to_string(method) << ',' << n << ',' << m << ',' << (none ? kNullToken : num(f.mean)) << ','
          << (none ? kNullToken : num(f.std)) << ',' << f.count << '\n';
    }
  }
  for (const auto& r : records) {
    for (Method method : kAllMethods) {
      const MethodResult& res = r.result(method);
      if (!res.ran) continue;
      trials << r.trial << ',' << r.seed << ',' << r.irs_elements << ',' << r.bs_antennas << ',' << to_string(method)
             << ',' << int(res.completed) << ',' << int(res.feasible) << ','
             << (res.completed ? num(res.energy_efficiency) : kNullToken) << ','
             << (res.completed ? num(res.far_user_interference) : kNullToken) << ',' << num(r.sinr_target) << ','
             << r.stage1_iterations << ',' << r.stage2_iterations << ',' << int(r.stage2_fallback) << '\n';
    }
  }

  const std::string stage1 = "N,M,iteration,mean_ee,runs\n" +
                             convergence_rows(records, spec, &TrialRecord::stage1_trace, nullptr);
  const std::string stage2 = "N,M,iteration,mean_ee,mean_penalty,runs\n" +
                             convergence_rows(records, spec, &TrialRecord::stage2_trace, &TrialRecord::stage2_penalty);

  std::ostringstream inputs;
  inputs << format_config(base);
  inputs << "# experiment\n";
  inputs << "seed = " << spec.seed << "\ntrials = " << spec.num_trials << "\nn_grid =";
  for (int n : spec.irs_elements) inputs << ' ' << n;
  inputs << "\nm_grid =";
  for (int m : spec.bs_antennas) inputs << ' ' << m;
  inputs << "\nmethods =";
  for (Method m : spec.methods) inputs << ' ' << to_string(m);
  inputs << "\nconventional_mode = "
         << (spec.conventional_mode == ConventionalMode::TimeSharing ? "time-sharing" : "single-user") << '\n';
  const std::string manifest = inputs.str() + "# input hash (git blob sha1)\ninputs_sha1 = " +
                               git_blob_hash(inputs.str()) + '\n';

  std::ostringstream timing;
  timing << "N,M,trials,mean_stage1_s,mean_stage2_s\n";
  for (const auto& [n, m] : scenarios(spec)) {
    std::vector<double> s1, s2;
    for_scenario(records, n, m, [&](const TrialRecord& r) {
      s1.push_back(r.stage1_seconds);
      s2.push_back(r.stage2_seconds);
    });
    timing << n << ',' << m << ',' << s1.size() << ',' << num(moments(s1).mean) << ',' << num(moments(s2).mean) << '\n';
  }

  write_file(dir / "summary.csv", summary.str());
  write_file(dir / "ici.csv", ici.str());
  write_file(dir / "trials.csv", trials.str());
  write_file(dir / "convergence_stage1.csv", stage1);
  write_file(dir / "convergence_stage2.csv", stage2);
  write_file(dir / "manifest.txt", manifest);
  write_file(dir / "timing.txt", timing.str());
  write_file(dir / "plot_results.py", kPlotScript);
}

}  // namespace irsnoma
