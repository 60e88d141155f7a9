// SPDX-License-Identifier: Apache-2.0
#include "irsnoma/channel.hpp"

#include <cassert>

namespace irsnoma {

namespace {

constexpr double kAngleSpan = std::numbers::pi / 3.0;

CMatrixd gaussian_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  CMatrixd g(rows, cols);
  // Column-major fill keeps the draw order fixed for a given seed.
  for (Eigen::Index c = 0; c < cols; ++c) {
    for (Eigen::Index r = 0; r < rows; ++r) {
      const double re = normal(rng);
      const double im = normal(rng);
      g(r, c) = cdouble(re, im);
    }
  }
  return g;
}

}  // namespace

UserGeometry draw_geometry(const SystemConfig& config, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> angle(-kAngleSpan, kAngleSpan);
  UserGeometry g;
  g.irs_arrival = angle(rng);
  g.bs_departure = angle(rng);
  g.irs_user_distance.resize(config.total_users);
  g.irs_departure.resize(config.total_users);
  for (int v = 0; v < config.total_users; ++v) {
    // 1 - U lies in (0, 1], so the radius is never zero.
    g.irs_user_distance[v] = config.user_radius * std::sqrt(1.0 - unit(rng));
    g.irs_departure[v] = angle(rng);
  }
  return g;
}

CMatrixd cascade(const CVectord& irs_user, const CMatrixd& bs_irs) {
  return irs_user.conjugate().asDiagonal() * bs_irs;
}

ChannelSet synthesize_channels(const SystemConfig& config, const UserGeometry& geometry, std::mt19937_64& rng) {
  const int n = config.num_irs_elements;
  const int m = config.num_bs_antennas;
  const double spacing = config.element_spacing_ratio;

  ChannelSet set;
  {
    const double delta = config.rician_bs_irs;
    const CMatrixd los = array_response(geometry.irs_arrival, n, spacing).conjugate() *
                         array_response(geometry.bs_departure, m, spacing).transpose();
    const double amp = std::sqrt(pathloss_factor(config.ref_pathloss, config.bs_irs_distance,
                                                 config.ref_distance, config.pathloss_exp_bs_irs));
    set.bs_irs = amp * (std::sqrt(delta / (1.0 + delta)) * los +
                        std::sqrt(1.0 / (1.0 + delta)) * gaussian_matrix(n, m, rng));
  }

  const double eps = config.rician_irs_user;
  const auto users = static_cast<std::size_t>(geometry.irs_user_distance.size());
  set.irs_user.reserve(users);
  set.cascaded.reserve(users);
  for (std::size_t v = 0; v < users; ++v) {
    const double amp = std::sqrt(pathloss_factor(config.ref_pathloss, geometry.irs_user_distance[v],
                                                 config.ref_distance, config.pathloss_exp_irs_user));
    CVectord h = amp * (std::sqrt(eps / (1.0 + eps)) * array_response(geometry.irs_departure[v], n, spacing) +
                        std::sqrt(1.0 / (1.0 + eps)) * gaussian_matrix(n, 1, rng).col(0));
    set.cascaded.push_back(cascade(h, set.bs_irs));
    set.irs_user.push_back(std::move(h));
  }
  return set;
}

std::vector<CRowVectord> effective_channels(const ChannelSet& channels, const CVectord& reflection) {
  std::vector<CRowVectord> out;
  out.reserve(channels.cascaded.size());
  for (const auto& w : channels.cascaded) out.push_back(effective_channel(w, reflection));
  return out;
}

LinkGains link_gains(const std::vector<std::vector<CRowVectord>>& users, const std::vector<CVectord>& beams) {
  const int clusters = static_cast<int>(users.size());
  if (static_cast<int>(beams.size()) != clusters) {
    throw std::invalid_argument("link_gains: one beam per cluster required");
  }
  LinkGains links;
  links.beam_norm_sq.resize(clusters);
  for (int j = 0; j < clusters; ++j) links.beam_norm_sq(j) = beams[j].squaredNorm();
  for (int i = 0; i < clusters; ++i) {
    const int k_count = static_cast<int>(users[i].size());
    Eigen::MatrixXd g(k_count, clusters);
    Eigen::VectorXd norms(k_count);
    for (int k = 0; k < k_count; ++k) {
      norms(k) = users[i][k].squaredNorm();
      for (int j = 0; j < clusters; ++j) g(k, j) = std::norm((users[i][k] * beams[j])(0));
    }
    links.gain.push_back(std::move(g));
    links.channel_norm_sq.push_back(std::move(norms));
  }
  return links;
}

Eigen::MatrixXd inter_cluster_interference(const LinkGains& links, const Eigen::MatrixXd& beta,
                                           double cluster_power) {
  const int clusters = links.num_clusters();
  const Eigen::VectorXd beam_power = cluster_power * beta.rowwise().sum();
  Eigen::MatrixXd psi(clusters, links.users_per_cluster());
  for (int i = 0; i < clusters; ++i) {
    Eigen::VectorXd others = beam_power;
    others(i) = 0.0;
    psi.row(i) = (links.gain[i] * others).transpose();
  }
  return psi;
}

ClusterLink cluster_link(const LinkGains& links, int cluster, const Eigen::MatrixXd& beta, double cluster_power) {
  ClusterLink link;
  link.own_gain = links.gain[cluster].col(cluster);
  link.interference = inter_cluster_interference(links, beta, cluster_power).row(cluster).transpose();
  link.channel_norm_sq = links.channel_norm_sq[cluster];
  link.beam_norm_sq = links.beam_norm_sq(cluster);
  return link;
}

double sinr(int k, const ClusterLink& link, const Eigen::Ref<const Eigen::VectorXd>& beta,
            const SystemConfig& config) {
  const auto count = beta.size();
#ifndef NDEBUG
  for (Eigen::Index l = 0; l + 1 < count; ++l) {
    assert(link.channel_norm_sq(l + 1) >= link.channel_norm_sq(l) && "cluster not sorted by channel gain");
  }
#endif
  const double p = config.cluster_power;
  const double g = link.own_gain(k);
  const double stronger = beta.tail(count - k - 1).sum();
  return p * beta(k) * g / (p * stronger * g + link.interference(k) + config.noise_power);
}

RatePower cluster_rate_and_power(const ClusterLink& link, const Eigen::Ref<const Eigen::VectorXd>& beta,
                                 const Eigen::Ref<const Eigen::VectorXd>& sinr_values, const SystemConfig& config) {
  RatePower out;
  for (Eigen::Index k = 0; k < sinr_values.size(); ++k) {
    out.rate += config.bandwidth * std::log2(1.0 + sinr_values(k));
  }
  out.power = link.beam_norm_sq * config.cluster_power * beta.sum() + config.circuit_power;
  return out;
}

SystemMetrics evaluate_system(const LinkGains& links, const Eigen::MatrixXd& beta, const SystemConfig& config) {
  const int clusters = links.num_clusters();
  const int k_count = links.users_per_cluster();
  const double p = config.cluster_power;

  SystemMetrics m;
  m.interference = inter_cluster_interference(links, beta, p);
  m.sinr.resize(clusters, k_count);
  m.rate.resize(clusters);
  m.power.resize(clusters);
  for (int i = 0; i < clusters; ++i) {
    ClusterLink link;
    link.own_gain = links.gain[i].col(i);
    link.interference = m.interference.row(i).transpose();
    link.channel_norm_sq = links.channel_norm_sq[i];
    link.beam_norm_sq = links.beam_norm_sq(i);
    const Eigen::VectorXd b = beta.row(i).transpose();
    for (int k = 0; k < k_count; ++k) m.sinr(i, k) = sinr(k, link, b, config);
    const RatePower rp = cluster_rate_and_power(link, b, m.sinr.row(i).transpose(), config);
    m.rate(i) = rp.rate;
    m.power(i) = rp.power;
    m.energy_efficiency += rp.rate / rp.power;
    m.far_user_interference += m.interference(i, 0);

    if ((m.sinr.row(i).array() < config.min_sinr * (1.0 - kSinrSlack)).any()) m.qos_met = false;
    for (int k = 0; k + 1 < k_count; ++k) {
      const double g_next = link.own_gain(k + 1);
      const double gap =
          link.beam_norm_sq * p * g_next * (b(k) - b.tail(k_count - k - 1).sum());
      if (gap < config.sic_power_gap * (1.0 - kSicSlack)) m.sic_met = false;
    }
    if (link.beam_norm_sq * p * b.sum() > config.max_power * (1.0 + kPowerSlack)) m.power_met = false;
  }
  m.far_user_interference /= clusters;
  return m;
}

}  // namespace irsnoma
