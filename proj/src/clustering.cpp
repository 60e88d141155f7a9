// SPDX-License-Identifier: Apache-2.0
#include "irsnoma/clustering.hpp"

#include <algorithm>
#include <numeric>

namespace irsnoma {

namespace {

constexpr double kRelaxStep = 0.05;

struct Pair {
  int x = -1;
  int y = -1;
};

// argmax |D| over pairs of active users; strict '>' keeps the lowest index pair on ties.
Pair best_pair(const Eigen::MatrixXd& d, const std::vector<bool>& active) {
  Pair best;
  double best_value = 0.0;
  const auto v = d.rows();
  for (Eigen::Index x = 0; x < v; ++x) {
    if (!active[x]) continue;
    for (Eigen::Index y = x + 1; y < v; ++y) {
      if (!active[y]) continue;
      const double value = std::abs(d(x, y));
      if (value > best_value) {
        best_value = value;
        best = {int(x), int(y)};
      }
    }
  }
  return best;
}

Eigen::MatrixXd difference_among(const std::vector<CRowVectord>& channels, const std::vector<bool>& active,
                                 double threshold) {
  const int v = static_cast<int>(channels.size());
  Eigen::MatrixXd d = Eigen::MatrixXd::Zero(v, v);
  for (int x = 0; x < v; ++x) {
    if (!active[x]) continue;
    for (int y = x + 1; y < v; ++y) {
      if (!active[y]) continue;
      if (correlation(channels[x], channels[y]) > threshold) {
        d(x, y) = channels[x].squaredNorm() - channels[y].squaredNorm();
      }
    }
  }
  return d;
}

std::vector<int> random_active(const std::vector<bool>& active, int count, std::mt19937_64& rng) {
  std::vector<int> pool;
  for (int u = 0; u < static_cast<int>(active.size()); ++u) {
    if (active[u]) pool.push_back(u);
  }
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(std::min<std::size_t>(pool.size(), static_cast<std::size_t>(count)));
  return pool;
}

// The seed pair for one cluster: the original matrix first, then relaxed thresholds.
Pair seed_pair(const Eigen::MatrixXd& difference, const std::vector<CRowVectord>& channels,
               const std::vector<bool>& active, double threshold) {
  Pair p = best_pair(difference, active);
  for (double relaxed = threshold - kRelaxStep; p.x < 0 && relaxed > -kRelaxStep; relaxed -= kRelaxStep) {
    p = best_pair(difference_among(channels, active, relaxed), active);
  }
  return p;
}

// Most correlated active user with the anchor above the (progressively relaxed) threshold.
int best_companion(int anchor, const std::vector<CRowVectord>& channels, const std::vector<bool>& active,
                   double threshold) {
  for (double gate = threshold; gate > -kRelaxStep; gate -= kRelaxStep) {
    int best = -1;
    double best_c = -1.0;
    for (int u = 0; u < static_cast<int>(channels.size()); ++u) {
      if (!active[u]) continue;
      const double c = correlation(channels[anchor], channels[u]);
      if (c > gate && c > best_c) {
        best_c = c;
        best = u;
      }
    }
    if (best >= 0) return best;
  }
  return -1;
}

}  // namespace

Eigen::MatrixXd build_difference_matrix(const std::vector<CRowVectord>& channels, double threshold) {
  return difference_among(channels, std::vector<bool>(channels.size(), true), threshold);
}

void sort_by_gain(ClusterPlan& plan, const std::vector<CRowVectord>& channels) {
  for (auto& c : plan.clusters) {
    std::stable_sort(c.begin(), c.end(), [&](int a, int b) {
      return channels[a].squaredNorm() < channels[b].squaredNorm();
    });
  }
}

ClusterPlan form_clusters(const Eigen::MatrixXd& difference, const std::vector<CRowVectord>& channels,
                          int users_per_cluster, int num_clusters, double threshold, std::mt19937_64& rng) {
  const int v = static_cast<int>(channels.size());
  if (users_per_cluster * num_clusters > v) {
    throw std::invalid_argument("form_clusters: not enough users for the requested clusters");
  }
  std::vector<bool> active(v, true);
  ClusterPlan plan;

  for (int i = 0; i < num_clusters; ++i) {
    std::vector<int> members;
    if (users_per_cluster == 1) {
      // Single-user beams: take the strongest remaining user.
      int best = -1;
      for (int u = 0; u < v; ++u) {
        if (active[u] && (best < 0 || channels[u].squaredNorm() > channels[best].squaredNorm())) best = u;
      }
      members.push_back(best);
    } else {
      const Pair p = seed_pair(difference, channels, active, threshold);
      if (p.x < 0) {
        members = random_active(active, users_per_cluster, rng);
      } else {
        members = {p.x, p.y};
      }
    }
    for (int u : members) active[u] = false;

    // Clusters larger than a pair grow around their strongest member.
    while (static_cast<int>(members.size()) < users_per_cluster) {
      const int strongest = *std::max_element(members.begin(), members.end(), [&](int a, int b) {
        return channels[a].squaredNorm() < channels[b].squaredNorm();
      });
      int next = best_companion(strongest, channels, active, threshold);
      if (next < 0) next = random_active(active, 1, rng).front();
      members.push_back(next);
      active[next] = false;
    }
    plan.clusters.push_back(std::move(members));
  }
  for (int u = 0; u < v; ++u) {
    if (active[u]) plan.leftover.push_back(u);
  }
  sort_by_gain(plan, channels);
  return plan;
}

ClusterPlan cluster_users(const std::vector<CRowVectord>& channels, int users_per_cluster, int num_clusters,
                          double threshold, std::mt19937_64& rng) {
  return form_clusters(build_difference_matrix(channels, threshold), channels, users_per_cluster, num_clusters,
                       threshold, rng);
}

ClusterPlan random_clusters(const std::vector<CRowVectord>& channels, int users_per_cluster, int num_clusters,
                            std::mt19937_64& rng) {
  const int v = static_cast<int>(channels.size());
  if (users_per_cluster * num_clusters > v) {
    throw std::invalid_argument("random_clusters: not enough users for the requested clusters");
  }
  std::vector<int> order(v);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  ClusterPlan plan;
  for (int i = 0; i < num_clusters; ++i) {
    plan.clusters.emplace_back(order.begin() + i * users_per_cluster, order.begin() + (i + 1) * users_per_cluster);
  }
  plan.leftover.assign(order.begin() + num_clusters * users_per_cluster, order.end());
  std::sort(plan.leftover.begin(), plan.leftover.end());
  sort_by_gain(plan, channels);
  return plan;
}

}  // namespace irsnoma
