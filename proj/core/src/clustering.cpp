#include "stba/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "stba/errors.hpp"

namespace stba {

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

Rng iteration_stream(std::uint64_t seed, int iteration) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(iteration)};
  return Rng(seq);
}

std::size_t sample_merge(std::span<const MergeCandidate> candidates, double beta, Rng& rng) {
  if (candidates.empty()) throw Error("sample_merge needs at least one candidate");
  double top = -kInfinity;
  for (const auto& c : candidates) top = std::max(top, beta * c.delta_q);
  std::vector<double> weights(candidates.size());
  double total = 0.0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    weights[k] = std::exp(beta * candidates[k].delta_q - top);
    total += weights[k];
  }
  const double target = uniform01(rng) * total;
  double running = 0.0;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    running += weights[k];
    if (target < running) return k;
  }
  // Rounding can leave target == total; the last positive weight wins.
  for (std::size_t k = candidates.size(); k-- > 0;) {
    if (weights[k] > 0.0) return k;
  }
  return candidates.size() - 1;
}

namespace {

struct Link {
  int cluster;
  double weight;          // W: summed edge weight to `cluster`
  double degree_product;  // P: summed k_i k_j over the same edges
};

using Chooser = std::function<std::size_t(std::span<const MergeCandidate>)>;

ClusterAssignment merge_bottom_up(const CameraGraph& graph, std::size_t gamma,
                                  const Chooser& choose, std::vector<MergeCandidate>* merges) {
  const int m = graph.num_nodes();
  std::vector<std::vector<Link>> adjacency(m);
  for (const auto& e : graph.edges()) {
    const double p = graph.degree(e.i) * graph.degree(e.j);
    adjacency[e.i].push_back({e.j, e.weight, p});
    adjacency[e.j].push_back({e.i, e.weight, p});
  }
  const auto by_cluster = [](const Link& a, const Link& b) { return a.cluster < b.cluster; };
  for (auto& links : adjacency) std::sort(links.begin(), links.end(), by_cluster);

  std::vector<std::size_t> size(m, 1);
  std::vector<int> label(m);
  std::vector<std::vector<int>> members(m);
  for (int c = 0; c < m; ++c) {
    label[c] = c;
    members[c] = {c};
  }
  if (merges) merges->clear();

  const double s = graph.total_weight();
  std::vector<MergeCandidate> candidates;
  while (s > 0.0) {
    candidates.clear();
    for (int x = 0; x < m; ++x) {
      for (const Link& link : adjacency[x]) {
        if (link.cluster <= x || size[x] + size[link.cluster] > gamma) continue;
        const double dq = delta_modularity(link.weight, link.degree_product, s);
        if (dq > 0.0) candidates.push_back({x, link.cluster, dq});
      }
    }
    if (candidates.empty()) break;
    const MergeCandidate chosen = candidates[choose(candidates)];
    if (merges) merges->push_back(chosen);

    const int a = chosen.x;
    const int b = chosen.y;
    std::vector<Link> merged;
    merged.reserve(adjacency[a].size() + adjacency[b].size());
    std::size_t ia = 0;
    std::size_t ib = 0;
    const auto& la = adjacency[a];
    const auto& lb = adjacency[b];
    while (ia < la.size() || ib < lb.size()) {
      Link next;
      if (ib == lb.size() || (ia < la.size() && la[ia].cluster < lb[ib].cluster)) {
        next = la[ia++];
      } else if (ia == la.size() || lb[ib].cluster < la[ia].cluster) {
        next = lb[ib++];
      } else {
        next = la[ia++];
        next.weight += lb[ib].weight;
        next.degree_product += lb[ib].degree_product;
        ++ib;
      }
      if (next.cluster != a && next.cluster != b) merged.push_back(next);
    }
    // Neighbours of b now point at a.
    for (const Link& link : lb) {
      if (link.cluster == a) continue;
      auto& links = adjacency[link.cluster];
      links.erase(std::find_if(links.begin(), links.end(),
                               [b](const Link& l) { return l.cluster == b; }));
      auto it = std::lower_bound(links.begin(), links.end(), Link{a, 0.0, 0.0}, by_cluster);
      if (it != links.end() && it->cluster == a) {
        it->weight += link.weight;
        it->degree_product += link.degree_product;
      } else {
        links.insert(it, Link{a, link.weight, link.degree_product});
      }
    }
    adjacency[a] = std::move(merged);
    adjacency[b].clear();
    size[a] += size[b];
    size[b] = 0;
    for (int camera : members[b]) label[camera] = a;
    members[a].insert(members[a].end(), members[b].begin(), members[b].end());
    members[b].clear();
  }
  return ClusterAssignment(label);
}

}  // namespace

ClusterAssignment cluster_stochastic(const CameraGraph& graph, std::size_t gamma, double beta,
                                     Rng& rng, std::vector<MergeCandidate>* merges) {
  if (gamma < 1) throw Error("cluster size cap must be at least 1");
  if (!(beta > 0.0)) throw Error("beta must be positive");
  return merge_bottom_up(
      graph, gamma,
      [&](std::span<const MergeCandidate> c) { return sample_merge(c, beta, rng); }, merges);
}

ClusterAssignment cluster_deterministic(const CameraGraph& graph, std::size_t gamma,
                                        std::vector<MergeCandidate>* merges) {
  if (gamma < 1) throw Error("cluster size cap must be at least 1");
  return merge_bottom_up(
      graph, gamma,
      [](std::span<const MergeCandidate> c) {
        std::size_t best = 0;
        for (std::size_t k = 1; k < c.size(); ++k) {
          if (c[k].delta_q > c[best].delta_q) best = k;
        }
        return best;
      },
      merges);
}

std::vector<double> intra_cluster_frequency(const CameraGraph& graph,
                                            std::span<const ClusterAssignment> assignments) {
  std::vector<double> freq(graph.edges().size(), 0.0);
  if (assignments.empty()) return freq;
  for (const auto& a : assignments) {
    for (std::size_t e = 0; e < freq.size(); ++e) {
      const auto& edge = graph.edges()[e];
      if (a.cluster_of(edge.i) == a.cluster_of(edge.j)) freq[e] += 1.0;
    }
  }
  for (double& f : freq) f /= static_cast<double>(assignments.size());
  return freq;
}

}  // namespace stba
