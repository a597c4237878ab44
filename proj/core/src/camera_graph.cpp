#include "stba/camera_graph.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>

#include "stba/errors.hpp"

namespace stba {

CameraGraph::CameraGraph(int num_nodes, std::vector<CameraEdge> edges)
    : edges_(std::move(edges)), degree_(static_cast<std::size_t>(num_nodes), 0.0) {
  for (auto& e : edges_) {
    if (e.i == e.j) throw Error("camera graph self-loop");
    if (e.i > e.j) std::swap(e.i, e.j);
  }
  std::sort(edges_.begin(), edges_.end(), [](const CameraEdge& a, const CameraEdge& b) {
    return a.i != b.i ? a.i < b.i : a.j < b.j;
  });
  for (const auto& e : edges_) {
    degree_[e.i] += e.weight;
    degree_[e.j] += e.weight;
    total_weight_ += e.weight;
  }
}

CameraGraph build_camera_graph(const BundleProblem& problem) {
  const auto& observations = problem.observations();
  const auto m = static_cast<std::uint64_t>(problem.num_cameras());
  std::vector<std::uint64_t> pairs;
  for (int j = 0; j < problem.num_points(); ++j) {
    const auto [first, last] = problem.point_observation_range(j);
    for (int a = first; a < last; ++a) {
      for (int b = a + 1; b < last; ++b) {
        // Cameras ascend within a point.
        pairs.push_back(static_cast<std::uint64_t>(observations[a].camera) * m +
                        static_cast<std::uint64_t>(observations[b].camera));
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<CameraEdge> edges;
  for (std::size_t k = 0; k < pairs.size();) {
    std::size_t end = k;
    while (end < pairs.size() && pairs[end] == pairs[k]) ++end;
    edges.push_back({static_cast<int>(pairs[k] / m), static_cast<int>(pairs[k] % m),
                     static_cast<double>(end - k)});
    k = end;
  }
  return CameraGraph(problem.num_cameras(), std::move(edges));
}

ClusterAssignment::ClusterAssignment(const std::vector<int>& labels)
    : cluster_of_(labels.size()) {
  std::unordered_map<int, int> dense;
  for (std::size_t c = 0; c < labels.size(); ++c) {
    const auto [it, inserted] = dense.try_emplace(labels[c], static_cast<int>(dense.size()));
    const int id = it->second;
    if (inserted) members_.emplace_back();
    cluster_of_[c] = id;
    members_[id].push_back(static_cast<int>(c));
  }
}

ClusterAssignment ClusterAssignment::singletons(int num_cameras) {
  std::vector<int> labels(static_cast<std::size_t>(num_cameras));
  for (int c = 0; c < num_cameras; ++c) labels[c] = c;
  return ClusterAssignment(labels);
}

ClusterAssignment ClusterAssignment::single(int num_cameras) {
  return ClusterAssignment(std::vector<int>(static_cast<std::size_t>(num_cameras), 0));
}

int ClusterAssignment::max_size() const {
  int best = 0;
  for (const auto& m : members_) best = std::max(best, static_cast<int>(m.size()));
  return best;
}

double modularity(const CameraGraph& graph, const ClusterAssignment& assignment) {
  const double two_s = 2.0 * graph.total_weight();
  if (two_s == 0.0) return 0.0;
  double q = 0.0;
  for (const auto& e : graph.edges()) {
    if (assignment.cluster_of(e.i) != assignment.cluster_of(e.j)) continue;
    q += e.weight - graph.degree(e.i) * graph.degree(e.j) / two_s;
  }
  return q / two_s;
}

double delta_modularity(const CameraGraph& graph, const ClusterAssignment& assignment, int x,
                        int y) {
  if (graph.total_weight() == 0.0) return 0.0;
  double w = 0.0;
  double p = 0.0;
  for (const auto& e : graph.edges()) {
    const int a = assignment.cluster_of(e.i);
    const int b = assignment.cluster_of(e.j);
    if ((a == x && b == y) || (a == y && b == x)) {
      w += e.weight;
      p += graph.degree(e.i) * graph.degree(e.j);
    }
  }
  return delta_modularity(w, p, graph.total_weight());
}

}  // namespace stba
