#ifndef STBA_CAMERA_GRAPH_HPP_
#define STBA_CAMERA_GRAPH_HPP_

#include <vector>

#include "stba/problem.hpp"

namespace stba {

struct CameraEdge {
  int i = 0;  ///< i < j
  int j = 0;
  double weight = 0.0;  ///< covisible point count
};

/// Covisibility graph over cameras. Edges are stored once, sorted by (i, j).
class CameraGraph {
 public:
  CameraGraph() = default;
  CameraGraph(int num_nodes, std::vector<CameraEdge> edges);

  int num_nodes() const { return static_cast<int>(degree_.size()); }
  const std::vector<CameraEdge>& edges() const { return edges_; }
  /// k_i = sum_j w_ij
  double degree(int node) const { return degree_[node]; }
  const std::vector<double>& degrees() const { return degree_; }
  /// s = sum of edge weights
  double total_weight() const { return total_weight_; }

 private:
  std::vector<CameraEdge> edges_;
  std::vector<double> degree_;
  double total_weight_ = 0.0;
};

CameraGraph build_camera_graph(const BundleProblem& problem);

/// Camera to cluster map with dense ids in [0, count()).
class ClusterAssignment {
 public:
  ClusterAssignment() = default;
  /// Relabels arbitrary ids densely in order of first appearance.
  explicit ClusterAssignment(const std::vector<int>& labels);

  static ClusterAssignment singletons(int num_cameras);
  static ClusterAssignment single(int num_cameras);

  int num_cameras() const { return static_cast<int>(cluster_of_.size()); }
  int count() const { return static_cast<int>(members_.size()); }
  int cluster_of(int camera) const { return cluster_of_[camera]; }
  const std::vector<int>& labels() const { return cluster_of_; }
  /// Cameras of a cluster, ascending.
  const std::vector<int>& members(int cluster) const { return members_[cluster]; }
  int size(int cluster) const { return static_cast<int>(members_[cluster].size()); }
  int max_size() const;

  bool operator==(const ClusterAssignment& other) const { return cluster_of_ == other.cluster_of_; }

 private:
  std::vector<int> cluster_of_;
  std::vector<std::vector<int>> members_;
};

/// Q = (1/2s) sum over stored edges of delta(c_i, c_j) (w_ij - k_i k_j / 2s).
double modularity(const CameraGraph& graph, const ClusterAssignment& assignment);

/// Q after merging clusters x and y minus Q before. Only edges between x and
/// y change status, so this is (W_xy - P_xy / 2s) / 2s with W_xy the weight
/// and P_xy the sum of k_i k_j over those edges.
double delta_modularity(const CameraGraph& graph, const ClusterAssignment& assignment, int x,
                        int y);

/// delta_modularity from the crossing-edge sums.
inline double delta_modularity(double crossing_weight, double crossing_degree_product,
                               double total_weight) {
  const double two_s = 2.0 * total_weight;
  return (crossing_weight - crossing_degree_product / two_s) / two_s;
}

}  // namespace stba

#endif  // STBA_CAMERA_GRAPH_HPP_
