#ifndef STBA_CLUSTERING_HPP_
#define STBA_CLUSTERING_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "stba/camera_graph.hpp"
#include "stba/common.hpp"

namespace stba {

using Rng = std::mt19937_64;

/// Uniform double in [0, 1) from the top 53 bits of one draw.
double uniform01(Rng& rng);

/// Independent generator for one solver iteration.
Rng iteration_stream(std::uint64_t seed, int iteration);

struct MergeCandidate {
  int x = 0;  ///< x < y, both live cluster ids
  int y = 0;
  double delta_q = 0.0;
};

/// Index drawn with probability exp(beta dQ_k) / sum_l exp(beta dQ_l).
std::size_t sample_merge(std::span<const MergeCandidate> candidates, double beta, Rng& rng);

/// Bottom-up merging from singletons. Candidates are adjacent cluster pairs
/// whose merged size is <= gamma and whose dQ > 0, enumerated by (x, y); a
/// merged cluster keeps the smaller id. Stops when no candidate remains.
/// `merges`, when given, receives the chosen candidates in order.
ClusterAssignment cluster_stochastic(const CameraGraph& graph, std::size_t gamma, double beta,
                                     Rng& rng, std::vector<MergeCandidate>* merges = nullptr);

/// Greedy variant merging the largest dQ; ties go to the first candidate in
/// (x, y) order.
ClusterAssignment cluster_deterministic(const CameraGraph& graph, std::size_t gamma,
                                        std::vector<MergeCandidate>* merges = nullptr);

/// Fraction of assignments in which each edge of `graph` is intra-cluster,
/// in edge order.
std::vector<double> intra_cluster_frequency(const CameraGraph& graph,
                                            std::span<const ClusterAssignment> assignments);

}  // namespace stba

#endif  // STBA_CLUSTERING_HPP_
