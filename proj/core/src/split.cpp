#include "stba/split.hpp"

#include <algorithm>
#include <string>

#include "stba/errors.hpp"
#include "stba/parallel.hpp"

namespace stba {

SplitIndex split_points(const BundleProblem& problem, const ClusterAssignment& assignment) {
  const auto& observations = problem.observations();
  const int n = problem.num_points();
  SplitIndex split;
  split.point_offsets.assign(static_cast<std::size_t>(n) + 1, 0);
  split.virtual_of.assign(observations.size(), -1);
  split.groups.offsets = {0};
  split.groups.observations.reserve(observations.size());

  std::vector<int> clusters;
  for (int j = 0; j < n; ++j) {
    const auto [first, last] = problem.point_observation_range(j);
    clusters.clear();
    for (int o = first; o < last; ++o) clusters.push_back(assignment.cluster_of(observations[o].camera));
    std::sort(clusters.begin(), clusters.end());
    clusters.erase(std::unique(clusters.begin(), clusters.end()), clusters.end());
    for (int c : clusters) {
      const int v = static_cast<int>(split.physical.size());
      split.physical.push_back(j);
      split.cluster.push_back(c);
      for (int o = first; o < last; ++o) {
        if (assignment.cluster_of(observations[o].camera) != c) continue;
        split.virtual_of[o] = v;
        split.groups.observations.push_back(o);
      }
      split.groups.offsets.push_back(static_cast<int>(split.groups.observations.size()));
    }
    split.point_offsets[j + 1] = static_cast<int>(split.physical.size());
  }
  return split;
}

ConstraintSet constraint_set(const SplitIndex& split) {
  ConstraintSet set;
  const int n = static_cast<int>(split.point_offsets.size()) - 1;
  for (int j = 0; j < n; ++j) {
    const int hub = split.point_offsets[j];
    for (int v = hub + 1; v < split.point_offsets[j + 1]; ++v) set.rows.emplace_back(hub, v);
  }
  return set;
}

MatX dense_constraint_matrix(const ConstraintSet& constraints, int num_cameras, int num_virtual) {
  const Eigen::Index cols = kCameraDim * num_cameras + kPointDim * num_virtual;
  MatX a = MatX::Zero(kPointDim * constraints.size(), cols);
  for (int r = 0; r < constraints.size(); ++r) {
    const auto [hub, other] = constraints.rows[r];
    a.block<3, 3>(kPointDim * r, kCameraDim * num_cameras + kPointDim * hub) = Mat3::Identity();
    a.block<3, 3>(kPointDim * r, kCameraDim * num_cameras + kPointDim * other) = -Mat3::Identity();
  }
  return a;
}

void assemble_split_blocks(SplitIndex& split, const JacobianBlocks& blocks, double lambda,
                           WorkerPool* pool) {
  build_elimination_set(split.groups, blocks, lambda, SingularPolicy::kDrop, pool);
}

VecX steepest_descent_correction(const VecX& g, const SplitIndex& split, const VecX& h,
                                 int num_cameras, std::span<const char> active) {
  VecX out = g;
  const Eigen::Index base = kCameraDim * static_cast<Eigen::Index>(num_cameras);
  const int n = static_cast<int>(split.point_offsets.size()) - 1;
  std::vector<int> copies;
  std::vector<double> nu;
  for (int j = 0; j < n; ++j) {
    copies.clear();
    for (int v = split.point_offsets[j]; v < split.point_offsets[j + 1]; ++v) {
      if (active.empty() || active[v]) copies.push_back(v);
    }
    if (copies.size() < 2) continue;
    for (int d = 0; d < kPointDim; ++d) {
      const auto at = [&](int v) { return base + kPointDim * static_cast<Eigen::Index>(v) + d; };
      const double g0 = g[at(copies[0])];
      const double h0 = h[at(copies[0])];
      // M = D + rho 11^T with D = diag(1/h_a), rho = 1/h_0; Sherman-Morrison.
      double sum_h = 0.0;
      double sum_hr = 0.0;
      nu.assign(copies.size(), 0.0);
      for (std::size_t a = 1; a < copies.size(); ++a) {
        const double ha = h[at(copies[a])];
        const double ra = g0 / h0 - g[at(copies[a])] / ha;
        nu[a] = ha * ra;
        sum_h += ha;
        sum_hr += ha * ra;
      }
      const double rho = 1.0 / h0;
      const double scale = rho * sum_hr / (1.0 + rho * sum_h);
      double total = 0.0;
      for (std::size_t a = 1; a < copies.size(); ++a) {
        nu[a] -= h[at(copies[a])] * scale;
        total += nu[a];
        out[at(copies[a])] += nu[a];
      }
      out[at(copies[0])] -= total;
    }
  }
  return out;
}

void correct_split_gradient(SplitIndex& split) {
  const int nv = split.num_virtual();
  VecX g(kPointDim * static_cast<Eigen::Index>(nv));
  VecX h(g.size());
  for (int v = 0; v < nv; ++v) {
    g.segment<3>(kPointDim * v) = split.groups.rhs[v];
    h.segment<3>(kPointDim * v) = split.groups.blocks[v].diagonal();
  }
  const VecX corrected = steepest_descent_correction(g, split, h, 0, split.groups.active);
  for (int v = 0; v < nv; ++v) split.groups.rhs[v] = corrected.segment<3>(kPointDim * v);
}

SplitSystem cluster_schur(const BundleProblem& problem, const NormalBlocks& normal,
                          const SplitIndex& split, const ClusterAssignment& assignment,
                          WorkerPool* pool) {
  return SplitSystem{schur_complement(problem, normal, split.groups, pool), assignment};
}

VecX solve_clusters(const SplitSystem& system, WorkerPool* pool) {
  const int l = system.assignment.count();
  std::vector<VecX> parts(static_cast<std::size_t>(l));
  std::vector<std::string> failures(static_cast<std::size_t>(l));
  parallel_for(pool, static_cast<std::size_t>(l), [&](std::size_t begin, std::size_t end) {
    for (std::size_t c = begin; c < end; ++c) {
      try {
        parts[c] = solve_dense(system.rcs, system.assignment.members(static_cast<int>(c)));
      } catch (const NotPositiveDefinite& e) {
        failures[c] = e.what();
      }
    }
  });
  VecX dc(kCameraDim * static_cast<Eigen::Index>(system.assignment.num_cameras()));
  for (int c = 0; c < l; ++c) {
    if (!failures[c].empty()) {
      throw NotPositiveDefinite("cluster " + std::to_string(c) + ": " + failures[c]);
    }
    const auto& members = system.assignment.members(c);
    for (std::size_t a = 0; a < members.size(); ++a) {
      dc.segment<6>(kCameraDim * members[a]) = parts[c].segment<6>(kCameraDim * static_cast<Eigen::Index>(a));
    }
  }
  return dc;
}

}  // namespace stba
