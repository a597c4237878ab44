#ifndef STBA_SPLIT_HPP_
#define STBA_SPLIT_HPP_

#include <span>
#include <utility>
#include <vector>

#include "stba/camera_graph.hpp"
#include "stba/normal_equations.hpp"
#include "stba/problem.hpp"

namespace stba {

class WorkerPool;

/// One virtual copy of each physical point per cluster observing it,
/// ordered by (point, cluster). `groups` holds each copy's observations.
struct SplitIndex {
  std::vector<int> physical;       ///< virtual -> physical point
  std::vector<int> cluster;        ///< virtual -> cluster id
  std::vector<int> point_offsets;  ///< point j owns virtual [point_offsets[j], point_offsets[j+1])
  std::vector<int> virtual_of;     ///< observation -> virtual point
  EliminationSet groups;

  int num_virtual() const { return static_cast<int>(physical.size()); }
  int copies(int point) const { return point_offsets[point + 1] - point_offsets[point]; }
  /// sum over points of (copies - 1)
  int num_constraints() const { return num_virtual() - (static_cast<int>(point_offsets.size()) - 1); }
};

SplitIndex split_points(const BundleProblem& problem, const ClusterAssignment& assignment);

/// Equality constraints between virtual copies, as (hub, other) pairs: every
/// copy of a point is tied to the point's lowest-cluster copy.
struct ConstraintSet {
  std::vector<std::pair<int, int>> rows;

  int size() const { return static_cast<int>(rows.size()); }
};

ConstraintSet constraint_set(const SplitIndex& split);

/// A with 3 rows per constraint, [.. +I (hub) .. -I (other) ..], over the
/// split layout x' = [cameras; virtual points].
MatX dense_constraint_matrix(const ConstraintSet& constraints, int num_cameras, int num_virtual);

/// Damped C', its inverse and w' = -J'_p^T f per virtual point, written into
/// split.groups. Copies with a zero damped diagonal entry are dropped from
/// elimination; a non-factorizable block throws SingularVirtualBlock.
void assemble_split_blocks(SplitIndex& split, const JacobianBlocks& blocks, double lambda,
                           WorkerPool* pool = nullptr);

/// g - A^T nu with nu = (A H^-1 A^T)^-1 A H^-1 g, H = diag(h). g and h use
/// the split layout [cameras; virtual points]. Solved per physical point and
/// coordinate; copies with active[v] == 0 are left out (empty span: all in).
VecX steepest_descent_correction(const VecX& g, const SplitIndex& split, const VecX& h,
                                 int num_cameras, std::span<const char> active = {});

/// Applies the correction to split.groups.rhs using the damped C' diagonals.
void correct_split_gradient(SplitIndex& split);

/// Per-cluster reduced camera systems. No block couples two clusters.
struct SplitSystem {
  ReducedCameraSystem rcs;
  ClusterAssignment assignment;
};

SplitSystem cluster_schur(const BundleProblem& problem, const NormalBlocks& normal,
                          const SplitIndex& split, const ClusterAssignment& assignment,
                          WorkerPool* pool = nullptr);

/// Dense LL^T per cluster, run in parallel; dc is assembled in cluster order.
VecX solve_clusters(const SplitSystem& system, WorkerPool* pool = nullptr);

/// dp = C^-1 (w - E^T dc) with the unsplit point blocks.
inline VecX unified_point_update(const BundleProblem& problem, const NormalBlocks& normal,
                                 const VecX& dc, WorkerPool* pool = nullptr) {
  return back_substitute(problem, normal, dc, pool);
}

}  // namespace stba

#endif  // STBA_SPLIT_HPP_
