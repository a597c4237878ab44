#ifndef STBA_NORMAL_EQUATIONS_HPP_
#define STBA_NORMAL_EQUATIONS_HPP_

#include <span>
#include <vector>

#include "stba/common.hpp"
#include "stba/problem.hpp"
#include "stba/robust_jacobians.hpp"

namespace stba {

class WorkerPool;

/// Point-like variables eliminated by the Schur complement. A group is either
/// a physical point or a virtual copy of one; it owns a list of observations
/// (ascending camera order) and the damped 3x3 Hessian block, its inverse and
/// the gradient -J_p^T f accumulated over exactly those observations.
struct EliminationSet {
  std::vector<int> offsets{0};    ///< group g owns observations [offsets[g], offsets[g+1])
  std::vector<int> observations;  ///< observation indices
  std::vector<Mat3> blocks;       ///< J^T J + lambda diag(J^T J)
  std::vector<Vec3> diagonals;    ///< diag(J^T J), undamped
  std::vector<Mat3> inverses;
  std::vector<Vec3> rhs;          ///< -J^T f
  std::vector<char> active;       ///< 0 when the group was dropped from elimination
  int dropped_observations = 0;

  int size() const { return static_cast<int>(offsets.size()) - 1; }
  std::span<const int> members(int group) const {
    return {observations.data() + offsets[group],
            static_cast<std::size_t>(offsets[group + 1] - offsets[group])};
  }
};

/// How build_elimination_set reacts to a damped block that cannot be factorized.
enum class SingularPolicy {
  kThrowPoint,    ///< throw SingularPointBlock
  kThrowVirtual,  ///< throw SingularVirtualBlock
  kDrop,          ///< drop groups with a zero damped diagonal entry, throw otherwise
};

/// Accumulates, damps and inverts the per-group 3x3 blocks. Accumulation
/// runs over each group's observations in stored order.
void build_elimination_set(EliminationSet& set, const JacobianBlocks& blocks, double lambda,
                           SingularPolicy policy, WorkerPool* pool = nullptr);

/// Groups = physical points, observations in (point, camera) order.
EliminationSet point_groups(const BundleProblem& problem);

/// Normal equations of the damped Gauss-Newton system
///   [B  E] [dc]   [v]
///   [E' C] [dp] = [w]
/// with B = Jc^T Jc + lambda diag(Jc^T Jc), C likewise, E = Jc^T Jp,
/// v = -Jc^T f and w = -Jp^T f. E is stored per observation.
struct NormalBlocks {
  double lambda = 0.0;
  std::vector<Mat6> B;        ///< damped, per camera
  std::vector<Vec6> B_diag;   ///< diag(Jc^T Jc), undamped
  std::vector<Mat63> E;       ///< per observation
  VecX v;                     ///< 6m
  EliminationSet points;      ///< C, C^-1 and w per physical point

  const Mat3& C(int point) const { return points.blocks[point]; }
  Vec3 w(int point) const { return points.rhs[point]; }
};

/// Assembles the camera blocks and per-observation E. Throws
/// SingularPointBlock when a damped C block cannot be factorized.
NormalBlocks assemble_normal_blocks(const BundleProblem& problem, const JacobianBlocks& blocks,
                                    double lambda, WorkerPool* pool = nullptr);

/// Block sparsity of a reduced camera system. Each row lists its column
/// cameras in ascending order, diagonal included.
struct RcsStructure {
  std::vector<int> row_offsets{0};
  std::vector<int> columns;

  int num_rows() const { return static_cast<int>(row_offsets.size()) - 1; }
  int num_blocks() const { return static_cast<int>(columns.size()); }
  /// Slot of block (row, col), -1 if structurally absent.
  int find(int row, int col) const;
};

/// Camera pairs sharing an active group. With physical points this is the
/// covisibility pattern; with virtual points only intra-cluster pairs occur.
RcsStructure rcs_structure(const BundleProblem& problem, const EliminationSet& groups);

/// S dc = rhs with S = B - E C^-1 E^T, rhs = v - E C^-1 w, stored as full
/// block rows. The upper triangle is computed and mirrored, so S is exactly
/// symmetric.
struct ReducedCameraSystem {
  RcsStructure structure;
  std::vector<Mat6> blocks;  ///< one per structure slot
  VecX rhs;

  int num_cameras() const { return structure.num_rows(); }
  const Mat6& block(int row, int col) const;
  MatX dense() const;
  /// Dense restriction to the listed cameras (ascending).
  MatX dense(std::span<const int> cameras) const;
  VecX multiply(const VecX& x, WorkerPool* pool = nullptr) const;
};

/// Schur complement over an arbitrary elimination set. Groups use the
/// per-observation E of `normal`; a camera's gradient comes from normal.v.
ReducedCameraSystem schur_complement(const BundleProblem& problem, const NormalBlocks& normal,
                                     const EliminationSet& groups, WorkerPool* pool = nullptr);

/// Schur complement over the physical points.
ReducedCameraSystem schur_reduce(const BundleProblem& problem, const NormalBlocks& normal,
                                 WorkerPool* pool = nullptr);

enum class RcsMethod { kDenseCholesky, kBlockJacobiPcg };

struct PcgOptions {
  double tolerance = 1e-6;
  int max_iterations = 500;
};

struct PcgReport {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Dense LL^T on the restriction of S to `cameras`. Throws NotPositiveDefinite.
VecX solve_dense(const ReducedCameraSystem& rcs, std::span<const int> cameras);

/// Block-Jacobi preconditioned CG from zero. Throws PcgStalled when the
/// relative residual is still above tolerance after max_iterations.
VecX solve_pcg(const ReducedCameraSystem& rcs, const PcgOptions& options = {},
               WorkerPool* pool = nullptr, PcgReport* report = nullptr);

VecX solve_rcs(const ReducedCameraSystem& rcs, RcsMethod method, const PcgOptions& options = {},
               WorkerPool* pool = nullptr);

/// dp_j = C_j^-1 (w_j - sum_i E_ij^T dc_i) over the physical points.
VecX back_substitute(const BundleProblem& problem, const NormalBlocks& normal, const VecX& dc,
                     WorkerPool* pool = nullptr);

}  // namespace stba

#endif  // STBA_NORMAL_EQUATIONS_HPP_
