#include "stba/normal_equations.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <Eigen/Cholesky>

#include "stba/errors.hpp"
#include "stba/parallel.hpp"

namespace stba {

namespace {

double dot(const VecX& a, const VecX& b, std::vector<double>& scratch) {
  const Eigen::Index rows = a.size() / kCameraDim;
  scratch.resize(static_cast<std::size_t>(rows));
  for (Eigen::Index i = 0; i < rows; ++i) {
    scratch[static_cast<std::size_t>(i)] =
        a.segment<6>(kCameraDim * i).dot(b.segment<6>(kCameraDim * i));
  }
  return pairwise_sum(scratch);
}

}  // namespace

void build_elimination_set(EliminationSet& set, const JacobianBlocks& blocks, double lambda,
                           SingularPolicy policy, WorkerPool* pool) {
  const int groups = set.size();
  set.blocks.assign(groups, Mat3::Zero());
  set.diagonals.assign(groups, Vec3::Zero());
  set.inverses.assign(groups, Mat3::Zero());
  set.rhs.assign(groups, Vec3::Zero());
  set.active.assign(groups, 1);
  std::vector<char> failed(groups, 0);

  parallel_for(pool, static_cast<std::size_t>(groups), [&](std::size_t begin, std::size_t end) {
    for (std::size_t g = begin; g < end; ++g) {
      Mat3 h = Mat3::Zero();
      Vec3 r = Vec3::Zero();
      for (int o : set.members(static_cast<int>(g))) {
        const Mat23& jp = blocks.point_blocks[o];
        h.noalias() += jp.transpose() * jp;
        r.noalias() -= jp.transpose() * blocks.residuals[o];
      }
      const Vec3 diag = h.diagonal();
      for (int d = 0; d < 3; ++d) h(d, d) += lambda * diag[d];
      set.diagonals[g] = diag;
      set.blocks[g] = h;
      set.rhs[g] = r;
      if (policy == SingularPolicy::kDrop && (h.diagonal().array() <= 0.0).any()) {
        set.active[g] = 0;
        continue;
      }
      Eigen::LLT<Mat3> llt(h);
      if (llt.info() != Eigen::Success) {
        failed[g] = 1;
        continue;
      }
      set.inverses[g] = llt.solve(Mat3::Identity());
    }
  });

  set.dropped_observations = 0;
  for (int g = 0; g < groups; ++g) {
    if (failed[g]) {
      if (policy == SingularPolicy::kThrowPoint) {
        throw SingularPointBlock("damped point block " + std::to_string(g) + " is singular");
      }
      throw SingularVirtualBlock("damped virtual point block " + std::to_string(g) +
                                 " is singular");
    }
    if (!set.active[g]) set.dropped_observations += set.offsets[g + 1] - set.offsets[g];
  }
}

EliminationSet point_groups(const BundleProblem& problem) {
  EliminationSet set;
  const int n = problem.num_points();
  set.offsets.resize(static_cast<std::size_t>(n) + 1);
  for (int j = 0; j < n; ++j) set.offsets[j + 1] = problem.point_observation_range(j).second;
  set.observations.resize(static_cast<std::size_t>(problem.num_observations()));
  std::iota(set.observations.begin(), set.observations.end(), 0);
  return set;
}

NormalBlocks assemble_normal_blocks(const BundleProblem& problem, const JacobianBlocks& blocks,
                                    double lambda, WorkerPool* pool) {
  const int m = problem.num_cameras();
  const int q = problem.num_observations();
  NormalBlocks nb;
  nb.lambda = lambda;
  nb.B.assign(m, Mat6::Zero());
  nb.B_diag.assign(m, Vec6::Zero());
  nb.E.assign(q, Mat63::Zero());
  nb.v = VecX::Zero(kCameraDim * m);

  parallel_for(pool, static_cast<std::size_t>(m), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      Mat6 b = Mat6::Zero();
      Vec6 v = Vec6::Zero();
      for (int o : problem.camera_observations(static_cast<int>(i))) {
        const Mat26& jc = blocks.camera_blocks[o];
        b.noalias() += jc.transpose() * jc;
        v.noalias() -= jc.transpose() * blocks.residuals[o];
        nb.E[o].noalias() = jc.transpose() * blocks.point_blocks[o];
      }
      const Vec6 diag = b.diagonal();
      for (int d = 0; d < 6; ++d) b(d, d) += lambda * diag[d];
      nb.B[i] = b;
      nb.B_diag[i] = diag;
      nb.v.segment<6>(kCameraDim * static_cast<Eigen::Index>(i)) = v;
    }
  });

  nb.points = point_groups(problem);
  build_elimination_set(nb.points, blocks, lambda, SingularPolicy::kThrowPoint, pool);
  return nb;
}

int RcsStructure::find(int row, int col) const {
  const auto first = columns.begin() + row_offsets[row];
  const auto last = columns.begin() + row_offsets[row + 1];
  const auto it = std::lower_bound(first, last, col);
  return (it != last && *it == col) ? static_cast<int>(it - columns.begin()) : -1;
}

RcsStructure rcs_structure(const BundleProblem& problem, const EliminationSet& groups) {
  const int m = problem.num_cameras();
  const auto& observations = problem.observations();
  std::vector<std::vector<int>> rows(m);
  for (int i = 0; i < m; ++i) rows[i].push_back(i);
  for (int g = 0; g < groups.size(); ++g) {
    if (!groups.active[g]) continue;
    const auto members = groups.members(g);
    for (std::size_t a = 0; a < members.size(); ++a) {
      const int ca = observations[members[a]].camera;
      for (std::size_t b = a + 1; b < members.size(); ++b) {
        const int cb = observations[members[b]].camera;
        rows[ca].push_back(cb);
        rows[cb].push_back(ca);
      }
    }
  }
  RcsStructure s;
  s.row_offsets.resize(static_cast<std::size_t>(m) + 1);
  for (int i = 0; i < m; ++i) {
    std::sort(rows[i].begin(), rows[i].end());
    rows[i].erase(std::unique(rows[i].begin(), rows[i].end()), rows[i].end());
    s.row_offsets[i + 1] = s.row_offsets[i] + static_cast<int>(rows[i].size());
  }
  s.columns.reserve(static_cast<std::size_t>(s.row_offsets[m]));
  for (auto& row : rows) s.columns.insert(s.columns.end(), row.begin(), row.end());
  return s;
}

const Mat6& ReducedCameraSystem::block(int row, int col) const {
  const int slot = structure.find(row, col);
  if (slot < 0) throw Error("structurally absent reduced camera block");
  return blocks[slot];
}

MatX ReducedCameraSystem::dense() const {
  std::vector<int> all(static_cast<std::size_t>(num_cameras()));
  std::iota(all.begin(), all.end(), 0);
  return dense(all);
}

MatX ReducedCameraSystem::dense(std::span<const int> cameras) const {
  std::vector<int> local(static_cast<std::size_t>(num_cameras()), -1);
  for (std::size_t a = 0; a < cameras.size(); ++a) local[cameras[a]] = static_cast<int>(a);
  const Eigen::Index size = kCameraDim * static_cast<Eigen::Index>(cameras.size());
  MatX out = MatX::Zero(size, size);
  for (std::size_t a = 0; a < cameras.size(); ++a) {
    const int row = cameras[a];
    for (int slot = structure.row_offsets[row]; slot < structure.row_offsets[row + 1]; ++slot) {
      const int b = local[structure.columns[slot]];
      if (b < 0) continue;
      out.block<6, 6>(kCameraDim * static_cast<Eigen::Index>(a), kCameraDim * b) = blocks[slot];
    }
  }
  return out;
}

VecX ReducedCameraSystem::multiply(const VecX& x, WorkerPool* pool) const {
  VecX y(x.size());
  parallel_for(pool, static_cast<std::size_t>(num_cameras()),
               [&](std::size_t begin, std::size_t end) {
                 for (std::size_t i = begin; i < end; ++i) {
                   Vec6 acc = Vec6::Zero();
                   for (int slot = structure.row_offsets[i]; slot < structure.row_offsets[i + 1];
                        ++slot) {
                     acc.noalias() += blocks[slot] * x.segment<6>(kCameraDim * structure.columns[slot]);
                   }
                   y.segment<6>(kCameraDim * static_cast<Eigen::Index>(i)) = acc;
                 }
               });
  return y;
}

ReducedCameraSystem schur_complement(const BundleProblem& problem, const NormalBlocks& normal,
                                     const EliminationSet& groups, WorkerPool* pool) {
  const int m = problem.num_cameras();
  const int q = problem.num_observations();
  const auto& observations = problem.observations();

  std::vector<int> group_of(static_cast<std::size_t>(q), -1);
  std::vector<Mat63> y(static_cast<std::size_t>(q), Mat63::Zero());
  parallel_for(pool, static_cast<std::size_t>(groups.size()),
               [&](std::size_t begin, std::size_t end) {
                 for (std::size_t g = begin; g < end; ++g) {
                   if (!groups.active[g]) continue;
                   for (int o : groups.members(static_cast<int>(g))) {
                     group_of[o] = static_cast<int>(g);
                     y[o].noalias() = normal.E[o] * groups.inverses[g];
                   }
                 }
               });

  ReducedCameraSystem rcs;
  rcs.structure = rcs_structure(problem, groups);
  const RcsStructure& s = rcs.structure;
  rcs.blocks.assign(static_cast<std::size_t>(s.num_blocks()), Mat6::Zero());
  rcs.rhs = normal.v;

  // Upper triangle, one block row per task.
  parallel_for(pool, static_cast<std::size_t>(m), [&](std::size_t begin, std::size_t end) {
    std::vector<int> slot_of(static_cast<std::size_t>(m), -1);
    for (std::size_t row = begin; row < end; ++row) {
      const int i = static_cast<int>(row);
      for (int slot = s.row_offsets[i]; slot < s.row_offsets[i + 1]; ++slot) {
        slot_of[s.columns[slot]] = slot;
      }
      rcs.blocks[s.find(i, i)] = normal.B[i];
      Vec6 rhs = Vec6::Zero();
      for (int o : problem.camera_observations(i)) {
        const int g = group_of[o];
        if (g < 0) continue;
        rhs.noalias() += y[o] * groups.rhs[g];
        for (int other : groups.members(g)) {
          const int k = observations[other].camera;
          if (k < i) continue;
          rcs.blocks[slot_of[k]].noalias() -= y[o] * normal.E[other].transpose();
        }
      }
      rcs.rhs.segment<6>(kCameraDim * i) -= rhs;
      Mat6& diag = rcs.blocks[s.find(i, i)];
      const Mat6 upper = diag;
      diag.triangularView<Eigen::StrictlyLower>() = upper.transpose();
      for (int slot = s.row_offsets[i]; slot < s.row_offsets[i + 1]; ++slot) {
        slot_of[s.columns[slot]] = -1;
      }
    }
  });

  // Mirror into the lower triangle.
  parallel_for(pool, static_cast<std::size_t>(m), [&](std::size_t begin, std::size_t end) {
    for (std::size_t row = begin; row < end; ++row) {
      const int i = static_cast<int>(row);
      for (int slot = s.row_offsets[i]; slot < s.row_offsets[i + 1]; ++slot) {
        const int k = s.columns[slot];
        if (k >= i) break;
        rcs.blocks[slot] = rcs.blocks[s.find(k, i)].transpose();
      }
    }
  });
  return rcs;
}

ReducedCameraSystem schur_reduce(const BundleProblem& problem, const NormalBlocks& normal,
                                 WorkerPool* pool) {
  return schur_complement(problem, normal, normal.points, pool);
}

VecX solve_dense(const ReducedCameraSystem& rcs, std::span<const int> cameras) {
  const MatX s = rcs.dense(cameras);
  VecX b(s.rows());
  for (std::size_t a = 0; a < cameras.size(); ++a) {
    b.segment<6>(kCameraDim * static_cast<Eigen::Index>(a)) =
        rcs.rhs.segment<6>(kCameraDim * cameras[a]);
  }
  Eigen::LLT<MatX> llt(s);
  if (llt.info() != Eigen::Success) {
    throw NotPositiveDefinite("reduced camera system is not positive definite");
  }
  return llt.solve(b);
}

VecX solve_pcg(const ReducedCameraSystem& rcs, const PcgOptions& options, WorkerPool* pool,
               PcgReport* report) {
  const int m = rcs.num_cameras();
  std::vector<Mat6> preconditioner(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    Eigen::LLT<Mat6> llt(rcs.block(i, i));
    if (llt.info() != Eigen::Success) {
      throw NotPositiveDefinite("reduced camera diagonal block is not positive definite");
    }
    preconditioner[i] = llt.solve(Mat6::Identity());
  }
  const auto precondition = [&](const VecX& r) {
    VecX z(r.size());
    parallel_for(pool, static_cast<std::size_t>(m), [&](std::size_t begin, std::size_t end) {
      for (std::size_t i = begin; i < end; ++i) {
        const Eigen::Index at = kCameraDim * static_cast<Eigen::Index>(i);
        z.segment<6>(at).noalias() = preconditioner[i] * r.segment<6>(at);
      }
    });
    return z;
  };

  std::vector<double> scratch;
  VecX x = VecX::Zero(rcs.rhs.size());
  VecX r = rcs.rhs;
  const double rhs_norm = std::sqrt(dot(r, r, scratch));
  PcgReport local;
  if (rhs_norm == 0.0) {
    if (report) *report = local;
    return x;
  }
  VecX z = precondition(r);
  VecX p = z;
  double rz = dot(r, z, scratch);
  for (int it = 1; it <= options.max_iterations; ++it) {
    const VecX sp = rcs.multiply(p, pool);
    const double curvature = dot(p, sp, scratch);
    if (!(curvature > 0.0)) {
      throw NotPositiveDefinite("non-positive curvature in conjugate gradients");
    }
    const double alpha = rz / curvature;
    x += alpha * p;
    r -= alpha * sp;
    local.iterations = it;
    local.relative_residual = std::sqrt(dot(r, r, scratch)) / rhs_norm;
    if (local.relative_residual <= options.tolerance) {
      if (report) *report = local;
      return x;
    }
    z = precondition(r);
    const double rz_next = dot(r, z, scratch);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
  }
  if (report) *report = local;
  throw PcgStalled("conjugate gradients stalled at relative residual " +
                   std::to_string(local.relative_residual));
}

VecX solve_rcs(const ReducedCameraSystem& rcs, RcsMethod method, const PcgOptions& options,
               WorkerPool* pool) {
  if (method == RcsMethod::kBlockJacobiPcg) return solve_pcg(rcs, options, pool);
  std::vector<int> all(static_cast<std::size_t>(rcs.num_cameras()));
  std::iota(all.begin(), all.end(), 0);
  return solve_dense(rcs, all);
}

VecX back_substitute(const BundleProblem& problem, const NormalBlocks& normal, const VecX& dc,
                     WorkerPool* pool) {
  const int n = problem.num_points();
  const auto& observations = problem.observations();
  VecX dp(kPointDim * static_cast<Eigen::Index>(n));
  parallel_for(pool, static_cast<std::size_t>(n), [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      Vec3 r = normal.points.rhs[j];
      for (int o : normal.points.members(static_cast<int>(j))) {
        r.noalias() -= normal.E[o].transpose() * dc.segment<6>(kCameraDim * observations[o].camera);
      }
      dp.segment<3>(kPointDim * static_cast<Eigen::Index>(j)) = normal.points.inverses[j] * r;
    }
  });
  return dp;
}

}  // namespace stba
