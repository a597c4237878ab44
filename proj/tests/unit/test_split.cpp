#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "stba/camera_graph.hpp"
#include "stba/clustering.hpp"
#include "stba/normal_equations.hpp"
#include "stba/parallel.hpp"
#include "stba/split.hpp"

namespace stba {
namespace {

using testing::relative_error;
using testing::toy_problem;

struct Fixture {
  BundleProblem problem;
  JacobianBlocks blocks;
  ClusterAssignment assignment;
};

Fixture make(int m, int n, std::uint64_t seed, const std::vector<int>& labels,
             double density = 1.0) {
  BundleProblem problem = toy_problem(m, n, seed, 0.1, density);
  JacobianBlocks blocks = weighted_blocks(problem, problem.parameters(), RobustKernel{0.5});
  return {std::move(problem), std::move(blocks), ClusterAssignment(labels)};
}

// Diagonal of the damped split Hessian in the [cameras; virtual points] layout.
VecX split_hessian_diagonal(const NormalBlocks& nb, const SplitIndex& split) {
  const int c = static_cast<int>(nb.B.size()) * 6;
  VecX h(c + 3 * split.num_virtual());
  for (std::size_t i = 0; i < nb.B.size(); ++i) h.segment<6>(6 * i) = nb.B[i].diagonal();
  for (int v = 0; v < split.num_virtual(); ++v) {
    h.segment<3>(c + 3 * v) = split.groups.blocks[v].diagonal();
  }
  return h;
}

VecX split_gradient(const NormalBlocks& nb, const SplitIndex& split) {
  const int c = static_cast<int>(nb.v.size());
  VecX g(c + 3 * split.num_virtual());
  g.head(c) = nb.v;
  for (int v = 0; v < split.num_virtual(); ++v) g.segment<3>(c + 3 * v) = split.groups.rhs[v];
  return g;
}

TEST(SplitPoints, SingleClusterIsIdentity) {
  const Fixture f = make(4, 12, 101, {0, 0, 0, 0});
  const SplitIndex s = split_points(f.problem, f.assignment);
  EXPECT_EQ(s.num_virtual(), f.problem.num_points());
  EXPECT_EQ(s.num_constraints(), 0);
  for (int j = 0; j < f.problem.num_points(); ++j) EXPECT_EQ(s.physical[j], j);
  EXPECT_EQ(constraint_set(s).size(), 0);
}

TEST(SplitPoints, ThreeClustersGiveThreeCopies) {
  const Fixture f = make(3, 5, 102, {0, 1, 2});
  const SplitIndex s = split_points(f.problem, f.assignment);
  for (int j = 0; j < f.problem.num_points(); ++j) {
    const auto [b, e] = f.problem.point_observation_range(j);
    EXPECT_EQ(s.copies(j), e - b);
  }
  const ConstraintSet c = constraint_set(s);
  EXPECT_EQ(c.size(), s.num_constraints());
  // Star around the lowest-cluster copy.
  for (const auto& [hub, other] : c.rows) {
    EXPECT_EQ(s.physical[hub], s.physical[other]);
    EXPECT_LT(s.cluster[hub], s.cluster[other]);
  }
}

TEST(SplitPoints, PerCameraClustersCopyPerObservation) {
  const Fixture f = make(5, 20, 103, {0, 1, 2, 3, 4}, 0.6);
  const SplitIndex s = split_points(f.problem, f.assignment);
  EXPECT_EQ(s.num_virtual(), f.problem.num_observations());
  EXPECT_EQ(s.num_constraints(), f.problem.num_observations() - f.problem.num_points());
}

TEST(SplitPoints, VirtualOfMapsObservationsIntoTheirCluster) {
  const Fixture f = make(6, 20, 104, {0, 0, 1, 1, 2, 2}, 0.7);
  const SplitIndex s = split_points(f.problem, f.assignment);
  for (int k = 0; k < f.problem.num_observations(); ++k) {
    const Observation& o = f.problem.observations()[k];
    const int v = s.virtual_of[k];
    EXPECT_EQ(s.physical[v], o.point);
    EXPECT_EQ(s.cluster[v], f.assignment.cluster_of(o.camera));
  }
}

TEST(AssembleSplitBlocks, MatchesDenseOracle) {
  Fixture f = make(4, 10, 105, {0, 0, 1, 1});
  SplitIndex s = split_points(f.problem, f.assignment);
  const double lambda = 0.3;
  assemble_split_blocks(s, f.blocks, lambda);
  // J'_p: one 3-column block per virtual point.
  const int q = f.problem.num_observations();
  MatX jp = MatX::Zero(2 * q, 3 * s.num_virtual());
  VecX fv(2 * q);
  for (int k = 0; k < q; ++k) {
    jp.block<2, 3>(2 * k, 3 * s.virtual_of[k]) = f.blocks.point_blocks[k];
    fv.segment<2>(2 * k) = f.blocks.residuals[k];
  }
  MatX c = jp.transpose() * jp;
  c.diagonal() *= 1.0 + lambda;
  const VecX w = -jp.transpose() * fv;
  for (int v = 0; v < s.num_virtual(); ++v) {
    EXPECT_LE((s.groups.blocks[v] - c.block<3, 3>(3 * v, 3 * v)).norm(), 1e-10 * c.norm());
    EXPECT_LE((s.groups.rhs[v] - w.segment<3>(3 * v)).norm(), 1e-10 * w.norm());
  }
}

TEST(AssembleSplitBlocks, CopiesSumToPhysicalPoint) {
  Fixture f = make(6, 25, 106, {0, 1, 1, 2, 0, 2}, 0.8);
  SplitIndex s = split_points(f.problem, f.assignment);
  assemble_split_blocks(s, f.blocks, 0.1);
  const NormalBlocks nb = assemble_normal_blocks(f.problem, f.blocks, 0.1);
  for (int j = 0; j < f.problem.num_points(); ++j) {
    Vec3 d = Vec3::Zero();
    Vec3 w = Vec3::Zero();
    for (int v = s.point_offsets[j]; v < s.point_offsets[j + 1]; ++v) {
      d += s.groups.diagonals[v];
      w += s.groups.rhs[v];
    }
    EXPECT_LE((w - nb.w(j)).norm(), 1e-10 * std::max(1.0, nb.w(j).norm()));
    EXPECT_LE((d - nb.points.diagonals[j]).norm(), 1e-10 * nb.points.diagonals[j].norm());
  }
}

TEST(AssembleSplitBlocks, SingleClusterEqualsPointBlocks) {
  Fixture f = make(4, 12, 107, {0, 0, 0, 0});
  SplitIndex s = split_points(f.problem, f.assignment);
  assemble_split_blocks(s, f.blocks, 0.01);
  const NormalBlocks nb = assemble_normal_blocks(f.problem, f.blocks, 0.01);
  for (int j = 0; j < f.problem.num_points(); ++j) {
    EXPECT_EQ(s.groups.blocks[j], nb.C(j));
    EXPECT_EQ(s.groups.rhs[j], nb.w(j));
  }
}

TEST(SteepestDescentCorrection, MatchesDenseOracle) {
  for (std::uint64_t seed : {108, 109, 110}) {
    Fixture f = make(5, 15, seed, {0, 1, 0, 2, 1});
    SplitIndex s = split_points(f.problem, f.assignment);
    const double lambda = 0.5;
    assemble_split_blocks(s, f.blocks, lambda);
    const NormalBlocks nb = assemble_normal_blocks(f.problem, f.blocks, lambda);
    const VecX g = split_gradient(nb, s);
    const VecX h = split_hessian_diagonal(nb, s);
    const int m = f.problem.num_cameras();
    const MatX a = dense_constraint_matrix(constraint_set(s), m, s.num_virtual());
    const VecX hinv = h.cwiseInverse();
    const MatX ahat = a * hinv.asDiagonal() * a.transpose();
    const VecX nu = ahat.ldlt().solve(a * hinv.cwiseProduct(g));
    const VecX expected = g - a.transpose() * nu;
    const VecX got = steepest_descent_correction(g, s, h, m);
    EXPECT_LE(relative_error(got, expected), 1e-10);
    // Corrected direction satisfies the constraints under H~.
    EXPECT_LE((a * hinv.cwiseProduct(got)).norm(), 1e-10 * g.norm());
    // Camera entries are untouched.
    EXPECT_EQ(got.head(6 * m), g.head(6 * m));
  }
}

TEST(SteepestDescentCorrection, NoConstraintsLeavesGradient) {
  Fixture f = make(3, 8, 111, {0, 0, 0});
  SplitIndex s = split_points(f.problem, f.assignment);
  assemble_split_blocks(s, f.blocks, 0.5);
  const NormalBlocks nb = assemble_normal_blocks(f.problem, f.blocks, 0.5);
  const VecX g = split_gradient(nb, s);
  EXPECT_EQ(steepest_descent_correction(g, s, split_hessian_diagonal(nb, s), 3), g);
}

TEST(SteepestDescentCorrection, AppliedInPlaceMatchesFreeFunction) {
  Fixture f = make(4, 12, 112, {0, 1, 1, 0});
  SplitIndex s = split_points(f.problem, f.assignment);
  assemble_split_blocks(s, f.blocks, 0.4);
  const NormalBlocks nb = assemble_normal_blocks(f.problem, f.blocks, 0.4);
  const VecX expected = steepest_descent_correction(split_gradient(nb, s), s,
                                                    split_hessian_diagonal(nb, s), 4);
  correct_split_gradient(s);
  const VecX got = split_gradient(nb, s);
  EXPECT_LE(relative_error(got, expected), 1e-12);
}

TEST(ClusterSchur, CrossClusterBlocksAbsent) {
  Fixture f = make(6, 30, 113, {0, 0, 1, 1, 2, 2});
  SplitIndex s = split_points(f.problem, f.assignment);
  assemble_split_blocks(s, f.blocks, 1e-3);
  const NormalBlocks nb = assemble_normal_blocks(f.problem, f.blocks, 1e-3);
  const SplitSystem sys = cluster_schur(f.problem, nb, s, f.assignment);
  for (int i = 0; i < 6; ++i) {
    for (int j = 0; j < 6; ++j) {
      if (f.assignment.cluster_of(i) != f.assignment.cluster_of(j)) {
        EXPECT_EQ(sys.rcs.structure.find(i, j), -1);
      }
    }
  }
}

TEST(ClusterSchur, DenseOracleWithSplitBlocks) {
  Fixture f = make(4, 10, 114, {0, 1, 0, 1});
  SplitIndex s = split_points(f.problem, f.assignment);
  const double lambda = 0.05;
  assemble_split_blocks(s, f.blocks, lambda);
  const NormalBlocks nb = assemble_normal_blocks(f.problem, f.blocks, lambda);
  const int m = 4;
  MatX e = MatX::Zero(6 * m, 3 * s.num_virtual());
  for (int k = 0; k < f.problem.num_observations(); ++k) {
    const Observation& o = f.problem.observations()[k];
    e.block<6, 3>(6 * o.camera, 3 * s.virtual_of[k]) += nb.E[k];
  }
  MatX cinv = MatX::Zero(3 * s.num_virtual(), 3 * s.num_virtual());
  VecX w(3 * s.num_virtual());
  for (int v = 0; v < s.num_virtual(); ++v) {
    cinv.block<3, 3>(3 * v, 3 * v) = s.groups.blocks[v].inverse();
    w.segment<3>(3 * v) = s.groups.rhs[v];
  }
  MatX b = MatX::Zero(6 * m, 6 * m);
  for (int i = 0; i < m; ++i) b.block<6, 6>(6 * i, 6 * i) = nb.B[i];
  const MatX expected = b - e * cinv * e.transpose();
  const VecX rhs = nb.v - e * cinv * w;
  const SplitSystem sys = cluster_schur(f.problem, nb, s, f.assignment);
  EXPECT_LE((sys.rcs.dense() - expected).norm(), 1e-10 * expected.norm());
  EXPECT_LE((sys.rcs.rhs - rhs).norm(), 1e-10 * rhs.norm());
}

TEST(ClusterSchur, SingleClusterEqualsSchurReduce) {
  Fixture f = make(5, 20, 115, {0, 0, 0, 0, 0});
  SplitIndex s = split_points(f.problem, f.assignment);
  assemble_split_blocks(s, f.blocks, 1e-4);
  const NormalBlocks nb = assemble_normal_blocks(f.problem, f.blocks, 1e-4);
  const SplitSystem sys = cluster_schur(f.problem, nb, s, f.assignment);
  const ReducedCameraSystem full = schur_reduce(f.problem, nb);
  EXPECT_EQ(sys.rcs.dense(), full.dense());
  EXPECT_EQ(sys.rcs.rhs, full.rhs);
}

TEST(SolveClusters, PerClusterSolvesMatchDenseBlocks) {
  Fixture f = make(6, 30, 116, {0, 1, 0, 1, 2, 2});
  SplitIndex s = split_points(f.problem, f.assignment);
  assemble_split_blocks(s, f.blocks, 1e-2);
  const NormalBlocks nb = assemble_normal_blocks(f.problem, f.blocks, 1e-2);
  const SplitSystem sys = cluster_schur(f.problem, nb, s, f.assignment);
  const VecX dc = solve_clusters(sys);
  const VecX dense = sys.rcs.dense().ldlt().solve(sys.rcs.rhs);
  EXPECT_LE(relative_error(dc, dense), 1e-9);
  WorkerPool pool(3);
  EXPECT_EQ(solve_clusters(sys, &pool), dc);
}

TEST(UnifiedPointUpdate, UsesUnsplitBlocks) {
  Fixture f = make(4, 12, 117, {0, 1, 0, 1});
  const NormalBlocks nb = assemble_normal_blocks(f.problem, f.blocks, 0.1);
  VecX dc = VecX::Random(24);
  EXPECT_EQ(unified_point_update(f.problem, nb, dc), back_substitute(f.problem, nb, dc));
}

}  // namespace
}  // namespace stba
