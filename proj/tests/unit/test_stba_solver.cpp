#include <gtest/gtest.h>

#include <sstream>

#include "fixtures.hpp"
#include "stba/lm_solver.hpp"
#include "stba/split.hpp"
#include "stba/stba_solver.hpp"

namespace stba {
namespace {

using testing::toy_problem;

BundleProblem ring(int cameras, int points, double sigma, std::uint64_t seed,
                   double window = 60.0) {
  SyntheticSpec spec;
  spec.cameras = cameras;
  spec.points = points;
  spec.view_window_deg = window;
  spec.pixel_noise = 0.5;
  spec.seed = seed;
  return perturb(generate_synthetic(spec), {sigma, sigma, seed});
}

std::string trace_text(const SolveTrace& trace) {
  std::ostringstream out;
  write_trace_csv(out, trace);
  return out.str();
}

TEST(StbaMinimize, UnboundedGammaMatchesLm) {
  for (std::uint64_t seed : {121, 122, 123}) {
    const BundleProblem problem = toy_problem(5, 30, seed, 0.2, 0.8);
    SolverConfig config;
    config.linear_solver = LinearSolverKind::kDenseCholesky;
    StbaConfig stba;
    stba.solver = config;
    stba.gamma = kUnbounded;
    const SolveResult lm = lm_minimize(problem, config);
    const SolveResult st = stba_minimize(problem, stba);
    EXPECT_EQ(lm.trace.accepted_costs(), st.trace.accepted_costs());
    EXPECT_EQ(lm.parameters, st.parameters);
  }
}

TEST(StbaMinimize, AcceptedCostsStrictlyDecrease) {
  const BundleProblem problem = ring(30, 400, 0.5, 124, 40.0);
  StbaConfig config;
  config.gamma = 8;
  const SolveResult r = stba_minimize(problem, config);
  double previous = r.trace.initial_cost;
  for (const auto& rec : r.trace.iterations) {
    if (!rec.accepted) continue;
    EXPECT_LT(rec.cost_after, previous);
    previous = rec.cost_after;
  }
  EXPECT_LT(r.trace.final_cost(), r.trace.initial_cost);
}

TEST(StbaMinimize, DeterministicGivenSeedAndWorkers) {
  const BundleProblem problem = ring(30, 400, 0.5, 125, 40.0);
  StbaConfig config;
  config.gamma = 8;
  config.seed = 4;
  const SolveResult a = stba_minimize(problem, config);
  config.solver.workers = 3;
  const SolveResult b = stba_minimize(problem, config);
  EXPECT_EQ(trace_text(a.trace), trace_text(b.trace));
  EXPECT_EQ(a.parameters, b.parameters);
  config.seed = 5;
  const SolveResult c = stba_minimize(problem, config);
  EXPECT_NE(trace_text(a.trace), trace_text(c.trace));
}

TEST(StbaMinimize, TraceRecordsClusters) {
  const BundleProblem problem = ring(30, 400, 0.5, 126, 40.0);
  StbaConfig config;
  config.gamma = 8;
  config.solver.max_iterations = 5;
  const SolveResult r = stba_minimize(problem, config);
  ASSERT_TRUE(r.trace.clustered);
  for (const auto& rec : r.trace.iterations) {
    EXPECT_GE(rec.n_clusters, 30 / 8);
    EXPECT_LE(rec.max_cluster_size, 8);
    EXPECT_GT(rec.n_constraints, 0);
  }
}

TEST(StbaMinimize, ReachesMostOfLmReduction) {
  const BundleProblem problem = ring(40, 800, 0.5, 127, 40.0);
  const SolveResult lm = lm_minimize(problem, SolverConfig{});
  StbaConfig config;
  config.gamma = 10;
  const SolveResult st = stba_minimize(problem, config);
  const double lm_drop = lm.trace.initial_cost - lm.trace.final_cost();
  const double st_drop = st.trace.initial_cost - st.trace.final_cost();
  EXPECT_GE(st_drop, 0.99 * lm_drop);
}

TEST(StbaStepEngine, FixedModeReusesFirstClustering) {
  const BundleProblem problem = ring(30, 400, 0.5, 128, 40.0);
  StbaConfig config;
  config.gamma = 8;
  config.mode = ClusteringMode::kFixed;
  StbaStepEngine engine(problem, config);
  engine.record_assignments(true);
  for (int it = 1; it <= 4; ++it) {
    IterationRecord rec;
    engine.begin_iteration(problem, it, rec);
  }
  ASSERT_EQ(engine.history().size(), 1u);
}

TEST(StbaStepEngine, StochasticModeRedrawsEachIteration) {
  const BundleProblem problem = ring(30, 400, 0.5, 129, 40.0);
  StbaConfig config;
  config.gamma = 8;
  StbaStepEngine engine(problem, config);
  engine.record_assignments(true);
  for (int it = 1; it <= 6; ++it) {
    IterationRecord rec;
    engine.begin_iteration(problem, it, rec);
    EXPECT_LE(engine.assignment().max_size(), 8);
  }
  ASSERT_EQ(engine.history().size(), 6u);
  bool changed = false;
  for (std::size_t k = 1; k < 6; ++k) changed = changed || !(engine.history()[k] == engine.history()[0]);
  EXPECT_TRUE(changed);
}

struct StepPair {
  IterationRecord record;
  VecX step;
};

StepPair step_with(const BundleProblem& problem, double lambda, CorrectionPolicy policy) {
  StbaConfig config;
  config.gamma = 2;
  config.correction = policy;
  StbaStepEngine engine(problem, config);
  StepPair out;
  engine.begin_iteration(problem, 1, out.record);
  const VecX x = problem.parameters();
  const JacobianBlocks blocks = weighted_blocks(problem, x, config.solver.kernel);
  out.step = engine.compute_step({problem, x, blocks, lambda, 1, nullptr}, out.record);
  return out;
}

TEST(StbaStepEngine, CorrectionOnlyAboveThreshold) {
  const BundleProblem problem = toy_problem(6, 30, 130, 0.1);
  EXPECT_FALSE(step_with(problem, 0.05, CorrectionPolicy::kAuto).record.correction_applied);
  EXPECT_TRUE(step_with(problem, 0.1, CorrectionPolicy::kAuto).record.correction_applied);
  EXPECT_FALSE(step_with(problem, 10.0, CorrectionPolicy::kNever).record.correction_applied);
}

TEST(StbaStepEngine, SingleCameraClustersSplitEveryObservation) {
  const BundleProblem problem = toy_problem(5, 20, 131, 0.1, 0.7);
  StbaConfig config;
  config.gamma = 1;
  StbaStepEngine engine(problem, config);
  IterationRecord rec;
  engine.begin_iteration(problem, 1, rec);
  const VecX x = problem.parameters();
  const JacobianBlocks blocks = weighted_blocks(problem, x, config.solver.kernel);
  engine.compute_step({problem, x, blocks, 1e-3, 1, nullptr}, rec);
  EXPECT_EQ(rec.n_clusters, 5);
  EXPECT_EQ(rec.n_constraints, problem.num_observations() - problem.num_points());
}

TEST(StbaStepEngine, ClusteredSystemIsClusterDiagonal) {
  const BundleProblem problem = ring(24, 300, 0.3, 132, 50.0);
  StbaConfig config;
  config.gamma = 6;
  StbaStepEngine engine(problem, config);
  const JacobianBlocks blocks = weighted_blocks(problem, problem.parameters(), RobustKernel{0.5});
  const NormalBlocks nb = assemble_normal_blocks(problem, blocks, 1e-3);
  for (int it = 1; it <= 5; ++it) {
    IterationRecord rec;
    engine.begin_iteration(problem, it, rec);
    const ClusterAssignment& a = engine.assignment();
    SplitIndex split = split_points(problem, a);
    assemble_split_blocks(split, blocks, 1e-3);
    const SplitSystem sys = cluster_schur(problem, nb, split, a);
    for (int i = 0; i < problem.num_cameras(); ++i) {
      for (int j = 0; j < problem.num_cameras(); ++j) {
        if (a.cluster_of(i) != a.cluster_of(j)) {
          ASSERT_EQ(sys.rcs.structure.find(i, j), -1);
        }
      }
    }
  }
}

}  // namespace
}  // namespace stba
