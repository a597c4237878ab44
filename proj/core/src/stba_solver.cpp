#include "stba/stba_solver.hpp"

#include <chrono>

#include "stba/clustering.hpp"
#include "stba/split.hpp"

namespace stba {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

StbaStepEngine::StbaStepEngine(const BundleProblem& problem, const StbaConfig& config)
    : config_(config), graph_(build_camera_graph(problem)) {}

ClusterAssignment StbaStepEngine::draw(int num_cameras, int iteration) {
  if (config_.gamma == kUnbounded) return ClusterAssignment::single(num_cameras);
  if (config_.mode == ClusteringMode::kDeterministic) {
    return cluster_deterministic(graph_, config_.gamma);
  }
  Rng rng = iteration_stream(config_.seed, iteration);
  return cluster_stochastic(graph_, config_.gamma, config_.beta, rng);
}

void StbaStepEngine::begin_iteration(const BundleProblem& problem, int iteration,
                                     IterationRecord& record) {
  if (!(config_.mode == ClusteringMode::kFixed && assignment_)) {
    assignment_ = draw(problem.num_cameras(), iteration);
    if (record_) history_.push_back(*assignment_);
  }
  record.n_clusters = assignment_->count();
  record.max_cluster_size = assignment_->max_size();
}

VecX StbaStepEngine::compute_step(const StepContext& ctx, IterationRecord& record) {
  if (!assignment_) assignment_ = draw(ctx.problem.num_cameras(), ctx.iteration);

  auto start = Clock::now();
  const NormalBlocks normal = assemble_normal_blocks(ctx.problem, ctx.blocks, ctx.lambda, ctx.pool);
  SplitIndex split = split_points(ctx.problem, *assignment_);
  assemble_split_blocks(split, ctx.blocks, ctx.lambda, ctx.pool);
  record.timings.assembly += ms_since(start);
  record.n_constraints = split.num_constraints();
  record.dropped_observations = split.groups.dropped_observations;

  const bool correct =
      split.num_constraints() > 0 &&
      (config_.correction == CorrectionPolicy::kAlways ||
       (config_.correction == CorrectionPolicy::kAuto && ctx.lambda >= config_.correction_threshold));
  if (correct) {
    start = Clock::now();
    correct_split_gradient(split);
    record.correction_applied = true;
    record.timings.correction += ms_since(start);
  }

  start = Clock::now();
  const SplitSystem system = cluster_schur(ctx.problem, normal, split, *assignment_, ctx.pool);
  record.timings.assembly += ms_since(start);

  start = Clock::now();
  const VecX dc = solve_clusters(system, ctx.pool);
  record.timings.rcs_solve += ms_since(start);

  start = Clock::now();
  VecX dx(ctx.problem.num_parameters());
  dx.head(dc.size()) = dc;
  dx.tail(dx.size() - dc.size()) = unified_point_update(ctx.problem, normal, dc, ctx.pool);
  record.timings.back_substitution += ms_since(start);
  return dx;
}

SolveResult stba_minimize(const BundleProblem& problem, const StbaConfig& config) {
  StbaStepEngine engine(problem, config);
  return minimize(problem, config.solver, engine);
}

}  // namespace stba
