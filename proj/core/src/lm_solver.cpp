#include "stba/lm_solver.hpp"

#include <algorithm>
#include <chrono>
#include <memory>

#include "stba/errors.hpp"
#include "stba/parallel.hpp"

namespace stba {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

}  // namespace

RcsMethod LmStepEngine::method_for(const BundleProblem& problem) const {
  switch (config_.linear_solver) {
    case LinearSolverKind::kDenseCholesky: return RcsMethod::kDenseCholesky;
    case LinearSolverKind::kBlockJacobiPcg: return RcsMethod::kBlockJacobiPcg;
    case LinearSolverKind::kAuto: break;
  }
  return problem.num_cameras() <= config_.dense_camera_limit ? RcsMethod::kDenseCholesky
                                                             : RcsMethod::kBlockJacobiPcg;
}

VecX LmStepEngine::compute_step(const StepContext& ctx, IterationRecord& record) {
  auto start = Clock::now();
  const NormalBlocks normal = assemble_normal_blocks(ctx.problem, ctx.blocks, ctx.lambda, ctx.pool);
  const ReducedCameraSystem rcs = schur_reduce(ctx.problem, normal, ctx.pool);
  record.timings.assembly += ms_since(start);

  start = Clock::now();
  const VecX dc = solve_rcs(rcs, method_for(ctx.problem), config_.pcg, ctx.pool);
  record.timings.rcs_solve += ms_since(start);

  start = Clock::now();
  VecX dx(ctx.problem.num_parameters());
  dx.head(dc.size()) = dc;
  dx.tail(dx.size() - dc.size()) = back_substitute(ctx.problem, normal, dc, ctx.pool);
  record.timings.back_substitution += ms_since(start);
  return dx;
}

SolveResult minimize(const BundleProblem& problem, const SolverConfig& config,
                     StepEngine& engine) {
  const auto solve_start = Clock::now();
  const int workers = resolve_worker_count(config.workers);
  std::unique_ptr<WorkerPool> owned = workers > 1 ? std::make_unique<WorkerPool>(workers) : nullptr;
  WorkerPool* pool = owned.get();

  SolveResult result;
  result.trace.clustered = engine.clustered();
  VecX x = problem.parameters();
  double cost =
      evaluate_cost(problem, x, config.kernel, config.degenerate_penalty, pool).cost;
  result.trace.initial_cost = cost;
  double lambda = std::clamp(config.lambda0, config.lambda_min, config.lambda_max);

  JacobianBlocks blocks;
  double grad_norm = 0.0;
  bool linearized = false;

  for (int it = 1; it <= config.max_iterations; ++it) {
    IterationRecord record;
    record.iteration = it;
    record.cost_before = cost;
    record.cost_after = cost;
    record.lambda = lambda;

    if (!linearized) {
      const auto start = Clock::now();
      blocks = weighted_blocks(problem, x, config.kernel, pool);
      grad_norm = cost_gradient(problem, blocks).lpNorm<Eigen::Infinity>();
      record.timings.jacobian = ms_since(start);
      linearized = true;
    }
    record.grad_norm = grad_norm;
    record.degenerate = blocks.degenerate;

    if (grad_norm < config.gradient_tolerance) {
      record.elapsed_ms = ms_since(solve_start);
      result.trace.iterations.push_back(record);
      result.trace.termination = TerminationReason::kGradientTolerance;
      break;
    }

    {
      const auto start = Clock::now();
      engine.begin_iteration(problem, it, record);
      record.timings.clustering += ms_since(start);
    }

    VecX dx;
    try {
      dx = engine.compute_step(StepContext{problem, x, blocks, lambda, it, pool}, record);
    } catch (const NotPositiveDefinite& e) {
      record.failure = e.what();
    } catch (const PcgStalled& e) {
      record.failure = e.what();
    } catch (const SingularPointBlock& e) {
      record.failure = e.what();
    } catch (const SingularVirtualBlock& e) {
      record.failure = e.what();
    }

    bool converged = false;
    if (record.failure.empty()) {
      record.step_norm = dx.norm();
      const VecX candidate = x + dx;
      const CostEvaluation eval =
          evaluate_cost(problem, candidate, config.kernel, config.degenerate_penalty, pool);
      record.cost_after = eval.cost;
      record.degenerate = std::max(record.degenerate, eval.degenerate);
      const double x_norm = x.norm();
      if (eval.cost < cost) {
        record.accepted = true;
        const double relative_decrease = (cost - eval.cost) / cost;
        x = candidate;
        cost = eval.cost;
        linearized = false;
        lambda = std::max(lambda / config.lambda_factor, config.lambda_min);
        if (relative_decrease < config.cost_tolerance) {
          result.trace.termination = TerminationReason::kCostTolerance;
          converged = true;
        }
      } else {
        lambda = std::min(lambda * config.lambda_factor, config.lambda_max);
      }
      if (!converged && record.step_norm < config.parameter_tolerance * (x_norm + 1e-12)) {
        result.trace.termination = TerminationReason::kParameterTolerance;
        converged = true;
      }
    } else {
      lambda = std::min(lambda * config.lambda_factor, config.lambda_max);
    }

    record.elapsed_ms = ms_since(solve_start);
    result.trace.iterations.push_back(record);
    if (converged) break;
  }

  result.parameters = std::move(x);
  result.trace.total_ms = ms_since(solve_start);
  return result;
}

SolveResult lm_minimize(const BundleProblem& problem, const SolverConfig& config) {
  LmStepEngine engine(config);
  return minimize(problem, config, engine);
}

VecX lm_step(const BundleProblem& problem, const VecX& x, double lambda,
             const SolverConfig& config, WorkerPool* pool) {
  const JacobianBlocks blocks = weighted_blocks(problem, x, config.kernel, pool);
  LmStepEngine engine(config);
  IterationRecord record;
  return engine.compute_step(StepContext{problem, x, blocks, lambda, 0, pool}, record);
}

}  // namespace stba
