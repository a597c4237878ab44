#ifndef STBA_LM_SOLVER_HPP_
#define STBA_LM_SOLVER_HPP_

#include "stba/common.hpp"
#include "stba/normal_equations.hpp"
#include "stba/problem.hpp"
#include "stba/robust_jacobians.hpp"
#include "stba/robust_kernel.hpp"
#include "stba/trace.hpp"

namespace stba {

class WorkerPool;

enum class LinearSolverKind {
  kAuto,            ///< dense Cholesky up to dense_camera_limit cameras, PCG above
  kDenseCholesky,
  kBlockJacobiPcg,
};

struct SolverConfig {
  int max_iterations = 100;
  double lambda0 = 1e-4;
  double lambda_min = 1e-12;
  double lambda_max = 1e12;
  double lambda_factor = 3.0;
  double cost_tolerance = 1e-6;       ///< (F - F_new) / F on accepted steps
  double gradient_tolerance = 1e-6;   ///< ||grad F||_inf
  double parameter_tolerance = 1e-6;  ///< ||dx|| / (||x|| + 1e-12)
  RobustKernel kernel;
  LinearSolverKind linear_solver = LinearSolverKind::kAuto;
  int dense_camera_limit = 800;
  PcgOptions pcg;
  int workers = 1;
  double degenerate_penalty = 1e10;
};

struct SolveResult {
  VecX parameters;
  SolveTrace trace;
};

/// Linearization shared by the step engines within one iteration.
struct StepContext {
  const BundleProblem& problem;
  const VecX& x;
  const JacobianBlocks& blocks;
  double lambda;
  int iteration;
  WorkerPool* pool;
};

/// Produces the damped step dx for the current linearization. Throwing
/// NotPositiveDefinite, PcgStalled, SingularPointBlock or SingularVirtualBlock
/// rejects the step.
class StepEngine {
 public:
  virtual ~StepEngine() = default;
  /// Called once per iteration before the step; clustering happens here.
  virtual void begin_iteration(const BundleProblem&, int /*iteration*/, IterationRecord&) {}
  virtual VecX compute_step(const StepContext& context, IterationRecord& record) = 0;
  virtual bool clustered() const { return false; }
};

/// Exact Schur-complement step of the damped normal equations.
class LmStepEngine : public StepEngine {
 public:
  explicit LmStepEngine(const SolverConfig& config) : config_(config) {}
  VecX compute_step(const StepContext& context, IterationRecord& record) override;
  RcsMethod method_for(const BundleProblem& problem) const;

 private:
  SolverConfig config_;
};

/// Levenberg-Marquardt control loop: accept iff the robust cost decreases,
/// lambda divided by lambda_factor on acceptance and multiplied on rejection.
SolveResult minimize(const BundleProblem& problem, const SolverConfig& config, StepEngine& engine);

SolveResult lm_minimize(const BundleProblem& problem, const SolverConfig& config = {});

/// One exact LM step at x with the given damping.
VecX lm_step(const BundleProblem& problem, const VecX& x, double lambda,
             const SolverConfig& config = {}, WorkerPool* pool = nullptr);

}  // namespace stba

#endif  // STBA_LM_SOLVER_HPP_
