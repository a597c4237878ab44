#ifndef STBA_STBA_SOLVER_HPP_
#define STBA_STBA_SOLVER_HPP_

#include <cstdint>
#include <optional>
#include <vector>

#include "stba/camera_graph.hpp"
#include "stba/lm_solver.hpp"

namespace stba {

enum class ClusteringMode {
  kStochastic,     ///< fresh sampled clustering every iteration
  kFixed,          ///< first sampled clustering reused throughout
  kDeterministic,  ///< greedy merging every iteration
};

enum class CorrectionPolicy {
  kAuto,    ///< when lambda >= correction_threshold
  kAlways,
  kNever,
};

struct StbaConfig {
  SolverConfig solver;
  std::size_t gamma = 100;  ///< kUnbounded: one cluster holding every camera
  double beta = 10.0;
  std::uint64_t seed = 0;
  ClusteringMode mode = ClusteringMode::kStochastic;
  CorrectionPolicy correction = CorrectionPolicy::kAuto;
  double correction_threshold = 0.1;
};

/// Step from clustered camera systems: split points per cluster, optional
/// steepest-descent correction of the split point gradient, independent
/// per-cluster solves and the unsplit point update.
class StbaStepEngine : public StepEngine {
 public:
  StbaStepEngine(const BundleProblem& problem, const StbaConfig& config);

  void begin_iteration(const BundleProblem& problem, int iteration, IterationRecord& record) override;
  VecX compute_step(const StepContext& context, IterationRecord& record) override;
  bool clustered() const override { return true; }

  /// Clustering used by the next compute_step.
  void set_assignment(ClusterAssignment assignment) { assignment_ = std::move(assignment); }
  const ClusterAssignment& assignment() const { return *assignment_; }
  const CameraGraph& graph() const { return graph_; }
  void set_correction(CorrectionPolicy policy) { config_.correction = policy; }

  /// Every clustering drawn so far, when recording is on.
  void record_assignments(bool on) { record_ = on; }
  const std::vector<ClusterAssignment>& history() const { return history_; }

 private:
  ClusterAssignment draw(int num_cameras, int iteration);

  StbaConfig config_;
  CameraGraph graph_;
  std::optional<ClusterAssignment> assignment_;
  bool record_ = false;
  std::vector<ClusterAssignment> history_;
};

SolveResult stba_minimize(const BundleProblem& problem, const StbaConfig& config = {});

}  // namespace stba

#endif  // STBA_STBA_SOLVER_HPP_
