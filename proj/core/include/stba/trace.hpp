#ifndef STBA_TRACE_HPP_
#define STBA_TRACE_HPP_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace stba {

/// Wall-clock milliseconds spent per phase within one iteration.
struct PhaseTimings {
  double jacobian = 0.0;
  double assembly = 0.0;
  double clustering = 0.0;
  double rcs_solve = 0.0;
  double back_substitution = 0.0;
  double correction = 0.0;
};

struct IterationRecord {
  int iteration = 0;
  double cost_before = 0.0;
  double cost_after = 0.0;  ///< candidate cost; equals cost_before when no step was evaluated
  double lambda = 0.0;      ///< damping used for this iteration's step
  bool accepted = false;
  double step_norm = 0.0;
  double grad_norm = 0.0;   ///< infinity norm of the cost gradient at the iterate
  PhaseTimings timings;
  double elapsed_ms = 0.0;  ///< cumulative since the solve started, at iteration end
  int degenerate = 0;       ///< degenerate projections seen while evaluating
  std::string failure;      ///< linear-solve failure that rejected the step, if any

  // Stochastic clustering extras; zero for plain LM.
  int n_clusters = 0;
  int max_cluster_size = 0;
  int n_constraints = 0;
  bool correction_applied = false;
  int dropped_observations = 0;
};

enum class TerminationReason {
  kMaxIterations,
  kCostTolerance,
  kGradientTolerance,
  kParameterTolerance,
};

std::string_view to_string(TerminationReason reason);

struct SolveTrace {
  double initial_cost = 0.0;
  std::vector<IterationRecord> iterations;
  TerminationReason termination = TerminationReason::kMaxIterations;
  double total_ms = 0.0;
  bool clustered = false;  ///< emit the clustering columns

  double final_cost() const;
  int accepted_steps() const;
  /// Costs after each accepted step, in order.
  std::vector<double> accepted_costs() const;
};

struct TraceCsvOptions {
  /// Write measured phase timings; zeros keep the file reproducible byte for byte.
  bool timings = false;
};

void write_trace_csv(std::ostream& out, const SolveTrace& trace, const TraceCsvOptions& options = {});
void write_trace_csv(const std::filesystem::path& path, const SolveTrace& trace,
                     const TraceCsvOptions& options = {});

/// iter,elapsed_ms plus every phase timing, always measured.
void write_timings_csv(std::ostream& out, const SolveTrace& trace);

}  // namespace stba

#endif  // STBA_TRACE_HPP_
