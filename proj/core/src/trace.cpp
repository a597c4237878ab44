#include "stba/trace.hpp"

#include <cstdio>
#include <fstream>
#include <ostream>

#include "stba/errors.hpp"

namespace stba {

namespace {

std::string fmt(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", value);
  return buffer;
}

std::string fmt_ms(double value) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.3f", value);
  return buffer;
}

}  // namespace

std::string_view to_string(TerminationReason reason) {
  switch (reason) {
    case TerminationReason::kMaxIterations: return "max_iterations";
    case TerminationReason::kCostTolerance: return "cost_tolerance";
    case TerminationReason::kGradientTolerance: return "gradient_tolerance";
    case TerminationReason::kParameterTolerance: return "parameter_tolerance";
  }
  return "unknown";
}

double SolveTrace::final_cost() const {
  double cost = initial_cost;
  for (const auto& r : iterations) {
    if (r.accepted) cost = r.cost_after;
  }
  return cost;
}

int SolveTrace::accepted_steps() const {
  int count = 0;
  for (const auto& r : iterations) count += r.accepted ? 1 : 0;
  return count;
}

std::vector<double> SolveTrace::accepted_costs() const {
  std::vector<double> costs;
  for (const auto& r : iterations) {
    if (r.accepted) costs.push_back(r.cost_after);
  }
  return costs;
}

void write_trace_csv(std::ostream& out, const SolveTrace& trace, const TraceCsvOptions& options) {
  out << "iter,cost_before,cost_after,lambda,accepted,step_norm,grad_norm,t_jacobian_ms,"
         "t_assembly_ms,t_clustering_ms,t_rcs_ms,t_backsub_ms,t_correction_ms";
  if (trace.clustered) out << ",n_clusters,max_cluster_size,n_constraints,correction_applied";
  out << '\n';
  for (const auto& r : trace.iterations) {
    const PhaseTimings t = options.timings ? r.timings : PhaseTimings{};
    out << r.iteration << ',' << fmt(r.cost_before) << ',' << fmt(r.cost_after) << ','
        << fmt(r.lambda) << ',' << (r.accepted ? 1 : 0) << ',' << fmt(r.step_norm) << ','
        << fmt(r.grad_norm) << ',' << fmt_ms(t.jacobian) << ',' << fmt_ms(t.assembly) << ','
        << fmt_ms(t.clustering) << ',' << fmt_ms(t.rcs_solve) << ','
        << fmt_ms(t.back_substitution) << ',' << fmt_ms(t.correction);
    if (trace.clustered) {
      out << ',' << r.n_clusters << ',' << r.max_cluster_size << ',' << r.n_constraints << ','
          << (r.correction_applied ? 1 : 0);
    }
    out << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, const SolveTrace& trace,
                     const TraceCsvOptions& options) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  write_trace_csv(out, trace, options);
}

void write_timings_csv(std::ostream& out, const SolveTrace& trace) {
  out << "iter,elapsed_ms,t_jacobian_ms,t_assembly_ms,t_clustering_ms,t_rcs_ms,t_backsub_ms,"
         "t_correction_ms\n";
  for (const auto& r : trace.iterations) {
    const PhaseTimings& t = r.timings;
    out << r.iteration << ',' << fmt_ms(r.elapsed_ms) << ',' << fmt_ms(t.jacobian) << ','
        << fmt_ms(t.assembly) << ',' << fmt_ms(t.clustering) << ',' << fmt_ms(t.rcs_solve) << ','
        << fmt_ms(t.back_substitution) << ',' << fmt_ms(t.correction) << '\n';
  }
}

}  // namespace stba
