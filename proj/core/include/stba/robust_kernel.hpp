#ifndef STBA_ROBUST_KERNEL_HPP_
#define STBA_ROBUST_KERNEL_HPP_

#include "stba/common.hpp"

namespace stba {

/// Value and first derivative of a robust kernel at a squared residual norm.
struct RhoEvaluation {
  double value = 0.0;
  double derivative = 1.0;
};

/// Huber kernel on squared norms:
///   rho(s) = s                   for s <= delta^2
///   rho(s) = 2 delta sqrt(s) - delta^2 otherwise.
/// delta = infinity disables robustification.
struct RobustKernel {
  double delta = 0.5;

  static RobustKernel none() { return RobustKernel{kInfinity}; }
  bool enabled() const { return delta != kInfinity; }
};

RhoEvaluation huber_rho(double squared_norm, const RobustKernel& kernel);

}  // namespace stba

#endif  // STBA_ROBUST_KERNEL_HPP_
