#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace liefrw::detail {

/// Right side y' = f(t, y); returns false when a component is not finite or
/// cannot be evaluated.
using OdeRhs = std::function<bool(double t, std::span<const double> y, std::span<double> dy)>;

struct DopriOptions {
  double rtol = 1e-10;
  double atol = 1e-12;
  double initial_step = 0.0;  // 0 selects a step automatically
  std::size_t max_steps = 5'000'000;
};

enum class DopriStatus { Completed, Stopped, StepUnderflow, NonFiniteDerivative, TooManySteps };

struct DopriStats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
  std::size_t evaluations = 0;
};

/// Continuous extension of the last accepted step.
class DenseStep {
 public:
  double t_old = 0.0;
  double t_new = 0.0;
  /// Interpolated state at `t` within [t_old, t_new].
  void eval(double t, std::span<double> out) const;

  std::vector<double> r1, r2, r3, r4, r5;
};

/// Called after every accepted step; return false to stop integrating.
using StepObserver = std::function<bool(const DenseStep& step, std::span<const double> y)>;

struct DopriResult {
  DopriStatus status = DopriStatus::Completed;
  double t = 0.0;
  std::vector<double> y;
  DopriStats stats;
};

/// Dormand-Prince 5(4) with FSAL and Hairer's dense output. Integrates from
/// t0 towards t_end in either direction.
DopriResult dopri5(const OdeRhs& f, double t0, std::vector<double> y0, double t_end, const DopriOptions& options,
                   const StepObserver& observer = {});

}  // namespace liefrw::detail
