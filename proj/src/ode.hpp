#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "util.hpp"

// Embedded Dormand-Prince 4(5) integrator with dense output and event
// localization. Integrates forward or backward depending on the sign of
// t1 - t0. Dense output is cubic Hermite on the accepted steps; at rtol ~ 1e-9
// the interpolation error is far below the module tolerances that consume it.

namespace lab {

struct OdeOptions {
  double rtol = 1e-9;
  double atol = 1e-12;
  double h0 = 1e-3;        // initial trial step (magnitude)
  double hmax = INF;
  long max_steps = 2000000;
  double event_tol = 1e-10;  // time localization tolerance for events
};

struct OdeSample {
  double t;
  VectorXd y;
  VectorXd f;  // y'(t), stored for Hermite interpolation
};

using OdeRhs = std::function<void(double, const VectorXd&, VectorXd&)>;
// Event fires when its value crosses zero. Sign at t0 is the reference;
// integration stops at the first root of any event.
using OdeEvent = std::function<double(double, const VectorXd&)>;

struct OdeSolution {
  std::vector<OdeSample> samples;  // ordered by |t - t0| increasing
  bool event_hit = false;
  int event_index = -1;
  double event_time = 0;
  VectorXd event_state;
  bool reached_end = false;

  // Hermite interpolation between bracketing samples; clamps to the span.
  VectorXd at(double t) const;
  VectorXd deriv_at(double t) const;
  double t_front() const { return samples.front().t; }
  double t_back() const { return samples.back().t; }
};

OdeSolution ode_integrate(const OdeRhs& rhs, double t0, VectorXd y0, double t1,
                          const OdeOptions& opt = {},
                          const std::vector<OdeEvent>& events = {});

}  // namespace lab
