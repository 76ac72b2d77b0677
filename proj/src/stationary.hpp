#pragma once

#include <functional>

#include "parallel.hpp"
#include "util.hpp"

namespace lab {

using ScalarFn = std::function<double(const VectorXd&)>;

// Quadratic-dominated phase on a ball: Psi(0) = 0, grad Psi(0) = 0,
// Psi''(0) = hess0 > 0, |Psi - quadratic| <= C|x|^3 on |x| <= r.
struct PhaseModel {
  ScalarFn Psi;
  MatrixXd hess0;
  double r = 1.0;
  int n = 2;
  double c = 0;  // smallest eigenvalue of hess0
  double C = 0;  // sampled cubic-remainder constant
};

// Validates Psi(0) = 0 and grad Psi(0) = 0 (within 1e-10), computes c, and
// estimates C by sampling |Psi - quadratic|/|x|^3 over the ball, excluding
// |x| < 1e-3 to avoid 0/0.
PhaseModel make_phase(ScalarFn Psi, const MatrixXd& hess0, double r);

struct PrecondResult {
  bool pass = false;
  double margin = 0;  // c/4 - C r
  double C = 0, c = 0, r = 0;
};
PrecondResult check_precondition(const PhaseModel& ph);

// (2 pi)^{n/2} / sqrt(det hess) * a0
double leading_term(const MatrixXd& hess, double a0);

struct QuadResult {
  double value = 0;     // lambda^{n/2} * integral over the ball
  double quad_err = 0;  // Richardson estimate from a half-resolution pass
  long points = 0;
};

// Tensor composite Simpson over a box clipped to the Gaussian scale, with the
// ball indicator.  ppw = points per Gaussian width lambda^{-1/2} (>= 8).
QuadResult oscillatory_integral(const PhaseModel& ph, const ScalarFn& a,
                                double lambda, int ppw = 8,
                                Exec ex = Exec::Parallel);

struct RateResult {
  double slope = 0;
  bool at_floor = false;  // too few rungs above the quadrature noise floor
  std::vector<double> lambdas, remainders, quad_errs;
  std::vector<int> used;  // indices of rungs kept by the 10x-error trim
};

// |integral - leading| vs lambda on log-log axes; rungs below 10x the
// estimated quadrature error are trimmed before fitting.
RateResult remainder_rate(const PhaseModel& ph, const ScalarFn& a,
                          const std::vector<double>& ladder, int ppw = 8,
                          Exec ex = Exec::Parallel);

}  // namespace lab
