#pragma once

#include <optional>
#include <vector>

#include "manifold.hpp"
#include "ode.hpp"
#include "util.hpp"

// Unit-speed geodesics with a parallel orthonormal normal frame, integrated as
// one coupled system by the adaptive RK integrator. Boundary exits are located
// by event bisection; the tangential flag marks grazing exits. Paths through
// an interior point are anchored at t = 0 with exit parameters l_minus <= 0 and
// l_plus >= 0.
//
// For flat and round models the path also carries exact closed-form data (a
// line in the unwrapped chart, or an ambient great circle); Fermi coordinate
// queries use it. The ODE samples remain the contract surface and tests hold
// the two against each other.

namespace lab {

struct PathSample {
  double t;
  VectorXd x;  // chart coordinates (unwrapped along periodic axes)
  VectorXd v;  // chart velocity, unit g-speed
  MatrixXd E;  // n x (n-1): parallel orthonormal frame normal to v
};

struct FermiBranch {
  double t;    // foot parameter on the geodesic
  VectorXd y;  // normal offsets in frame components, |y| = g-distance to the axis
};

struct GeodesicOptions {
  double tol = 1e-9;
  double horizon_back = INF;   // integration caps relative to t=0;
  double horizon_fwd = INF;    // defaults clamp to 50 * diameter
  double tangency_tol = 1e-6;
  bool with_frame = true;
  double pad = 0.0;  // integrate past the boundary exit by this much (extension)
};

class GeodesicPath {
 public:
  const ChartedManifold* m = nullptr;
  std::vector<PathSample> samples;  // ascending t
  double l_minus = -INF, l_plus = INF;
  bool tangential_minus = false, tangential_plus = false;
  bool trapped_minus = false, trapped_plus = false;  // horizon hit, no boundary
  double pad = 0.0;

  // closed-form accelerators
  bool flat = false;
  VectorXd flat_x0, flat_dir;  // unwrapped line x(t) = flat_x0 + t * flat_dir
  MatrixXd flat_E;             // constant frame
  bool sphere = false;
  VectorXd amb_p, amb_q;  // gamma(t) = cos(t) p + sin(t) q
  MatrixXd amb_N;         // (n+1) x (n-1) constant normal plane

  double t_start() const { return samples.front().t; }
  double t_end() const { return samples.back().t; }
  double chord_length() const { return l_plus - l_minus; }

  PathSample at(double t) const;     // Hermite interpolation of the ODE samples
  VectorXd point(double t) const { return at(t).x; }
  VectorXd point_wrapped(double t) const { return m->wrap(at(t).x); }
  VectorXd velocity(double t) const { return at(t).v; }

  // All Fermi preimages (t, y) with t in [t_lo, t_hi] and |y| <= radius.
  std::vector<FermiBranch> fermi_branches(const VectorXd& x, double radius,
                                          double t_lo, double t_hi) const;
  // Inverse Fermi map: exp_{gamma(t)}(sum_i y_i E_i(t)), wrapped chart point.
  VectorXd fermi_point(double t, const VectorXd& y) const;

  // Diagnostics for invariant tests.
  double max_speed_drift() const;
  double max_frame_drift() const;
};

GeodesicPath integrate_geodesic(const ChartedManifold& m, const VectorXd& x0,
                                const VectorXd& v0, const GeodesicOptions& opt = {});

// Exponential map in the closed extension (no boundary events). w is a chart
// tangent at x; returns the endpoint of the geodesic t -> exp_x(t w) at t=1.
VectorXd exp_map(const ChartedManifold& m, const VectorXd& x, const VectorXd& w,
                 double tol = 1e-10);

// Inverse of exp_map for d(x, q) < inj: closed form on built-ins, shooting
// Newton on custom models.
VectorXd log_map(const ChartedManifold& m, const VectorXd& x, const VectorXd& q,
                 double tol = 1e-10);

// Extension distance; dispatches to the model formula, or |log| for custom.
double geo_distance(const ChartedManifold& m, const VectorXd& p, const VectorXd& q);

}  // namespace lab
