#pragma once

#include <functional>

#include "beam.hpp"
#include "holder.hpp"
#include "intersect.hpp"

// Desk-scale inverse pipeline: two beams crossing at x0, the nonnegative phase
// Psi built from their imaginary Hessians, the quadruple-product integral of
// the potential against |v|^2|w|^2, and the Laplace-type inversion recovering
// p(x0) with its decay ladder. Plus the boundary-concentration quadrature on
// the flat half-plane.

namespace lab {

// Scalar potential with Holder bookkeeping: pointwise evaluator for quadrature,
// chart-grid samples for the norm, frequency N(p) = norm/sup, admissible when
// N(p) <= B.
struct PotentialField {
  std::function<double(const VectorXd&)> f;
  HolderFunction samples;
  double alpha = 0.9;
  double B = INF;

  double operator()(const VectorXd& x) const { return f(x); }
  double N() const;  // cached frequency
  bool admissible() const { return N() <= B; }

 private:
  mutable double np_ = -1;
};

PotentialField make_potential(const ChartedManifold& m,
                              std::function<double(const VectorXd&)> f,
                              double alpha = 0.9, double B = INF,
                              long npts_per_axis = 33);

// Grid argmax of |p| (the natural probe point).
VectorXd potential_argmax(const PotentialField& p);

struct HessianPsi {
  MatrixXd hess;      // chart Hessian of Psi at x0
  double c = 0;       // smallest eigenvalue
  double det = 0;
  double theta = 0;   // crossing angle
  double min_im = 0;  // min eigenvalue of Im H over both beams at the meet
  bool bound_ok = false;  // c >= 0.9 * min_im * sin^2(theta)
  double t0 = 0, tau0 = 0;
  double psi0 = 0;       // |Psi(x0)|; zero by construction
  double grad_norm = 0;  // |grad Psi(x0)| by central differences
};

// Assembles grad^2 Psi(x0) = 2 (gE_v) ImH_v (E_v^T g) + 2 (gE_w) ImH_w (E_w^T g).
// Throws if either beam misses x0 by more than 1e-7 or the beams are parallel.
HessianPsi hessian_Psi(const BeamProfile& bv, const BeamProfile& bw,
                       const VectorXd& x0);

// Psi = 2(Im phi_v + Im phi_w) read off the nearest Fermi branch inside each
// tube; NaN when x is outside either tube.
double psi_value(const BeamProfile& bv, const BeamProfile& bw, const VectorXd& x);

struct QuadProduct {
  double I = 0;    // lambda^{n/2}-normalized, profile prefactors divided out
  double raw = 0;  // plain quadrature of p |v|^2 |w|^2 dV_g
  long points = 0;
  double support_max_dist = 0;  // farthest product support from x0
};

// Midpoint quadrature of p|v|^2|w|^2 over the grid. Requires every cell to
// resolve the transverse width (cell <= lambda^{-1/2}/8) and the product
// support to stay inside B_{delta_tilde}(x0).
QuadProduct quadruple_product_integral(const PotentialField& p,
                                       const BeamProfile& bv,
                                       const BeamProfile& bw,
                                       const GridSpec& grid, const VectorXd& x0,
                                       double delta_tilde,
                                       Exec ex = Exec::Parallel);

// phat = I * sqrt(det) / ((2 pi)^{n/2} |a0|^2 |b0|^2).
double recover_point_value(double I, const MatrixXd& hess_psi, double a0_abs,
                           double b0_abs);

struct RecoveryRow {
  double lambda = 0;
  double I = 0;
  double phat = 0;
  double err = 0;  // relative when p(x0) != 0, absolute otherwise
  long points = 0;
};

struct DecayFit {
  double slope = 0;
  bool at_floor = false;
  std::vector<int> used;
};

// Least-squares slope of log err vs log lambda after dropping rungs within a
// factor 10 of the noise floor.
DecayFit error_decay(const std::vector<RecoveryRow>& rows, double noise_floor);

struct RecoveryOptions {
  std::vector<double> ladder = {40, 80, 160, 320};
  double delta1 = 0.8;
  MatrixXcd H0v, H0w;      // empty -> iI
  double grid_refine = 1;  // >1: oracle runs on finer grids
  double noise_floor = 1e-10;
  Exec ex = Exec::Parallel;
};

struct RecoveryReport {
  VectorXd x0;
  double ptrue = 0;
  double c0 = 0, delta_tilde = 0;
  HessianPsi hess;
  double a0_abs = 1, b0_abs = 1;
  bool psi_quartic_ok = false;  // Psi >= (c/4) d(x,x0)^2 on the product support
  double psi_margin = 0;        // min of Psi - (c/4) d^2 over that support
  std::vector<RecoveryRow> rows;
  DecayFit fit;
};

RecoveryReport run_recovery(const ChartedManifold& m, const VectorXd& x0,
                            const VectorXd& dir_v, const VectorXd& dir_w,
                            const PotentialField& p,
                            const RecoveryOptions& opt = {});

// Boundary concentration on the half-plane {x2 >= 0}: quadrature of
// q u3 u4 |v_mu|^2 for the family mu^{-2/3} eta(x1/mu^{1/3}) e^{-x2/mu} (moduli;
// alpha = 1/3), against the limit q(0) u3(0) u4(0) / 2.
struct BoundaryConcOptions {
  std::vector<double> mus;     // empty -> {1e-1, 10^{-1.5}, ..., 1e-3}
  double normal_span = 12;     // integration range in units of mu
  long n_normal = 0, n_tan = 0;  // 0 -> rule minimum; must track the anisotropy
  double tan_center = 0;       // translation-covariance checks move eta here
};

struct BoundaryConcResult {
  std::vector<double> mus, values;
  double limit = 0;      // Richardson extrapolation, exponent 2/3
  double reference = 0;  // q u3 u4 / 2 at the concentration point
  double err = 0;        // relative when reference != 0, absolute otherwise
};

BoundaryConcResult boundary_concentration(
    const std::function<double(const VectorXd&)>& q,
    const std::function<double(const VectorXd&)>& u3,
    const std::function<double(const VectorXd&)>& u4,
    const BoundaryConcOptions& opt = {});

}  // namespace lab
