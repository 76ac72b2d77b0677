#pragma once

#include <complex>

#include "geodesic.hpp"
#include "jacobi.hpp"
#include "manifold.hpp"
#include "parallel.hpp"
#include "util.hpp"

namespace lab {

using cplx = std::complex<double>;
using MatrixXcd = Eigen::MatrixXcd;
using VectorXcd = Eigen::VectorXcd;

// Smooth bump chi: [0,inf) -> [0,1], chi = 1 on [0, plateau], chi = 0 on
// [support, inf), bridged by the standard exp(-1/x) partition.
struct CutoffFunction {
  double plateau = 0.25;
  double support = 0.5;
  double operator()(double s) const;
};

// Complex symmetric Hessian H(t) along a geodesic solving H' + H^2 + K(t) = 0
// with K the curvature block in the transported frame.  Solved numerically
// from t = 0 in both directions; a0 by cumulative Simpson of tr H.
struct RiccatiSolution {
  const GeodesicPath* path = nullptr;
  int k = 0;                  // n-1
  double t_lo = 0, t_hi = 0;  // window covered
  MatrixXcd H0;
  OdeSolution fw, bw;             // states [Re vec H, Im vec H]
  std::vector<double> tfw, tbw;   // sample times
  std::vector<cplx> cumfw, cumbw; // cumulative int_0^{t_i} tr H

  MatrixXcd H(double t) const;
  cplx a0(double t) const;        // exp(-1/2 int_0^t tr H)
  double min_im_eig = INF;        // over all samples
  double Ctilde = 0;              // max over samples of 1/min-eig(Im H)
  double symmetry_defect = 0;     // max |H - H^T| over samples
};

RiccatiSolution solve_riccati(const GeodesicPath& path, const MatrixXcd& H0,
                              double t_lo, double t_hi, double tol = 1e-11);

// Closed forms used as oracles and fast evaluation paths.
MatrixXcd riccati_closed_flat(const MatrixXcd& H0, double t);
MatrixXcd riccati_closed_sphere(const MatrixXcd& H0, double t);

// delta1 default: min(rho/2, rho/(2(1+2c0))) with rho = min(r, inj/c0).
double default_delta1(double r, double inj, double c0);

struct BeamOptions {
  double lambda = 40;
  double delta1 = 0.5;
  MatrixXcd H0;        // empty -> iI
  double tol = 1e-11;
};

// v(x) = lambda^{(n-1)/8} sum_branches e^{i lambda (t + <H(t)y,y>/2)} a0(t) chi(|y|/delta1)
class BeamProfile {
 public:
  const ChartedManifold* m = nullptr;
  const GeodesicPath* path = nullptr;
  double lambda = 0, delta1 = 0;
  CutoffFunction cut;
  RiccatiSolution ric;
  double t_lo = 0, t_hi = 0;

  // evaluation mode: closed forms are exact for the built-in curvatures and
  // keep the hot grid loops off the ODE interpolant
  enum class Mode { Numeric, FlatDiag, SphereI };
  Mode mode = Mode::Numeric;
  VectorXcd h0diag;

  MatrixXcd H(double t) const;
  cplx a0(double t) const;
  cplx value_at(double t, const VectorXd& y) const;  // single-branch value
  cplx operator()(const VectorXd& x) const;          // sum over Fermi branches
  double phase_re(const VectorXd& x) const;          // Re phi at nearest branch
  double norm_factor() const;                        // lambda^{(n-1)/8}
  double tube_radius() const { return 0.5 * delta1; }
};

BeamProfile make_beam(const GeodesicPath& path, const BeamOptions& opt);

struct BeamNorms {
  double L2 = 0, L4 = 0, Linf = 0;
  double ratio4 = 0;    // L4 / 1
  double ratio_inf = 0; // Linf / lambda^{(n-1)/8}
};

// Quadrature norms over the grid with dV_g weights.  Throws if the grid step
// exceeds 1/8 of the transverse width lambda^{-1/2}.
BeamNorms beam_norms(const BeamProfile& bp, const GridSpec& grid,
                     Exec ex = Exec::Parallel);

struct ResidualResult {
  double res_l2 = 0;  // ||(-Lap_g - lambda^2) v||_L2
  double v_l2 = 0;
  double rho = 0;     // res / (lambda^2 ||v||)
  long points = 0;
};

// Second-order central differences for -Lap_g on the grid interior; the field
// is sampled one ghost layer beyond every edge (the beam formula extends past
// the caps via the path padding).  Throws if the step exceeds (1/20) lambda^{-1}.
ResidualResult residual_norm(const BeamProfile& bp, const GridSpec& grid,
                             Exec ex = Exec::Parallel);

// Same FD machinery applied to an arbitrary field (plane-wave sanity checks).
ResidualResult residual_norm_field(const ChartedManifold& m, double lambda,
                                   const std::function<cplx(const VectorXd&)>& f,
                                   const GridSpec& grid, Exec ex = Exec::Parallel);

}  // namespace lab
