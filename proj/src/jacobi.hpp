#pragma once

#include "geodesic.hpp"
#include "manifold.hpp"
#include "util.hpp"

namespace lab {

// Fundamental solutions of the Jacobi equation Y'' = -K(t) Y along a unit-speed
// geodesic, written in the transported orthonormal frame.  K is the curvature
// block K_ij = <R(E_i, v) v, E_j>, symmetric (n-1)x(n-1).
struct JacobiSolution {
  const GeodesicPath* path = nullptr;
  double t0 = 0.0, t1 = 0.0;
  OdeSolution sol;  // state = [vec A, vec A', vec B, vec B']
  int k = 0;        // n-1

  MatrixXd A(double t) const;
  MatrixXd B(double t) const;
  MatrixXd Bdot(double t) const;
};

struct ConjugatePoint {
  double t = 0.0;
  int order = 0;      // multiplicity: singular values of B below threshold
  double sigma = 0.0; // smallest singular value at t
};

// Curvature block along the path.  Built-ins use constant sectional curvature
// (0 for flat models, 1 for spheres); custom metrics assemble the Riemann
// tensor from finite differences of the Christoffel symbols.
MatrixXd curvature_block(const ChartedManifold& m, const PathSample& s);

// Integrate A (A(t0)=I, A'(t0)=0) and B (B(t0)=0, B'(t0)=I) over [t0, t1].
JacobiSolution solve_jacobi(const GeodesicPath& path, double t0, double t1,
                            double tol = 1e-10);

// Zeros of det B(t) on (t0, t1]: local minima of the smallest singular value
// of B that dip below threshold * scale, refined by golden-section search.
// Catches even-order zeros (no sign change in det B) as well.
std::vector<ConjugatePoint> conjugate_points(const JacobiSolution& js,
                                             double threshold = 1e-6);

// d(exp_x)_{t v}(t a) = B(t) a for the Jacobi field with J(0)=0, J'(0)=a.
// Returns J(t) in frame coordinates.
VectorXd jacobi_field(const JacobiSolution& js, double t, const VectorXd& a);

// Order of conjugacy of gamma(t) along the path: dim ker B(t).
int order_of_conjugacy(const JacobiSolution& js, double t, double threshold = 1e-6);

}  // namespace lab
