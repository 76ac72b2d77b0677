#pragma once

#include <optional>
#include <string>
#include <vector>

#include "expr.hpp"
#include "util.hpp"

// Charted model manifolds. Each model is a single chart over an axis-aligned
// box; periodic axes identify the box edges, boundary is either a set of
// coordinate faces, a metric ball rim, or absent (closed manifold). Built-in
// models carry analytic metric derivatives; custom (expression) metrics are
// differentiated by central differences with step 1e-5.
//
// Built-ins use their natural closed extensions: the disc extends to R^2, the
// cylinder to R x S^1, the polar patch to the full sphere. distance() is the
// extension distance; inj() is the extension's injectivity radius.

namespace lab {

enum class Model { EuclideanDisc, FlatCylinder, RoundSphere, FlatTorus, SpherePolarPatch, Custom };

enum class BoundaryKind { Closed, Faces, Ball };

struct BoundaryFace {
  int axis;
  double value;
  int side;  // -1: domain lies above value, +1: domain lies below
};

class ChartedManifold {
 public:
  static ChartedManifold disc();
  static ChartedManifold cylinder(double height);
  static ChartedManifold sphere(int dim);           // dim = manifold dimension (2 or 3)
  static ChartedManifold torus(int dim);            // periods 2*pi per axis
  static ChartedManifold sphere_patch(double rmax); // polar cap r <= rmax < pi
  static ChartedManifold from_json_text(const std::string& text);
  static ChartedManifold from_json_file(const std::string& path);

  Model model() const { return model_; }
  int dim() const { return n_; }
  const std::string& name() const { return name_; }
  const VectorXd& box_lo() const { return lo_; }
  const VectorXd& box_hi() const { return hi_; }
  bool periodic(int axis) const { return periodic_[axis]; }
  double period(int axis) const { return hi_[axis] - lo_[axis]; }
  BoundaryKind boundary_kind() const { return bkind_; }
  const std::vector<BoundaryFace>& faces() const { return faces_; }
  double ball_radius() const { return ball_radius_; }
  double inj() const { return inj_; }
  double diameter() const { return diam_; }
  double height() const { return cyl_a_; }    // cylinder
  double patch_rmax() const { return patch_rmax_; }

  MatrixXd metric(const VectorXd& x) const;
  MatrixXd metric_inv(const VectorXd& x) const;
  // dg[k](i,j) = d g_ij / d x^k
  std::vector<MatrixXd> metric_deriv(const VectorXd& x) const;
  // Gamma[k](i,j) = Gamma^k_ij, assembled from metric_deriv
  std::vector<MatrixXd> christoffel(const VectorXd& x) const;
  double vol_density(const VectorXd& x) const;  // sqrt(det g)
  double inner(const VectorXd& x, const VectorXd& u, const VectorXd& v) const;
  double norm(const VectorXd& x, const VectorXd& v) const;

  // Reduce periodic coordinates to [lo, hi).
  VectorXd wrap(VectorXd x) const;
  // Componentwise displacement p - q unwrapped to the nearest representative.
  VectorXd unwrap_diff(const VectorXd& p, const VectorXd& q) const;
  bool in_chart(const VectorXd& x, double tol = 0.0) const;
  // Signed distance to the boundary in chart terms (>0 inside); +inf if closed.
  double boundary_margin(const VectorXd& x) const;

  // Extension distance between chart points. Custom models are served by the
  // shooting-based log map in the geodesic module instead.
  double distance(const VectorXd& p, const VectorXd& q) const;

  bool is_flat() const {
    return model_ == Model::EuclideanDisc || model_ == Model::FlatCylinder ||
           model_ == Model::FlatTorus;
  }
  bool is_sphere_like() const {
    return model_ == Model::RoundSphere || model_ == Model::SpherePolarPatch;
  }
  // Constant sectional curvature of built-ins (0 or 1).
  double constant_curvature() const { return is_sphere_like() ? 1.0 : 0.0; }

  std::string json_echo() const;  // model description for report files

 private:
  Model model_ = Model::Custom;
  int n_ = 2;
  std::string name_;
  VectorXd lo_, hi_;
  std::vector<bool> periodic_;
  BoundaryKind bkind_ = BoundaryKind::Closed;
  std::vector<BoundaryFace> faces_;
  double ball_radius_ = 0;
  double inj_ = INF;
  double diam_ = 0;
  double cyl_a_ = 0;
  double patch_rmax_ = 0;
  std::vector<std::vector<Expr>> gexpr_;  // custom metric entries, row-major n x n
};

// Ambient-sphere helpers (unit sphere S^n in R^(n+1), polar chart about a pole).
VectorXd sphere_to_ambient(int n, const VectorXd& x);
VectorXd sphere_from_ambient(int n, const VectorXd& p);
// Columns of the embedding differential: d(ambient)/d(chart coordinate).
MatrixXd sphere_jacobian(int n, const VectorXd& x);
VectorXd sphere_tangent_to_ambient(int n, const VectorXd& x, const VectorXd& v);
VectorXd sphere_tangent_from_ambient(int n, const VectorXd& x, const VectorXd& w);

}  // namespace lab
