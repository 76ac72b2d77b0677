#include "manifold.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace lab {

using nlohmann::json;

namespace {

double wrap_to(double v, double lo, double period) {
  double w = std::fmod(v - lo, period);
  if (w < 0) w += period;
  return lo + w;
}

// nearest representative of d in (-period/2, period/2]
double wrap_centered(double d, double period) {
  double w = std::fmod(d, period);
  if (w > 0.5 * period) w -= period;
  if (w <= -0.5 * period) w += period;
  return w;
}

}  // namespace

ChartedManifold ChartedManifold::disc() {
  ChartedManifold m;
  m.model_ = Model::EuclideanDisc;
  m.n_ = 2;
  m.name_ = "euclidean-disc";
  m.lo_ = VectorXd::Constant(2, -1.0);
  m.hi_ = VectorXd::Constant(2, 1.0);
  m.periodic_ = {false, false};
  m.bkind_ = BoundaryKind::Ball;
  m.ball_radius_ = 1.0;
  m.inj_ = INF;  // extension R^2
  m.diam_ = 2.0;
  return m;
}

ChartedManifold ChartedManifold::cylinder(double height) {
  if (!(height > 0)) throw std::invalid_argument("cylinder: height must be positive");
  ChartedManifold m;
  m.model_ = Model::FlatCylinder;
  m.n_ = 2;
  m.name_ = "flat-cylinder";
  m.lo_ = VectorXd::Zero(2);
  m.hi_ = VectorXd(2);
  m.hi_ << 2 * PI, height;
  m.periodic_ = {true, false};
  m.bkind_ = BoundaryKind::Faces;
  m.faces_ = {{1, 0.0, -1}, {1, height, +1}};
  m.inj_ = PI;
  m.diam_ = std::sqrt(PI * PI + height * height);
  m.cyl_a_ = height;
  return m;
}

ChartedManifold ChartedManifold::sphere(int dim) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("sphere: dim must be 2 or 3");
  ChartedManifold m;
  m.model_ = Model::RoundSphere;
  m.n_ = dim;
  m.name_ = "round-sphere";
  m.lo_ = VectorXd::Zero(dim);
  m.hi_ = VectorXd(dim);
  if (dim == 2) {
    m.hi_ << PI, 2 * PI;
    m.periodic_ = {false, true};
  } else {
    m.hi_ << PI, PI, 2 * PI;
    m.periodic_ = {false, false, true};
  }
  m.bkind_ = BoundaryKind::Closed;
  m.inj_ = PI;
  m.diam_ = PI;
  return m;
}

ChartedManifold ChartedManifold::torus(int dim) {
  if (dim != 2 && dim != 3) throw std::invalid_argument("torus: dim must be 2 or 3");
  ChartedManifold m;
  m.model_ = Model::FlatTorus;
  m.n_ = dim;
  m.name_ = "flat-torus";
  m.lo_ = VectorXd::Zero(dim);
  m.hi_ = VectorXd::Constant(dim, 2 * PI);
  m.periodic_.assign(dim, true);
  m.bkind_ = BoundaryKind::Closed;
  m.inj_ = PI;
  m.diam_ = PI * std::sqrt(double(dim));
  return m;
}

ChartedManifold ChartedManifold::sphere_patch(double rmax) {
  if (!(rmax > 0 && rmax < PI)) throw std::invalid_argument("sphere_patch: need 0 < rmax < pi");
  ChartedManifold m;
  m.model_ = Model::SpherePolarPatch;
  m.n_ = 2;
  m.name_ = "sphere-polar-patch";
  m.lo_ = VectorXd::Zero(2);
  m.hi_ = VectorXd(2);
  m.hi_ << rmax, 2 * PI;
  m.periodic_ = {false, true};
  m.bkind_ = BoundaryKind::Faces;
  m.faces_ = {{0, rmax, +1}};
  m.inj_ = PI;  // extension: full sphere
  m.diam_ = 2 * rmax;
  m.patch_rmax_ = rmax;
  return m;
}

ChartedManifold ChartedManifold::from_json_text(const std::string& text) {
  json j = json::parse(text);
  ChartedManifold m;
  m.model_ = Model::Custom;
  m.name_ = j.value("name", std::string("custom"));
  m.n_ = j.at("dim").get<int>();
  if (m.n_ < 1 || m.n_ > 3) throw std::invalid_argument("custom manifold: dim must be 1..3");

  auto box = j.at("box");
  if (int(box.size()) != m.n_) throw std::invalid_argument("custom manifold: box size != dim");
  m.lo_ = VectorXd(m.n_);
  m.hi_ = VectorXd(m.n_);
  for (int i = 0; i < m.n_; ++i) {
    m.lo_[i] = box[i][0].get<double>();
    m.hi_[i] = box[i][1].get<double>();
    if (!(m.hi_[i] > m.lo_[i])) throw std::invalid_argument("custom manifold: empty box axis");
  }

  m.periodic_.assign(m.n_, false);
  if (j.contains("periodic"))
    for (int i = 0; i < m.n_; ++i) m.periodic_[i] = j["periodic"][i].get<bool>();

  std::string bk = "closed";
  if (j.contains("boundary")) bk = j["boundary"].value("kind", std::string("closed"));
  if (bk == "closed") {
    m.bkind_ = BoundaryKind::Closed;
  } else if (bk == "faces") {
    m.bkind_ = BoundaryKind::Faces;
    for (auto& f : j["boundary"].at("faces")) {
      BoundaryFace bf{f.at("axis").get<int>(), f.at("value").get<double>(),
                      f.at("side").get<int>()};
      if (bf.axis < 0 || bf.axis >= m.n_ || (bf.side != 1 && bf.side != -1))
        throw std::invalid_argument("custom manifold: malformed boundary face");
      if (m.periodic_[bf.axis])
        throw std::invalid_argument("custom manifold: boundary face on periodic axis");
      m.faces_.push_back(bf);
    }
  } else if (bk == "ball") {
    m.bkind_ = BoundaryKind::Ball;
    m.ball_radius_ = j["boundary"].at("radius").get<double>();
  } else {
    throw std::invalid_argument("custom manifold: unknown boundary kind " + bk);
  }

  if (!j.contains("inj"))
    throw std::invalid_argument("custom manifold: missing required field inj");
  m.inj_ = j["inj"].get<double>();

  double boxdiag = (m.hi_ - m.lo_).norm();
  m.diam_ = j.value("diameter", boxdiag);

  auto g = j.at("metric");
  if (int(g.size()) != m.n_) throw std::invalid_argument("custom manifold: metric rows != dim");
  m.gexpr_.resize(m.n_);
  for (int i = 0; i < m.n_; ++i) {
    if (int(g[i].size()) != m.n_)
      throw std::invalid_argument("custom manifold: metric cols != dim");
    for (int k = 0; k < m.n_; ++k)
      m.gexpr_[i].push_back(Expr::parse(g[i][k].get<std::string>(), m.n_));
  }
  // symmetry sanity at the box center
  VectorXd c = 0.5 * (m.lo_ + m.hi_);
  MatrixXd gc = m.metric(c);
  if ((gc - gc.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("custom manifold: metric expressions not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(gc);
  if (es.eigenvalues().minCoeff() <= 0)
    throw std::invalid_argument("custom manifold: metric not positive definite at box center");
  return m;
}

ChartedManifold ChartedManifold::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open manifold file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

MatrixXd ChartedManifold::metric(const VectorXd& x) const {
  MatrixXd g = MatrixXd::Identity(n_, n_);
  switch (model_) {
    case Model::EuclideanDisc:
    case Model::FlatCylinder:
    case Model::FlatTorus:
      return g;
    case Model::RoundSphere: {
      double sr = std::sin(x[0]);
      g(1, 1) = sr * sr;
      if (n_ == 3) {
        double sa = std::sin(x[1]);
        g(2, 2) = sr * sr * sa * sa;
      }
      return g;
    }
    case Model::SpherePolarPatch: {
      double sr = std::sin(x[0]);
      g(1, 1) = sr * sr;
      return g;
    }
    case Model::Custom: {
      for (int i = 0; i < n_; ++i)
        for (int k = 0; k < n_; ++k) g(i, k) = gexpr_[i][k].eval(x.data());
      return g;
    }
  }
  return g;
}

MatrixXd ChartedManifold::metric_inv(const VectorXd& x) const {
  if (is_flat()) return MatrixXd::Identity(n_, n_);
  return metric(x).inverse();
}

std::vector<MatrixXd> ChartedManifold::metric_deriv(const VectorXd& x) const {
  std::vector<MatrixXd> dg(n_, MatrixXd::Zero(n_, n_));
  switch (model_) {
    case Model::EuclideanDisc:
    case Model::FlatCylinder:
    case Model::FlatTorus:
      return dg;
    case Model::RoundSphere:
    case Model::SpherePolarPatch: {
      double s2r = std::sin(2 * x[0]);
      dg[0](1, 1) = s2r;
      if (n_ == 3) {
        double sa = std::sin(x[1]), sr = std::sin(x[0]);
        dg[0](2, 2) = s2r * sa * sa;
        dg[1](2, 2) = sr * sr * std::sin(2 * x[1]);
      }
      return dg;
    }
    case Model::Custom: {
      const double h = 1e-5;  // spec-pinned FD step for custom metrics
      VectorXd xp = x, xm = x;
      for (int k = 0; k < n_; ++k) {
        xp[k] = x[k] + h;
        xm[k] = x[k] - h;
        dg[k] = (metric(xp) - metric(xm)) / (2 * h);
        xp[k] = x[k];
        xm[k] = x[k];
      }
      return dg;
    }
  }
  return dg;
}

std::vector<MatrixXd> ChartedManifold::christoffel(const VectorXd& x) const {
  std::vector<MatrixXd> G(n_, MatrixXd::Zero(n_, n_));
  if (is_flat()) return G;
  MatrixXd ginv = metric_inv(x);
  std::vector<MatrixXd> dg = metric_deriv(x);
  for (int k = 0; k < n_; ++k)
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) {
        double s = 0;
        for (int l = 0; l < n_; ++l)
          s += ginv(k, l) * (dg[i](j, l) + dg[j](i, l) - dg[l](i, j));
        G[k](i, j) = 0.5 * s;
      }
  return G;
}

double ChartedManifold::vol_density(const VectorXd& x) const {
  if (is_flat()) return 1.0;
  return std::sqrt(metric(x).determinant());
}

double ChartedManifold::inner(const VectorXd& x, const VectorXd& u, const VectorXd& v) const {
  if (is_flat()) return u.dot(v);
  return u.dot(metric(x) * v);
}

double ChartedManifold::norm(const VectorXd& x, const VectorXd& v) const {
  return std::sqrt(std::max(0.0, inner(x, v, v)));
}

VectorXd ChartedManifold::wrap(VectorXd x) const {
  for (int i = 0; i < n_; ++i)
    if (periodic_[i]) x[i] = wrap_to(x[i], lo_[i], period(i));
  return x;
}

VectorXd ChartedManifold::unwrap_diff(const VectorXd& p, const VectorXd& q) const {
  VectorXd d = p - q;
  for (int i = 0; i < n_; ++i)
    if (periodic_[i]) d[i] = wrap_centered(d[i], period(i));
  return d;
}

bool ChartedManifold::in_chart(const VectorXd& x, double tol) const {
  for (int i = 0; i < n_; ++i) {
    if (periodic_[i]) continue;
    if (x[i] < lo_[i] - tol || x[i] > hi_[i] + tol) return false;
  }
  if (bkind_ == BoundaryKind::Ball && x.norm() > ball_radius_ + tol) return false;
  return true;
}

double ChartedManifold::boundary_margin(const VectorXd& x) const {
  switch (bkind_) {
    case BoundaryKind::Closed:
      return INF;
    case BoundaryKind::Ball:
      return ball_radius_ - x.norm();
    case BoundaryKind::Faces: {
      double m = INF;
      for (const auto& f : faces_) m = std::min(m, double(f.side) * (f.value - x[f.axis]));
      return m;
    }
  }
  return INF;
}

double ChartedManifold::distance(const VectorXd& p, const VectorXd& q) const {
  switch (model_) {
    case Model::EuclideanDisc:
      return (p - q).norm();
    case Model::FlatCylinder:
    case Model::FlatTorus:
      return unwrap_diff(p, q).norm();
    case Model::RoundSphere:
    case Model::SpherePolarPatch: {
      double c = sphere_to_ambient(n_, p).dot(sphere_to_ambient(n_, q));
      return std::acos(std::clamp(c, -1.0, 1.0));
    }
    case Model::Custom:
      throw std::domain_error(
          "distance: custom models are served by the geodesic module's log map");
  }
  return 0;
}

std::string ChartedManifold::json_echo() const {
  json j;
  j["name"] = name_;
  j["dim"] = n_;
  std::vector<std::vector<double>> box;
  for (int i = 0; i < n_; ++i) box.push_back({lo_[i], hi_[i]});
  j["box"] = box;
  std::vector<bool> per(periodic_.begin(), periodic_.end());
  j["periodic"] = per;
  switch (bkind_) {
    case BoundaryKind::Closed: j["boundary"] = {{"kind", "closed"}}; break;
    case BoundaryKind::Ball:
      j["boundary"] = {{"kind", "ball"}, {"radius", ball_radius_}};
      break;
    case BoundaryKind::Faces: {
      json fs = json::array();
      for (auto& f : faces_)
        fs.push_back({{"axis", f.axis}, {"value", f.value}, {"side", f.side}});
      j["boundary"] = {{"kind", "faces"}, {"faces", fs}};
      break;
    }
  }
  if (std::isfinite(inj_)) j["inj"] = inj_;
  j["diameter"] = diam_;
  if (model_ == Model::FlatCylinder) j["height"] = cyl_a_;
  if (model_ == Model::SpherePolarPatch) j["rmax"] = patch_rmax_;
  return j.dump();
}

// ---- ambient sphere helpers ----

VectorXd sphere_to_ambient(int n, const VectorXd& x) {
  VectorXd p(n + 1);
  if (n == 2) {
    double r = x[0], f = x[1];
    p << std::sin(r) * std::cos(f), std::sin(r) * std::sin(f), std::cos(r);
  } else {
    double r = x[0], a = x[1], b = x[2];
    p << std::sin(r) * std::cos(a), std::sin(r) * std::sin(a) * std::cos(b),
        std::sin(r) * std::sin(a) * std::sin(b), std::cos(r);
  }
  return p;
}

VectorXd sphere_from_ambient(int n, const VectorXd& p) {
  VectorXd x(n);
  if (n == 2) {
    x[0] = std::acos(std::clamp(p[2], -1.0, 1.0));
    x[1] = std::atan2(p[1], p[0]);
    if (x[1] < 0) x[1] += 2 * PI;
  } else {
    x[0] = std::acos(std::clamp(p[3], -1.0, 1.0));
    double s = std::sqrt(std::max(0.0, p[0] * p[0] + p[1] * p[1] + p[2] * p[2]));
    x[1] = (s > 0) ? std::acos(std::clamp(p[0] / s, -1.0, 1.0)) : 0.0;
    x[2] = std::atan2(p[2], p[1]);
    if (x[2] < 0) x[2] += 2 * PI;
  }
  return x;
}

MatrixXd sphere_jacobian(int n, const VectorXd& x) {
  MatrixXd J(n + 1, n);
  if (n == 2) {
    double r = x[0], f = x[1];
    J.col(0) << std::cos(r) * std::cos(f), std::cos(r) * std::sin(f), -std::sin(r);
    J.col(1) << -std::sin(r) * std::sin(f), std::sin(r) * std::cos(f), 0;
  } else {
    double r = x[0], a = x[1], b = x[2];
    double sr = std::sin(r), cr = std::cos(r), sa = std::sin(a), ca = std::cos(a);
    double sb = std::sin(b), cb = std::cos(b);
    J.col(0) << cr * ca, cr * sa * cb, cr * sa * sb, -sr;
    J.col(1) << -sr * sa, sr * ca * cb, sr * ca * sb, 0;
    J.col(2) << 0, -sr * sa * sb, sr * sa * cb, 0;
  }
  return J;
}

VectorXd sphere_tangent_to_ambient(int n, const VectorXd& x, const VectorXd& v) {
  return sphere_jacobian(n, x) * v;
}

VectorXd sphere_tangent_from_ambient(int n, const VectorXd& x, const VectorXd& w) {
  // J^T J = g (chart metric); v = g^{-1} J^T w
  MatrixXd J = sphere_jacobian(n, x);
  MatrixXd g = J.transpose() * J;
  return g.ldlt().solve(J.transpose() * w);
}

}  // namespace lab
