#include "geodesic.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lab {

namespace {

// state = [x(n), v(n), vec(E)(n*(n-1)) column-major]
long state_size(int n, bool with_frame) { return with_frame ? n * (n + 1) : 2 * n; }

OdeRhs make_rhs(const ChartedManifold& m, bool with_frame) {
  int n = m.dim();
  return [&m, n, with_frame](double, const VectorXd& y, VectorXd& dy) {
    dy.resize(y.size());
    VectorXd x = y.head(n), v = y.segment(n, n);
    dy.head(n) = v;
    if (m.is_flat()) {
      dy.segment(n, n).setZero();
      if (with_frame) dy.tail(n * (n - 1)).setZero();
      return;
    }
    auto G = m.christoffel(x);
    for (int k = 0; k < n; ++k) dy[n + k] = -v.dot(G[k] * v);
    if (with_frame) {
      for (int c = 0; c < n - 1; ++c) {
        VectorXd e = y.segment(2 * n + c * n, n);
        for (int k = 0; k < n; ++k) dy[2 * n + c * n + k] = -v.dot(G[k] * e);
      }
    }
  };
}

std::vector<OdeEvent> make_events(const ChartedManifold& m) {
  std::vector<OdeEvent> ev;
  int n = m.dim();
  if (m.boundary_kind() == BoundaryKind::Faces) {
    for (const auto& f : m.faces()) {
      ev.push_back([f](double, const VectorXd& y) {
        return double(f.side) * (y[f.axis] - f.value);
      });
    }
  } else if (m.boundary_kind() == BoundaryKind::Ball) {
    double R2 = m.ball_radius() * m.ball_radius();
    ev.push_back([n, R2](double, const VectorXd& y) {
      return y.head(n).squaredNorm() - R2;
    });
  }
  return ev;
}

// |<v, nu>_g| at a boundary point, nu the outward unit normal.
double normal_speed(const ChartedManifold& m, const VectorXd& x, const VectorXd& v) {
  if (m.boundary_kind() == BoundaryKind::Ball) {
    double r = x.norm();
    return r > 0 ? std::abs(v.dot(x) / r) : 0.0;
  }
  // nearest face
  const BoundaryFace* best = nullptr;
  double bm = INF;
  for (const auto& f : m.faces()) {
    double d = std::abs(x[f.axis] - f.value);
    if (d < bm) { bm = d; best = &f; }
  }
  if (!best) return 1.0;
  MatrixXd ginv = m.metric_inv(x);
  return std::abs(v[best->axis]) / std::sqrt(ginv(best->axis, best->axis));
}

MatrixXd initial_frame(const ChartedManifold& m, const VectorXd& x, const VectorXd& vu) {
  int n = m.dim();
  MatrixXd g = m.metric(x);
  std::vector<VectorXd> basis{vu};
  for (int k = 0; k < n && int(basis.size()) < n; ++k) {
    VectorXd e = VectorXd::Unit(n, k);
    for (auto& b : basis) e -= b.dot(g * e) * b;
    double nn = std::sqrt(std::max(0.0, e.dot(g * e)));
    if (nn > 1e-8) basis.push_back(e / nn);
  }
  if (int(basis.size()) != n)
    throw std::runtime_error("initial_frame: failed to complete orthonormal frame");
  MatrixXd E(n, n - 1);
  for (int c = 0; c < n - 1; ++c) E.col(c) = basis[c + 1];
  return E;
}

}  // namespace

PathSample GeodesicPath::at(double t) const {
  if (samples.empty()) throw std::logic_error("GeodesicPath: empty");
  t = std::clamp(t, samples.front().t, samples.back().t);
  size_t lo = 0, hi = samples.size() - 1;
  while (hi - lo > 1) {
    size_t mid = (lo + hi) / 2;
    if (samples[mid].t <= t) lo = mid; else hi = mid;
  }
  const PathSample &L = samples[lo], &R = samples[hi];
  double h = R.t - L.t;
  if (h <= 0) return L;
  double s = (t - L.t) / h;
  auto h00 = (1 + 2 * s) * (1 - s) * (1 - s), h10 = s * (1 - s) * (1 - s);
  auto h01 = s * s * (3 - 2 * s), h11 = s * s * (s - 1);

  PathSample out;
  out.t = t;
  out.x = h00 * L.x + (h10 * h) * L.v + h01 * R.x + (h11 * h) * R.v;

  int n = m->dim();
  if (m->is_flat()) {
    out.v = L.v;
    out.E = L.E;
    return out;
  }
  // accelerations at segment ends for Hermite on v (and E)
  auto GL = m->christoffel(L.x);
  auto GR = m->christoffel(R.x);
  VectorXd aL(n), aR(n);
  for (int k = 0; k < n; ++k) {
    aL[k] = -L.v.dot(GL[k] * L.v);
    aR[k] = -R.v.dot(GR[k] * R.v);
  }
  out.v = h00 * L.v + (h10 * h) * aL + h01 * R.v + (h11 * h) * aR;
  out.E.resize(n, n - 1);
  for (int c = 0; c < n - 1; ++c) {
    VectorXd dL(n), dR(n);
    for (int k = 0; k < n; ++k) {
      dL[k] = -L.v.dot(GL[k] * L.E.col(c));
      dR[k] = -R.v.dot(GR[k] * R.E.col(c));
    }
    out.E.col(c) =
        h00 * L.E.col(c) + (h10 * h) * dL + h01 * R.E.col(c) + (h11 * h) * dR;
  }
  return out;
}

double GeodesicPath::max_speed_drift() const {
  double d = 0;
  for (const auto& s : samples) d = std::max(d, std::abs(m->norm(s.x, s.v) - 1.0));
  return d;
}

double GeodesicPath::max_frame_drift() const {
  double d = 0;
  int n = m->dim();
  for (const auto& s : samples) {
    MatrixXd g = m->metric(s.x);
    MatrixXd gram = s.E.transpose() * g * s.E;
    d = std::max(d, (gram - MatrixXd::Identity(n - 1, n - 1)).cwiseAbs().maxCoeff());
    d = std::max(d, (s.E.transpose() * g * s.v).cwiseAbs().maxCoeff());
  }
  return d;
}

GeodesicPath integrate_geodesic(const ChartedManifold& m, const VectorXd& x0,
                                const VectorXd& v0, const GeodesicOptions& opt) {
  int n = m.dim();
  if (x0.size() != n || v0.size() != n)
    throw std::invalid_argument("integrate_geodesic: dimension mismatch");
  double sp = m.norm(x0, v0);
  if (sp < 1e-12) throw std::invalid_argument("integrate_geodesic: zero direction");
  VectorXd vu = v0 / sp;

  GeodesicPath path;
  path.m = &m;
  path.pad = opt.pad;

  double cap = 50.0 * m.diameter();
  double hb = std::min(opt.horizon_back, cap), hf = std::min(opt.horizon_fwd, cap);

  MatrixXd E0 = opt.with_frame ? initial_frame(m, x0, vu) : MatrixXd(n, 0);
  long sz = state_size(n, opt.with_frame);
  VectorXd y0(sz);
  y0.head(n) = x0;
  y0.segment(n, n) = vu;
  if (opt.with_frame)
    for (int c = 0; c < n - 1; ++c) y0.segment(2 * n + c * n, n) = E0.col(c);

  OdeRhs rhs = make_rhs(m, opt.with_frame);
  auto events = make_events(m);
  OdeOptions oo;
  oo.rtol = opt.tol;
  oo.atol = opt.tol * 1e-3;

  auto unpack = [&](const OdeSample& s) {
    PathSample ps;
    ps.t = s.t;
    ps.x = s.y.head(n);
    ps.v = s.y.segment(n, n);
    if (opt.with_frame) {
      ps.E.resize(n, n - 1);
      for (int c = 0; c < n - 1; ++c) ps.E.col(c) = s.y.segment(2 * n + c * n, n);
    }
    return ps;
  };

  auto run_side = [&](double horizon, int dir, double& l_out, bool& tang, bool& trapped,
                      std::vector<PathSample>& out) {
    if (horizon <= 0) { l_out = 0; return; }
    OdeSolution sol = ode_integrate(rhs, 0.0, y0, dir * horizon, oo, events);
    for (const auto& s : sol.samples) out.push_back(unpack(s));
    if (sol.event_hit) {
      l_out = sol.event_time;
      PathSample ex = unpack({sol.event_time, sol.event_state, sol.event_state});
      tang = normal_speed(m, ex.x, ex.v) < opt.tangency_tol;
      if (opt.pad > 0) {
        OdeSolution ext = ode_integrate(rhs, sol.event_time, sol.event_state,
                                        sol.event_time + dir * opt.pad, oo, {});
        for (size_t i = 1; i < ext.samples.size(); ++i)
          out.push_back(unpack(ext.samples[i]));
      }
    } else {
      l_out = dir > 0 ? INF : -INF;
      trapped = m.boundary_kind() != BoundaryKind::Closed;
    }
  };

  std::vector<PathSample> fwd, bwd;
  run_side(hf, +1, path.l_plus, path.tangential_plus, path.trapped_plus, fwd);
  run_side(hb, -1, path.l_minus, path.tangential_minus, path.trapped_minus, bwd);

  std::reverse(bwd.begin(), bwd.end());
  if (!bwd.empty()) {
    path.samples = std::move(bwd);
    // skip duplicate t=0 sample if both sides ran
    size_t skip = fwd.empty() ? 0 : 1;
    for (size_t i = skip; i < fwd.size(); ++i) path.samples.push_back(fwd[i]);
    if (!fwd.empty()) {
      // bwd ends with t=0; ensure it is present exactly once
    }
  } else {
    path.samples = std::move(fwd);
  }
  if (path.samples.empty()) path.samples.push_back({0.0, x0, vu, E0});

  if (m.is_flat()) {
    path.flat = true;
    path.flat_x0 = x0;
    path.flat_dir = vu;
    path.flat_E = E0;
  } else if (m.is_sphere_like()) {
    path.sphere = true;
    path.amb_p = sphere_to_ambient(n, x0);
    path.amb_q = sphere_tangent_to_ambient(n, x0, vu);
    path.amb_q /= path.amb_q.norm();
    path.amb_N.resize(n + 1, n - 1);
    for (int c = 0; c < n - 1; ++c) {
      VectorXd Nc = sphere_tangent_to_ambient(n, x0, E0.col(c));
      path.amb_N.col(c) = Nc / Nc.norm();
    }
  }
  return path;
}

std::vector<FermiBranch> GeodesicPath::fermi_branches(const VectorXd& xq, double radius,
                                                      double t_lo, double t_hi) const {
  std::vector<FermiBranch> out;
  int n = m->dim();

  if (flat) {
    VectorXd base = xq - flat_x0;
    double B = std::max(std::abs(t_lo), std::abs(t_hi)) + radius + 1e-9;
    int nper = 0;
    int axes[3] = {0, 0, 0};
    long kmin[3] = {0, 0, 0}, kmax[3] = {0, 0, 0};
    for (int a = 0; a < n; ++a) {
      if (!m->periodic(a)) continue;
      double P = m->period(a);
      axes[nper] = a;
      kmin[nper] = long(std::ceil((-B - base[a]) / P));
      kmax[nper] = long(std::floor((B - base[a]) / P));
      ++nper;
    }
    VectorXd d = base;
    auto emit = [&](const VectorXd& dk) {
      double t = dk.dot(flat_dir);
      if (t < t_lo - 1e-12 || t > t_hi + 1e-12) return;
      VectorXd y = flat_E.transpose() * dk;
      if (y.norm() <= radius) out.push_back({t, y});
    };
    if (nper == 0) {
      emit(d);
    } else if (nper == 1) {
      for (long k = kmin[0]; k <= kmax[0]; ++k) {
        d = base;
        d[axes[0]] += double(k) * m->period(axes[0]);
        emit(d);
      }
    } else {
      for (long k0 = kmin[0]; k0 <= kmax[0]; ++k0)
        for (long k1 = kmin[1]; k1 <= kmax[1]; ++k1) {
          d = base;
          d[axes[0]] += double(k0) * m->period(axes[0]);
          d[axes[1]] += double(k1) * m->period(axes[1]);
          if (nper == 2) { emit(d); continue; }
          for (long k2 = kmin[2]; k2 <= kmax[2]; ++k2) {
            VectorXd d3 = d;
            d3[axes[2]] += double(k2) * m->period(axes[2]);
            emit(d3);
          }
        }
    }
    return out;
  }

  if (sphere) {
    VectorXd xa = sphere_to_ambient(n, xq);
    double u = xa.dot(amb_p), w = xa.dot(amb_q);
    double tstar = std::atan2(w, u);
    VectorXd beta = amb_N.transpose() * xa;
    double s = beta.norm();
    double dperp = std::asin(std::clamp(s, 0.0, 1.0));
    if (dperp > radius) return out;
    VectorXd y = (s > 0) ? VectorXd(dperp * beta / s) : VectorXd::Zero(n - 1);
    long k0 = long(std::ceil((t_lo - tstar) / (2 * PI)));
    long k1 = long(std::floor((t_hi - tstar) / (2 * PI)));
    for (long k = k0; k <= k1; ++k) out.push_back({tstar + 2 * PI * double(k), y});
    return out;
  }

  // custom: single-branch Newton on <log_{gamma(t)} x, gamma'(t)> = 0
  double bt = t_lo;
  double bd = INF;
  for (const auto& sm : samples) {
    if (sm.t < t_lo || sm.t > t_hi) continue;
    double dd = m->unwrap_diff(xq, sm.x).norm();
    if (dd < bd) { bd = dd; bt = sm.t; }
  }
  if (!std::isfinite(bd)) return out;
  double t = bt;
  for (int it = 0; it < 40; ++it) {
    PathSample ps = at(t);
    VectorXd w = log_map(*m, m->wrap(ps.x), m->wrap(xq));
    double F = m->inner(ps.x, w, ps.v);
    t = std::clamp(t + F, t_lo, t_hi);
    if (std::abs(F) < 1e-12) break;
  }
  PathSample ps = at(t);
  VectorXd w = log_map(*m, m->wrap(ps.x), m->wrap(xq));
  VectorXd y(n - 1);
  MatrixXd g = m->metric(ps.x);
  for (int c = 0; c < n - 1; ++c) y[c] = w.dot(g * ps.E.col(c));
  if (y.norm() <= radius && t >= t_lo - 1e-12 && t <= t_hi + 1e-12) out.push_back({t, y});
  return out;
}

VectorXd GeodesicPath::fermi_point(double t, const VectorXd& y) const {
  int n = m->dim();
  if (flat) {
    VectorXd x = flat_x0 + t * flat_dir;
    for (int c = 0; c < n - 1; ++c) x += y[c] * flat_E.col(c);
    return m->wrap(x);
  }
  if (sphere) {
    double r = y.norm();
    VectorXd axis = std::cos(t) * amb_p + std::sin(t) * amb_q;
    if (r < 1e-300) return sphere_from_ambient(n, axis);
    VectorXd nh = (amb_N * y) / r;
    VectorXd pa = std::cos(r) * axis + std::sin(r) * nh;
    return sphere_from_ambient(n, pa);
  }
  PathSample ps = at(t);
  VectorXd w = VectorXd::Zero(n);
  for (int c = 0; c < n - 1; ++c) w += y[c] * ps.E.col(c);
  return exp_map(*m, m->wrap(ps.x), w);
}

VectorXd exp_map(const ChartedManifold& m, const VectorXd& x, const VectorXd& w,
                 double tol) {
  int n = m.dim();
  double len = m.norm(x, w);
  if (len < 1e-300) return x;
  if (m.is_flat()) return m.wrap(x + w);
  if (m.is_sphere_like()) {
    VectorXd xa = sphere_to_ambient(n, x);
    VectorXd wa = sphere_tangent_to_ambient(n, x, w);
    wa /= wa.norm();
    return sphere_from_ambient(n, std::cos(len) * xa + std::sin(len) * wa);
  }
  VectorXd vu = w / len;
  VectorXd y0(2 * n);
  y0.head(n) = x;
  y0.tail(n) = vu;
  OdeOptions oo;
  oo.rtol = tol;
  oo.atol = tol * 1e-3;
  int nn = n;
  OdeRhs rhs = [&m, nn](double, const VectorXd& y, VectorXd& dy) {
    dy.resize(y.size());
    VectorXd xx = y.head(nn), vv = y.tail(nn);
    dy.head(nn) = vv;
    auto G = m.christoffel(xx);
    for (int k = 0; k < nn; ++k) dy[nn + k] = -vv.dot(G[k] * vv);
  };
  OdeSolution sol = ode_integrate(rhs, 0.0, y0, len, oo);
  VectorXd xe = sol.samples.back().y.head(n);
  for (int a = 0; a < n; ++a) {
    if (m.periodic(a)) continue;
    if (xe[a] < m.box_lo()[a] - 1e-9 || xe[a] > m.box_hi()[a] + 1e-9)
      throw std::domain_error("exp_map: geodesic left the chart box");
  }
  return m.wrap(xe);
}

VectorXd log_map(const ChartedManifold& m, const VectorXd& x, const VectorXd& q,
                 double tol) {
  int n = m.dim();
  if (m.is_flat()) return m.unwrap_diff(q, x);
  if (m.is_sphere_like()) {
    VectorXd xa = sphere_to_ambient(n, x), qa = sphere_to_ambient(n, q);
    double c = std::clamp(xa.dot(qa), -1.0, 1.0);
    if (c <= -1.0 + 1e-12)
      throw std::domain_error("log_map: antipodal points");
    double d = std::acos(c);
    if (d < 1e-300) return VectorXd::Zero(n);
    VectorXd u = qa - c * xa;
    u *= d / u.norm();
    return sphere_tangent_from_ambient(n, x, u);
  }
  // custom: shooting Newton with FD Jacobian
  VectorXd w = m.unwrap_diff(q, x);
  const double eps = 1e-6;
  for (int it = 0; it < 25; ++it) {
    VectorXd r = m.unwrap_diff(exp_map(m, x, w, tol), q);
    if (r.norm() < tol * 10) return w;
    MatrixXd J(n, n);
    for (int k = 0; k < n; ++k) {
      VectorXd wp = w, wm = w;
      wp[k] += eps;
      wm[k] -= eps;
      J.col(k) = (m.unwrap_diff(exp_map(m, x, wp, tol), q) -
                  m.unwrap_diff(exp_map(m, x, wm, tol), q)) /
                 (2 * eps);
    }
    w -= J.fullPivLu().solve(r);
  }
  throw std::runtime_error("log_map: Newton iteration did not converge");
}

double geo_distance(const ChartedManifold& m, const VectorXd& p, const VectorXd& q) {
  if (m.model() != Model::Custom) return m.distance(p, q);
  return m.norm(p, log_map(m, p, q));
}

}  // namespace lab
