#include "intersect.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace lab {

namespace {

// g-orthonormal completion of a unit direction (deterministic)
MatrixXd perp_frame(const ChartedManifold& m, const VectorXd& x, const VectorXd& vu) {
  int n = m.dim();
  MatrixXd g = m.metric(x);
  std::vector<VectorXd> basis{vu};
  for (int k = 0; k < n && int(basis.size()) < n; ++k) {
    VectorXd e = VectorXd::Unit(n, k);
    for (auto& b : basis) e -= b.dot(g * e) * b;
    double nn = std::sqrt(std::max(0.0, e.dot(g * e)));
    if (nn > 1e-8) basis.push_back(e / nn);
  }
  MatrixXd E(n, n - 1);
  for (int c = 0; c < n - 1; ++c) E.col(c) = basis[size_t(c) + 1];
  return E;
}

std::vector<double> linspace(double a, double b, long n) {
  std::vector<double> v(static_cast<size_t>(n));
  for (long i = 0; i < n; ++i)
    v[size_t(i)] = a + (b - a) * double(i) / double(n - 1);
  return v;
}

std::vector<VectorXd> path_points(const GeodesicPath& p,
                                  const std::vector<double>& ts) {
  std::vector<VectorXd> out;
  out.reserve(ts.size());
  for (double t : ts) out.push_back(p.m->wrap(p.at(t).x));
  return out;
}

double param_lo(const GeodesicPath& p) { return std::max(p.l_minus, p.t_start()); }
double param_hi(const GeodesicPath& p) { return std::min(p.l_plus, p.t_end()); }

}  // namespace

GeodesicPairWitness check_H_at_point(const ChartedManifold& m, const VectorXd& x0,
                                     const HCheckOptions& opt) {
  int n = m.dim();
  if (!m.in_chart(x0, 1e-9))
    throw std::invalid_argument("check_H_at_point: x0 outside the chart");

  GeodesicPairWitness w;
  w.x0 = x0;
  if (m.boundary_margin(x0) < 1e-9) {
    w.note = "boundary point";
    return w;
  }

  // direction-pair proposals: model-aware first, generic grid after
  std::vector<std::pair<VectorXd, VectorXd>> proposals;
  MatrixXd g = m.metric(x0);
  auto unitize = [&](VectorXd v) {
    double nn = std::sqrt(v.dot(g * v));
    return VectorXd(v / nn);
  };

  if (m.model() == Model::FlatCylinder && n == 2) {
    double a = m.height();
    double th = opt.theta0 > 0 ? opt.theta0 : 0.25 * std::atan(PI / a);
    VectorXd u(2), v(2);
    u << 0, 1;                        // vertical
    v << std::sin(th), std::cos(th);  // helix at the family angle
    proposals.emplace_back(u, v);
    double th2 = std::min(1.25 * th, 0.45 * PI);
    VectorXd v2(2);
    v2 << std::sin(th2), std::cos(th2);
    proposals.emplace_back(u, v2);
  } else if (m.model() == Model::EuclideanDisc) {
    VectorXd u = VectorXd::Unit(n, 0), v = VectorXd::Unit(n, 1);
    proposals.emplace_back(u, v);
  } else if (m.model() == Model::SpherePolarPatch) {
    if (x0[0] < 0.05) {
      w.note = "too close to the chart pole";
      return w;
    }
    VectorXd u = unitize(VectorXd::Unit(n, 0));
    VectorXd v = unitize(VectorXd::Unit(n, 1));
    proposals.emplace_back(u, v);
  }
  // generic fallback: uniform directions over the half-circle (n=2) or a
  // deterministic spiral on the half-sphere (n=3)
  long K = opt.dirs > 0 ? opt.dirs : (n == 2 ? 12 : 16);
  MatrixXd E0 = perp_frame(m, x0, unitize(VectorXd::Unit(n, 0)));
  VectorXd b0 = unitize(VectorXd::Unit(n, 0));
  std::vector<VectorXd> dirs;
  if (n == 2) {
    for (long i = 0; i < K; ++i) {
      double ang = PI * double(i) / double(K);
      dirs.push_back(std::cos(ang) * b0 + std::sin(ang) * E0.col(0));
    }
  } else {
    for (long i = 0; i < K; ++i) {
      double z = (double(i) + 0.5) / double(K);         // upper half only
      double ang = 2 * PI * 0.618033988749895 * double(i);
      double rr = std::sqrt(std::max(0.0, 1 - z * z));
      dirs.push_back(z * b0 + rr * std::cos(ang) * E0.col(0) +
                     rr * std::sin(ang) * E0.col(1));
    }
  }
  for (size_t i = 0; i < dirs.size(); ++i)
    for (size_t j = i + 1; j < dirs.size(); ++j)
      proposals.emplace_back(dirs[i], dirs[j]);

  GeodesicOptions go;
  go.horizon_fwd = opt.t_max;
  go.horizon_back = opt.t_max;

  double best_offdiag = -INF;
  std::string fail_note;
  for (const auto& [du, dv] : proposals) {
    GeodesicPath ga = integrate_geodesic(m, x0, du, go);
    GeodesicPath et = integrate_geodesic(m, x0, dv, go);
    if (m.boundary_kind() != BoundaryKind::Closed) {
      if (ga.tangential_minus || ga.tangential_plus || et.tangential_minus ||
          et.tangential_plus)
        continue;
    }
    double ct = std::abs(m.inner(x0, ga.at(0).v, et.at(0).v));
    if (ct > 1.0 - 1e-9) continue;  // parallel
    double theta = std::acos(std::min(1.0, ct));

    double la = param_hi(ga) - param_lo(ga), le = param_hi(et) - param_lo(et);
    double res = opt.res_factor * std::min(la, le);
    long Nt = long(std::ceil(la / res)) + 1, Mt = long(std::ceil(le / res)) + 1;
    auto ts = linspace(param_lo(ga), param_hi(ga), Nt);
    auto taus = linspace(param_lo(et), param_hi(et), Mt);
    auto gp = path_points(ga, ts), ep = path_points(et, taus);

    // exclusion is the (H1) parameter ball: outside it the crossing itself
    // cannot explain small distances, so any near-approach is a second
    // intersection
    double excl = opt.exclusion;
    double mind = INF;
    for (long i = 0; i < Nt; ++i)
      for (long j = 0; j < Mt; ++j) {
        if (std::max(std::abs(ts[size_t(i)]), std::abs(taus[size_t(j)])) <= excl)
          continue;
        mind = std::min(mind, m.distance(gp[size_t(i)], ep[size_t(j)]));
      }
    if (std::isfinite(mind) && mind > 10.0 * res) {
      w.gamma = std::move(ga);
      w.eta = std::move(et);
      w.t0 = 0;
      w.tau0 = 0;
      w.theta = theta;
      w.len_gamma = la;
      w.len_eta = le;
      w.grid_res = res;
      w.min_offdiag = mind;
      w.valid = true;
      return w;
    }
    if (mind > best_offdiag) {
      best_offdiag = mind;
      fail_note = "second intersection evidence: off-diagonal min distance " +
                  fmt_g(mind, 6) + " at grid resolution " + fmt_g(res, 6);
    }
  }
  w.note = fail_note.empty() ? "no proposal produced a valid pair" : fail_note;
  return w;
}

double estimate_c0(const GeodesicPairWitness& w, double r_candidate, long npts) {
  if (!w.valid) throw std::invalid_argument("estimate_c0: invalid witness");
  const ChartedManifold& m = *w.gamma.m;
  if (std::isfinite(m.inj()) && r_candidate >= 0.5 * m.inj())
    throw std::invalid_argument("estimate_c0: r_candidate must be < Inj/2");

  double st = std::max(std::sin(w.theta), 0.05);
  double Wt = std::min({param_hi(w.gamma) - w.t0, w.t0 - param_lo(w.gamma),
                        1.5 * r_candidate / st});
  double Wtau = std::min({param_hi(w.eta) - w.tau0, w.tau0 - param_lo(w.eta),
                          1.5 * r_candidate / st});
  Wt = std::max(Wt, 4 * r_candidate / 100);
  Wtau = std::max(Wtau, 4 * r_candidate / 100);

  auto ts = linspace(w.t0 - Wt, w.t0 + Wt, npts);
  auto taus = linspace(w.tau0 - Wtau, w.tau0 + Wtau, npts);
  auto gp = path_points(w.gamma, ts), ep = path_points(w.eta, taus);

  double c0 = 0;
  bool any = false;
  for (long i = 0; i < npts; ++i)
    for (long j = 0; j < npts; ++j) {
      double d = m.distance(gp[size_t(i)], ep[size_t(j)]);
      if (d <= 0 || d >= r_candidate) continue;
      any = true;
      double num = std::max(std::abs(ts[size_t(i)] - w.t0),
                            std::abs(taus[size_t(j)] - w.tau0));
      c0 = std::max(c0, num / d);
    }
  if (!any) throw std::invalid_argument("estimate_c0: empty near-set");
  return c0;
}

PropD1Result verify_prop_D1(const ChartedManifold& m, const VectorXd& x0,
                            double theta, double rho, long npts) {
  if (theta <= 0 || theta > 0.5 * PI)
    throw std::invalid_argument("verify_prop_D1: theta in (0, pi/2]");
  MatrixXd g = m.metric(x0);
  VectorXd u = VectorXd::Unit(m.dim(), 0);
  u /= std::sqrt(u.dot(g * u));
  MatrixXd E = perp_frame(m, x0, u);
  VectorXd v = std::cos(theta) * u + std::sin(theta) * E.col(0);

  GeodesicOptions go;
  go.horizon_fwd = 2 * rho;
  go.horizon_back = 2 * rho;
  GeodesicPath ga = integrate_geodesic(m, x0, u, go);
  GeodesicPath et = integrate_geodesic(m, x0, v, go);

  double tlo = std::max(-rho, param_lo(ga)), thi = std::min(rho, param_hi(ga));
  double ulo = std::max(-rho, param_lo(et)), uhi = std::min(rho, param_hi(et));
  auto ts = linspace(tlo, thi, npts);
  auto taus = linspace(ulo, uhi, npts);
  auto gp = path_points(ga, ts), ep = path_points(et, taus);

  PropD1Result out;
  out.grid_res = std::max((thi - tlo), (uhi - ulo)) / double(npts - 1);
  out.C = INF;
  out.min_d = INF;
  for (long i = 0; i < npts; ++i) {
    double t = ts[size_t(i)];
    if (std::abs(t) < 1e-9) continue;  // removable 0/0 row
    for (long j = 0; j < npts; ++j) {
      double d = m.distance(gp[size_t(i)], ep[size_t(j)]);
      out.min_d = std::min(out.min_d, d);
      out.C = std::min(out.C, d / (std::abs(t) * std::sin(theta)));
    }
  }
  if (!(out.C > 0))
    throw std::runtime_error(
        "verify_prop_D1: nonpositive constant (intersection inside window)");
  return out;
}

namespace {

// refine a local minimum of d(gamma(t), eta(r)) by coordinate golden search
void refine_pair_min(const ChartedManifold& m, const GeodesicPath& gv,
                     const GeodesicPath& gu, double& t, double& r, double& d,
                     double win) {
  auto dist = [&](double tt, double rr) {
    return m.distance(m.wrap(gv.at(tt).x), m.wrap(gu.at(rr).x));
  };
  const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int round = 0; round < 6; ++round) {
    for (int axis = 0; axis < 2; ++axis) {
      double a = (axis == 0 ? t : r) - win, b = (axis == 0 ? t : r) + win;
      a = std::max(a, axis == 0 ? param_lo(gv) : param_lo(gu));
      b = std::min(b, axis == 0 ? param_hi(gv) : param_hi(gu));
      double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
      double f1 = axis == 0 ? dist(x1, r) : dist(t, x1);
      double f2 = axis == 0 ? dist(x2, r) : dist(t, x2);
      for (int it = 0; it < 40; ++it) {
        if (f1 < f2) {
          b = x2; x2 = x1; f2 = f1;
          x1 = b - gr * (b - a);
          f1 = axis == 0 ? dist(x1, r) : dist(t, x1);
        } else {
          a = x1; x1 = x2; f1 = f2;
          x2 = a + gr * (b - a);
          f2 = axis == 0 ? dist(x2, r) : dist(t, x2);
        }
      }
      double xm = 0.5 * (a + b);
      if (axis == 0) t = xm; else r = xm;
    }
    win *= 0.3;
  }
  d = dist(t, r);
}

std::vector<DetectedIntersection> detect_intersections(const ChartedManifold& m,
                                                       const GeodesicPath& gv,
                                                       const GeodesicPath& gu,
                                                       double t_max) {
  long N = 600;
  double res = t_max / double(N);
  auto ts = linspace(0.0, std::min(t_max, param_hi(gv)), N + 1);
  auto rs = linspace(0.0, std::min(t_max, param_hi(gu)), N + 1);
  auto vp = path_points(gv, ts), up = path_points(gu, rs);

  std::vector<DetectedIntersection> out;
  for (long i = 0; i <= N; ++i)
    for (long j = 0; j <= N; ++j) {
      if (std::max(ts[size_t(i)], rs[size_t(j)]) <= 5 * res) continue;
      double d = m.distance(vp[size_t(i)], up[size_t(j)]);
      if (d > 3 * res) continue;
      double t = ts[size_t(i)], r = rs[size_t(j)];
      double dref = d;
      refine_pair_min(m, gv, gu, t, r, dref, 2 * res);
      if (dref > 1e-7) continue;
      if (std::max(t, r) <= 5 * res) continue;
      bool dup = false;
      for (const auto& q : out)
        if (std::abs(q.t - t) < 2 * res && std::abs(q.r - r) < 2 * res) dup = true;
      if (dup) continue;
      DetectedIntersection di;
      di.t = t;
      di.r = r;
      di.d = dref;
      di.q = m.wrap(gv.at(t).x);
      out.push_back(di);
    }
  std::sort(out.begin(), out.end(),
            [](const auto& a, const auto& b) { return a.t < b.t; });
  return out;
}

}  // namespace

PerturbReport perturb_direction_avoid(const ChartedManifold& m, const VectorXd& x,
                                      const VectorXd& u, const VectorXd& v,
                                      const std::vector<long>& steps,
                                      double t_max) {
  int n = m.dim();
  int k = n - 1;
  PerturbReport rep;
  MatrixXd g = m.metric(x);
  VectorXd uu = u / std::sqrt(u.dot(g * u));
  VectorXd vv = v / std::sqrt(v.dot(g * v));

  GeodesicOptions go;
  go.horizon_back = 0;
  go.horizon_fwd = t_max;
  GeodesicPath gu = integrate_geodesic(m, x, uu, go);
  GeodesicPath gv = integrate_geodesic(m, x, vv, go);

  rep.intersections = detect_intersections(m, gv, gu, t_max);

  double jac_hi = std::min(t_max, param_hi(gv));
  JacobiSolution js = solve_jacobi(gv, 0.0, jac_hi);
  rep.max_order = 0;
  for (const auto& cp : conjugate_points(js))
    rep.max_order = std::max(rep.max_order, cp.order);
  rep.hypothesis_ok = rep.max_order <= n - 3;

  // blocked subspaces in the frame coordinates at t = 0
  std::vector<MatrixXd> blocked;  // orthonormal columns
  bool all_blocked_possible = false;
  for (const auto& di : rep.intersections) {
    PathSample sv = gv.at(di.t), su = gu.at(di.r);
    MatrixXd gq = m.metric(sv.x);
    VectorXd du = su.v - sv.v * (su.v.dot(gq * sv.v));
    VectorXd wf = sv.E.transpose() * gq * du;  // transversal part, frame coords
    MatrixXd B = js.B(di.t);
    Eigen::JacobiSVD<MatrixXd> svd(B, Eigen::ComputeFullU | Eigen::ComputeFullV);
    double smax = svd.singularValues()(0);
    std::vector<VectorXd> cols;
    // near-kernel directions: perturbation does not move the point
    for (int c = 0; c < k; ++c)
      if (svd.singularValues()(c) < 1e-4 * std::max(smax, 1e-30))
        cols.push_back(svd.matrixV().col(c));
    if (wf.norm() > 1e-9) {
      // pseudoinverse solve B xi = wf: perturbation slides along gamma_u
      VectorXd xi = VectorXd::Zero(k);
      for (int c = 0; c < k; ++c) {
        double s = svd.singularValues()(c);
        if (s >= 1e-4 * std::max(smax, 1e-30))
          xi += (svd.matrixU().col(c).dot(wf) / s) * svd.matrixV().col(c);
      }
      if (xi.norm() > 1e-12) cols.push_back(xi / xi.norm());
    }
    if (int(cols.size()) >= k) all_blocked_possible = true;
    if (cols.empty()) continue;
    MatrixXd A(k, int(cols.size()));
    for (size_t c = 0; c < cols.size(); ++c) A.col(int(c)) = cols[c];
    Eigen::HouseholderQR<MatrixXd> qr(A);
    MatrixXd Q = qr.householderQ() * MatrixXd::Identity(k, int(cols.size()));
    blocked.push_back(Q);
  }

  // candidate alpha maximizing the min distance to every blocked subspace
  auto subspace_dist = [&](const VectorXd& a, const MatrixXd& Q) {
    return (a - Q * (Q.transpose() * a)).norm();
  };
  std::vector<VectorXd> cands;
  if (k == 1) {
    cands.push_back(VectorXd::Constant(1, 1.0));
  } else {
    long KC = 256;
    for (long i = 0; i < KC; ++i) {
      double ang = 2 * PI * double(i) / double(KC);
      VectorXd a(2);
      a << std::cos(ang), std::sin(ang);
      cands.push_back(a);
    }
  }
  double best = -1;
  VectorXd alpha_f;
  for (const auto& a : cands) {
    double sc = INF;
    for (const auto& Q : blocked) sc = std::min(sc, subspace_dist(a, Q));
    if (blocked.empty()) sc = 1.0;
    if (sc > best) {
      best = sc;
      alpha_f = a;
    }
  }

  if (best <= 1e-9) {
    // every direction is tangent-plane blocked; fall back to merely moving the
    // intersection points (kernel-only blocking).  In n=2 a transversal
    // crossing can only slide, never vanish.
    best = -1;
    for (const auto& a : cands) {
      double sc = INF;
      for (const auto& di : rep.intersections) {
        MatrixXd B = js.B(di.t);
        double mv = (B * a).norm();
        sc = std::min(sc, mv);
      }
      if (rep.intersections.empty()) sc = 1.0;
      if (sc > best) {
        best = sc;
        alpha_f = a;
      }
    }
    if (best <= 1e-9) {
      rep.success = false;
      rep.note = all_blocked_possible
                     ? "perturbation cannot move the intersections (near-kernel "
                       "blocks every direction)"
                     : "no transversal direction found";
      return rep;
    }
    rep.note =
        "transversal slide only: original intersection points are missed, new "
        "crossings expected (dim does not allow full avoidance)";
  }

  PathSample s0 = gv.at(0.0);
  VectorXd alpha_chart = s0.E * alpha_f;
  rep.alpha = alpha_chart;
  rep.success = true;

  for (long nn : steps) {
    double dlt = 1.0 / double(nn);
    VectorXd vn = std::cos(dlt) * vv + std::sin(dlt) * alpha_chart;
    rep.vns.push_back(vn);
  }

  // verify the finest perturbation
  if (!rep.vns.empty()) {
    GeodesicPath gp = integrate_geodesic(m, x, rep.vns.back(), go);
    long NF = 4000;
    auto ts = linspace(0.0, std::min(t_max, param_hi(gp)), NF + 1);
    auto pp = path_points(gp, ts);
    for (const auto& di : rep.intersections) {
      double mind = INF;
      for (long i = 0; i <= NF; ++i) {
        if (std::abs(ts[size_t(i)] - di.t) > 0.5) continue;
        mind = std::min(mind, m.distance(pp[size_t(i)], di.q));
      }
      rep.local_miss.push_back(mind);
    }
    auto fresh = detect_intersections(m, gp, gu, t_max);
    long cnt = 0;
    for (const auto& f : fresh) {
      bool old_pt = false;
      for (const auto& di : rep.intersections)
        if (m.distance(f.q, di.q) < 1e-3) old_pt = true;
      if (!old_pt) ++cnt;
    }
    rep.new_intersections = cnt;
  }
  return rep;
}

SurveyReport h1_survey(const ChartedManifold& m, long n_points,
                       const HCheckOptions& opt) {
  SurveyReport rep;
  rep.points = n_points;
  int n = m.dim();

  // deterministic interior sample points
  std::mt19937_64 rng(0xd1ce5eedULL);
  auto urand = [&rng]() {
    return double(rng() >> 11) * (1.0 / 9007199254740992.0);
  };
  std::vector<VectorXd> pts;
  long guard = 0;
  while (long(pts.size()) < n_points && guard < 100 * n_points) {
    ++guard;
    VectorXd x(n);
    for (int a = 0; a < n; ++a)
      x[a] = m.box_lo()[a] + urand() * (m.box_hi()[a] - m.box_lo()[a]);
    if (!m.in_chart(x, 0)) continue;
    pts.push_back(x);
  }

  rep.r_used = std::isfinite(m.inj()) ? std::min(1.0, 0.45 * m.inj()) : 1.0;
  double skip_margin = 0.05 * std::min(m.diameter(), 2.0);

  // cylinder: sweep the family angle over [theta0, 2 theta0) so the survey
  // maxima probe both ends (c0 at theta0, length T near 2 theta0)
  double th_base = 0;
  if (m.model() == Model::FlatCylinder)
    th_base = opt.theta0 > 0 ? opt.theta0 : 0.25 * std::atan(PI / m.height());

  for (const auto& x : pts) {
    if (m.boundary_margin(x) < skip_margin) {
      ++rep.skipped_boundary;
      continue;
    }
    HCheckOptions po = opt;
    if (th_base > 0)
      po.theta0 = th_base * (1.0 + 0.99 * double(rep.witnesses % 8) / 7.0);
    GeodesicPairWitness w = check_H_at_point(m, x, po);
    if (!w.valid) {
      rep.per_point.push_back(std::move(w));
      continue;
    }
    w.r = rep.r_used;
    w.c0 = estimate_c0(w, rep.r_used, 201);
    ++rep.witnesses;
    rep.T = std::max({rep.T, w.len_gamma, w.len_eta});
    rep.theta_min = std::min(rep.theta_min, w.theta);
    rep.c0_max = std::max(rep.c0_max, w.c0);
    rep.per_point.push_back(std::move(w));
  }
  long considered = rep.points - rep.skipped_boundary;
  rep.coverage = considered > 0 ? double(rep.witnesses) / double(considered) : 0.0;

  if (m.model() == Model::FlatCylinder) {
    double a = m.height();
    rep.has_d3 = true;
    rep.theta0_analytic = 0.25 * std::atan(PI / a);
    rep.c0_analytic = 1.0 / std::sin(rep.theta0_analytic);
    rep.T_analytic = a / std::cos(2 * rep.theta0_analytic);
    rep.d3_min_margin = INF;
    for (double frac : {0.3, 0.5, 0.7})
      rep.d3_min_margin = std::min(
          rep.d3_min_margin,
          cylinder_d3_margin(m, frac * a, rep.theta0_analytic, 401));
  }
  return rep;
}

double cylinder_d3_margin(const ChartedManifold& m, double s0, double theta,
                          long npts) {
  if (m.model() != Model::FlatCylinder)
    throw std::invalid_argument("cylinder_d3_margin: cylinder only");
  double a = m.height();
  if (s0 <= 0 || s0 >= a)
    throw std::invalid_argument("cylinder_d3_margin: s0 inside (0, a)");
  double c = PI;  // base angle; the bound is rotation invariant
  double st = std::sin(theta), ct = std::cos(theta), tt = std::tan(theta);

  auto ts = linspace(0.0, a, npts);
  auto taus = linspace(0.0, a / ct, npts);
  double margin = INF;
  VectorXd gpt(2), ept(2);
  for (long i = 0; i < npts; ++i) {
    gpt << c, ts[size_t(i)];
    for (long j = 0; j < npts; ++j) {
      double tau = taus[size_t(j)];
      ept << c - s0 * tt + tau * st, tau * ct;
      double d = m.distance(m.wrap(gpt), m.wrap(ept));
      double bound =
          st * std::max(std::abs(ts[size_t(i)] - s0), std::abs(tau - s0 / ct));
      margin = std::min(margin, d - bound);
    }
  }
  return margin;
}

}  // namespace lab
