#include "recovery.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lab {

double PotentialField::N() const {
  if (np_ < 0) np_ = frequency_function(samples);
  return np_;
}

PotentialField make_potential(const ChartedManifold& m,
                              std::function<double(const VectorXd&)> f,
                              double alpha, double B, long npts_per_axis) {
  GridSpec grid;
  grid.lo = m.box_lo();
  grid.hi = m.box_hi();
  grid.npts.assign(size_t(m.dim()), npts_per_axis);
  PotentialField p;
  p.samples = sample_function(grid, f, alpha, &m);
  p.f = std::move(f);
  p.alpha = alpha;
  p.B = B;
  return p;
}

VectorXd potential_argmax(const PotentialField& p) {
  long best = 0;
  double mv = -1;
  for (long i = 0; i < p.samples.grid.total(); ++i)
    if (std::abs(p.samples[i]) > mv) {
      mv = std::abs(p.samples[i]);
      best = i;
    }
  return p.samples.grid.point(best);
}

namespace {

// Fermi foot of x on the beam axis; nan offsets when outside the tube.
bool nearest_branch(const BeamProfile& b, const VectorXd& x, FermiBranch& out) {
  auto brs = b.path->fermi_branches(x, b.tube_radius() * (1 + 1e-9), b.t_lo, b.t_hi);
  if (brs.empty()) return false;
  size_t best = 0;
  for (size_t i = 1; i < brs.size(); ++i)
    if (brs[i].y.norm() < brs[best].y.norm()) best = i;
  out = brs[best];
  return true;
}

double im_phase(const BeamProfile& b, const FermiBranch& br) {
  MatrixXcd H = b.H(br.t);
  double q = 0;
  for (int i = 0; i < H.rows(); ++i)
    for (int j = 0; j < H.cols(); ++j)
      q += br.y[i] * std::imag(H(i, j)) * br.y[j];
  return 0.5 * q;
}

double min_eig_sym(const MatrixXd& A) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (A + A.transpose()));
  return es.eigenvalues().minCoeff();
}

}  // namespace

double psi_value(const BeamProfile& bv, const BeamProfile& bw, const VectorXd& x) {
  FermiBranch a, b;
  if (!nearest_branch(bv, x, a) || !nearest_branch(bw, x, b))
    return std::numeric_limits<double>::quiet_NaN();
  return 2.0 * (im_phase(bv, a) + im_phase(bw, b));
}

HessianPsi hessian_Psi(const BeamProfile& bv, const BeamProfile& bw,
                       const VectorXd& x0) {
  if (bv.m != bw.m)
    throw std::invalid_argument("hessian_Psi: beams live on different manifolds");
  const ChartedManifold& m = *bv.m;

  FermiBranch fv, fw;
  if (!nearest_branch(bv, x0, fv) || fv.y.norm() > 1e-7)
    throw std::runtime_error("hessian_Psi: first beam misses x0");
  if (!nearest_branch(bw, x0, fw) || fw.y.norm() > 1e-7)
    throw std::runtime_error("hessian_Psi: second beam misses x0");

  HessianPsi out;
  out.t0 = fv.t;
  out.tau0 = fw.t;

  PathSample sv = bv.path->at(fv.t), sw = bw.path->at(fw.t);
  MatrixXd g = m.metric(x0);
  double ct = std::abs(sv.v.dot(g * sw.v));
  if (ct > 1.0 - 1e-9)
    throw std::invalid_argument("hessian_Psi: parallel beams (theta = 0)");
  out.theta = std::acos(std::min(1.0, ct));

  MatrixXd ImHv = bv.H(fv.t).imag(), ImHw = bw.H(fw.t).imag();
  MatrixXd Gv = g * sv.E, Gw = g * sw.E;
  out.hess = 2.0 * Gv * ImHv * Gv.transpose() + 2.0 * Gw * ImHw * Gw.transpose();
  out.hess = 0.5 * (out.hess + out.hess.transpose().eval());
  out.c = min_eig_sym(out.hess);
  out.det = out.hess.determinant();
  out.min_im = std::min(min_eig_sym(ImHv), min_eig_sym(ImHw));
  double s2 = std::sin(out.theta) * std::sin(out.theta);
  out.bound_ok = out.c >= 0.9 * out.min_im * s2;

  out.psi0 = std::abs(psi_value(bv, bw, x0));
  double h = 1e-5;
  VectorXd grad(m.dim());
  for (int i = 0; i < m.dim(); ++i) {
    VectorXd xp = x0, xm = x0;
    xp[i] += h;
    xm[i] -= h;
    grad[i] = (psi_value(bv, bw, xp) - psi_value(bv, bw, xm)) / (2 * h);
  }
  out.grad_norm = grad.norm();
  return out;
}

QuadProduct quadruple_product_integral(const PotentialField& p,
                                       const BeamProfile& bv,
                                       const BeamProfile& bw,
                                       const GridSpec& grid, const VectorXd& x0,
                                       double delta_tilde, Exec ex) {
  if (bv.m != bw.m)
    throw std::invalid_argument("quadruple_product_integral: manifold mismatch");
  if (std::abs(bv.lambda - bw.lambda) > 1e-12 * bv.lambda)
    throw std::invalid_argument("quadruple_product_integral: beams at different frequencies");
  const ChartedManifold& m = *bv.m;
  double lam = bv.lambda;
  double width = 1.0 / std::sqrt(lam);
  for (int a = 0; a < grid.dim(); ++a)
    if (grid.cell(a) > width / 8 + 1e-15)
      throw std::invalid_argument(
          "quadruple_product_integral: grid does not resolve the transverse width");

  VectorXd x0w = m.wrap(x0);
  long total = grid.total();

  double all_max = map_max(size_t(total), [&](size_t i) {
    VectorXd x = grid.center(long(i));
    return std::sqrt(std::norm(bv(x)) * std::norm(bw(x)));
  }, ex);

  QuadProduct out;
  out.points = total;
  if (all_max > 0) {
    out.support_max_dist = map_max(size_t(total), [&](size_t i) {
      VectorXd x = grid.center(long(i));
      double a = std::sqrt(std::norm(bv(x)) * std::norm(bw(x)));
      return a > 1e-12 * all_max ? m.distance(x, x0w) : 0.0;
    }, ex);
    if (out.support_max_dist > delta_tilde)
      throw std::runtime_error(
          "quadruple_product_integral: support leakage outside the working ball "
          "(delta1 misconfigured)");
  }

  double raw = map_sum(size_t(total), [&](size_t i) {
    VectorXd x = grid.center(long(i));
    double av = std::norm(bv(x));
    if (av == 0) return 0.0;
    double aw = std::norm(bw(x));
    if (aw == 0) return 0.0;
    return p(x) * av * aw * m.vol_density(x);
  }, ex) * grid.cell_volume();

  out.raw = raw;
  double nf = bv.norm_factor() * bw.norm_factor();  // lambda^{(n-1)/4}
  out.I = std::pow(lam, 0.5 * m.dim()) * raw / (nf * nf);
  return out;
}

double recover_point_value(double I, const MatrixXd& hess_psi, double a0_abs,
                           double b0_abs) {
  int n = int(hess_psi.rows());
  double det = hess_psi.determinant();
  if (!(det > 0))
    throw std::invalid_argument("recover_point_value: det of the phase Hessian <= 0");
  if (!(a0_abs > 0) || !(b0_abs > 0))
    throw std::invalid_argument("recover_point_value: vanishing beam amplitude");
  return I * std::sqrt(det) /
         (std::pow(2 * PI, 0.5 * n) * a0_abs * a0_abs * b0_abs * b0_abs);
}

DecayFit error_decay(const std::vector<RecoveryRow>& rows, double noise_floor) {
  DecayFit fit;
  std::vector<double> lx, ly;
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].err < 10 * noise_floor) continue;
    fit.used.push_back(int(i));
    lx.push_back(std::log(rows[i].lambda));
    ly.push_back(std::log(rows[i].err));
  }
  if (lx.size() < 2) {
    fit.at_floor = true;
    return fit;
  }
  fit.slope = fit_slope(lx, ly);
  return fit;
}

RecoveryReport run_recovery(const ChartedManifold& m, const VectorXd& x0,
                            const VectorXd& dir_v, const VectorXd& dir_w,
                            const PotentialField& p, const RecoveryOptions& opt) {
  if (opt.ladder.size() < 2)
    throw std::invalid_argument("run_recovery: ladder needs at least two rungs");
  for (size_t i = 1; i < opt.ladder.size(); ++i)
    if (opt.ladder[i] <= opt.ladder[i - 1])
      throw std::invalid_argument("run_recovery: ladder must be strictly increasing");

  RecoveryReport rep;
  rep.x0 = x0;
  rep.ptrue = p(x0);

  MatrixXd g = m.metric(x0);
  VectorXd dv = dir_v / std::sqrt(dir_v.dot(g * dir_v));
  VectorXd dw = dir_w / std::sqrt(dir_w.dot(g * dir_w));

  GeodesicOptions go;
  GeodesicPath pv = integrate_geodesic(m, x0, dv, go);
  GeodesicPath pw = integrate_geodesic(m, x0, dw, go);

  GeodesicPairWitness wit;
  wit.gamma = pv;
  wit.eta = pw;
  wit.x0 = x0;
  wit.t0 = 0;
  wit.tau0 = 0;
  wit.theta = std::acos(std::min(1.0, std::abs(m.inner(x0, dv, dw))));
  wit.valid = true;
  double r_cand = std::isfinite(m.inj()) ? std::min(1.0, 0.45 * m.inj()) : 1.0;
  rep.c0 = estimate_c0(wit, r_cand, 201);
  rep.delta_tilde = (1 + 2 * rep.c0) * opt.delta1;

  bool first = true;
  for (double lam : opt.ladder) {
    BeamOptions bo;
    bo.lambda = lam;
    bo.delta1 = opt.delta1;
    bo.H0 = opt.H0v;
    BeamProfile bv = make_beam(pv, bo);
    bo.H0 = opt.H0w;
    BeamProfile bw = make_beam(pw, bo);

    GridSpec grid;
    grid.lo = m.box_lo();
    grid.hi = m.box_hi();
    double target = 1.0 / (std::sqrt(lam) * 8.0) / opt.grid_refine;
    for (int a = 0; a < m.dim(); ++a)
      grid.npts.push_back(
          std::max<long>(2, long(std::ceil((grid.hi[a] - grid.lo[a]) / target))));

    if (first) {
      rep.hess = hessian_Psi(bv, bw, x0);
      rep.a0_abs = std::abs(bv.a0(rep.hess.t0));
      rep.b0_abs = std::abs(bw.a0(rep.hess.tau0));

      // quartic-safety margin of the phase on the product support
      double margin = INF;
      for (long i = 0; i < grid.total(); ++i) {
        VectorXd x = grid.center(i);
        if (std::norm(bv(x)) == 0 || std::norm(bw(x)) == 0) continue;
        double psi = psi_value(bv, bw, x);
        if (std::isnan(psi)) continue;
        double d = m.distance(x, m.wrap(x0));
        margin = std::min(margin, psi - 0.25 * rep.hess.c * d * d);
      }
      rep.psi_margin = margin;
      rep.psi_quartic_ok = margin >= -1e-9;
      first = false;
    }

    QuadProduct qp =
        quadruple_product_integral(p, bv, bw, grid, x0, rep.delta_tilde, opt.ex);
    RecoveryRow row;
    row.lambda = lam;
    row.I = qp.I;
    row.points = qp.points;
    row.phat = recover_point_value(qp.I, rep.hess.hess, rep.a0_abs, rep.b0_abs);
    double scale = std::abs(rep.ptrue);
    row.err = std::abs(row.phat - rep.ptrue) / (scale > 0 ? scale : 1.0);
    rep.rows.push_back(row);
  }

  rep.fit = error_decay(rep.rows, opt.noise_floor);
  return rep;
}

namespace {

double eta_bump(double s) {
  double a = 1 - s * s;
  return a > 0 ? std::exp(-1.0 / a) : 0.0;
}

// int eta^2 over [-1,1], fixed Simpson rule; normalizes int eta(x')^2 dx' = 1
double eta_square_mass() {
  static const double mass = [] {
    long N = 4001;
    double h = 2.0 / double(N - 1);
    double s = 0;
    for (long i = 0; i < N; ++i) {
      double x = -1 + double(i) * h;
      double w = (i == 0 || i == N - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      double e = eta_bump(x);
      s += w * e * e;
    }
    return s * h / 3;
  }();
  return mass;
}

}  // namespace

BoundaryConcResult boundary_concentration(
    const std::function<double(const VectorXd&)>& q,
    const std::function<double(const VectorXd&)>& u3,
    const std::function<double(const VectorXd&)>& u4,
    const BoundaryConcOptions& opt) {
  std::vector<double> mus = opt.mus;
  if (mus.empty())
    for (double e = -1.0; e > -3.0 - 1e-9; e -= 0.5) mus.push_back(std::pow(10.0, e));

  double inv_mass = 1.0 / eta_square_mass();

  BoundaryConcResult out;
  for (double mu : mus) {
    if (!(mu > 0) || mu >= 1)
      throw std::invalid_argument("boundary_concentration: mu in (0, 1)");
    double w = std::pow(mu, 1.0 / 3.0);  // tangential scale, alpha = 1/3
    double T = opt.normal_span * mu;

    long nt = opt.n_tan > 0 ? opt.n_tan : 41;
    long nn = opt.n_normal > 0 ? opt.n_normal : long(std::ceil(opt.normal_span * 20)) + 1;
    if (nt % 2 == 0 || nn % 2 == 0)
      throw std::invalid_argument("boundary_concentration: grids must be odd (Simpson)");
    if (2 * w / double(nt - 1) > w / 20 + 1e-15 || T / double(nn - 1) > mu / 20 + 1e-15)
      throw std::invalid_argument(
          "boundary_concentration: grid must track the mu-scale anisotropy");

    double ht = 2 * w / double(nt - 1), hn = T / double(nn - 1);
    double pref = std::pow(mu, -4.0 / 3.0) * inv_mass;
    double acc = 0;
    VectorXd x(2);
    for (long i = 0; i < nt; ++i) {
      double x1 = opt.tan_center - w + double(i) * ht;
      double wi = (i == 0 || i == nt - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      double e = eta_bump((x1 - opt.tan_center) / w);
      if (e == 0) continue;
      double row = 0;
      for (long j = 0; j < nn; ++j) {
        double x2 = double(j) * hn;
        double wj = (j == 0 || j == nn - 1) ? 1.0 : (j % 2 ? 4.0 : 2.0);
        x << x1, x2;
        row += wj * q(x) * u3(x) * u4(x) * std::exp(-2 * x2 / mu);
      }
      acc += wi * e * e * row;
    }
    double value = pref * acc * (ht / 3) * (hn / 3);
    out.mus.push_back(mu);
    out.values.push_back(value);
  }

  size_t k = out.values.size();
  if (k >= 2) {
    // leading correction O(mu^{2/3}) (eta^2 even kills the odd moment)
    double th = std::pow(out.mus[k - 1] / out.mus[k - 2], 2.0 / 3.0);
    out.limit = std::abs(1 - th) > 1e-6
                    ? (out.values[k - 1] - th * out.values[k - 2]) / (1 - th)
                    : out.values[k - 1];
  } else {
    out.limit = out.values.back();
  }

  VectorXd origin(2);
  origin << opt.tan_center, 0.0;
  out.reference = 0.5 * q(origin) * u3(origin) * u4(origin);
  double s = std::abs(out.reference);
  out.err = std::abs(out.limit - out.reference) / (s > 0 ? s : 1.0);
  return out;
}

}  // namespace lab
