#include "beam.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lab {

namespace {
double bump_f(double x) { return x > 0 ? std::exp(-1.0 / x) : 0.0; }
}

double CutoffFunction::operator()(double s) const {
  if (s <= plateau) return 1.0;
  if (s >= support) return 0.0;
  double u = (s - plateau) / (support - plateau);
  double a = bump_f(1.0 - u), b = bump_f(u);
  return a / (a + b);
}

double default_delta1(double r, double inj, double c0) {
  double rho = std::min(r, inj / c0);
  return std::min(rho / 2.0, rho / (2.0 * (1.0 + 2.0 * c0)));
}

namespace {

MatrixXcd unpack_H(const VectorXd& y, int k) {
  long kk = long(k) * k;
  MatrixXcd H(k, k);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i)
      H(i, j) = cplx(y[j * k + i], y[kk + j * k + i]);
  return H;
}

cplx trace_of_state(const VectorXd& y, int k) {
  long kk = long(k) * k;
  cplx tr = 0;
  for (int d = 0; d < k; ++d) tr += cplx(y[d * k + d], y[kk + d * k + d]);
  return tr;
}

// cumulative Simpson of tr H over the adaptive samples, midpoints by the
// solver's dense output
std::vector<cplx> cumulative_trace(const OdeSolution& sol, int k) {
  std::vector<cplx> cum(sol.samples.size(), cplx(0, 0));
  for (size_t i = 0; i + 1 < sol.samples.size(); ++i) {
    double ta = sol.samples[i].t, tb = sol.samples[i + 1].t;
    cplx fa = trace_of_state(sol.samples[i].y, k);
    cplx fb = trace_of_state(sol.samples[i + 1].y, k);
    cplx fm = trace_of_state(sol.at(0.5 * (ta + tb)), k);
    cum[i + 1] = cum[i] + (tb - ta) / 6.0 * (fa + 4.0 * fm + fb);
  }
  return cum;
}

// integral of tr H from 0 to t using precomputed nodes (monotone either way)
cplx trace_integral_to(const OdeSolution& sol, const std::vector<cplx>& cum, int k,
                       double t) {
  const auto& s = sol.samples;
  size_t lo = 0, hi = s.size() - 1;
  bool inc = s.back().t >= s.front().t;
  auto before = [&](double a, double b) { return inc ? a <= b : a >= b; };
  while (hi - lo > 1) {
    size_t mid = (lo + hi) / 2;
    if (before(s[mid].t, t)) lo = mid; else hi = mid;
  }
  double ta = s[lo].t;
  cplx fa = trace_of_state(s[lo].y, k);
  cplx fb = trace_of_state(sol.at(t), k);
  cplx fm = trace_of_state(sol.at(0.5 * (ta + t)), k);
  return cum[lo] + (t - ta) / 6.0 * (fa + 4.0 * fm + fb);
}

void scan_invariants(const OdeSolution& sol, int k, RiccatiSolution& out) {
  for (const auto& smp : sol.samples) {
    MatrixXcd H = unpack_H(smp.y, k);
    out.symmetry_defect =
        std::max(out.symmetry_defect, (H - H.transpose()).cwiseAbs().maxCoeff());
    Eigen::MatrixXd Him = 0.5 * (H.imag() + H.imag().transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(Him);
    double mn = es.eigenvalues().minCoeff();
    out.min_im_eig = std::min(out.min_im_eig, mn);
    if (mn > 0) out.Ctilde = std::max(out.Ctilde, 1.0 / mn);
  }
}

}  // namespace

RiccatiSolution solve_riccati(const GeodesicPath& path, const MatrixXcd& H0,
                              double t_lo, double t_hi, double tol) {
  const ChartedManifold& m = *path.m;
  int k = m.dim() - 1;
  if (H0.rows() != k || H0.cols() != k)
    throw std::invalid_argument("solve_riccati: H0 dimension mismatch");
  if ((H0 - H0.transpose()).cwiseAbs().maxCoeff() > 1e-12)
    throw std::invalid_argument("solve_riccati: H0 not symmetric");
  {
    MatrixXd Him = 0.5 * (H0.imag() + H0.imag().transpose());
    Eigen::SelfAdjointEigenSolver<MatrixXd> es(Him);
    if (es.eigenvalues().minCoeff() <= 0)
      throw std::invalid_argument("solve_riccati: Im H0 must be positive definite");
  }

  RiccatiSolution rs;
  rs.path = &path;
  rs.k = k;
  rs.t_lo = t_lo;
  rs.t_hi = t_hi;
  rs.H0 = H0;

  long kk = long(k) * k;
  VectorXd y0(2 * kk);
  for (int j = 0; j < k; ++j)
    for (int i = 0; i < k; ++i) {
      y0[j * k + i] = H0(i, j).real();
      y0[kk + j * k + i] = H0(i, j).imag();
    }

  OdeRhs rhs = [&m, &path, k, kk](double t, const VectorXd& y, VectorXd& dy) {
    dy.resize(y.size());
    MatrixXcd H = unpack_H(y, k);
    PathSample s = path.at(t);
    MatrixXd K = curvature_block(m, s);
    MatrixXcd Hd = -(H * H) - K.cast<cplx>();
    for (int j = 0; j < k; ++j)
      for (int i = 0; i < k; ++i) {
        dy[j * k + i] = Hd(i, j).real();
        dy[kk + j * k + i] = Hd(i, j).imag();
      }
  };

  OdeOptions oo;
  oo.rtol = tol;
  oo.atol = tol * 1e-2;
  if (t_hi > 0) rs.fw = ode_integrate(rhs, 0.0, y0, t_hi, oo);
  else rs.fw = ode_integrate(rhs, 0.0, y0, 1e-9, oo);
  if (t_lo < 0) rs.bw = ode_integrate(rhs, 0.0, y0, t_lo, oo);

  rs.cumfw = cumulative_trace(rs.fw, k);
  if (!rs.bw.samples.empty()) rs.cumbw = cumulative_trace(rs.bw, k);

  scan_invariants(rs.fw, k, rs);
  if (!rs.bw.samples.empty()) scan_invariants(rs.bw, k, rs);
  if (rs.min_im_eig < 1e-12)
    throw std::runtime_error("solve_riccati: Im H degenerate (integrator failure)");
  return rs;
}

MatrixXcd RiccatiSolution::H(double t) const {
  const OdeSolution& sol = (t < 0 && !bw.samples.empty()) ? bw : fw;
  return unpack_H(sol.at(t), k);
}

cplx RiccatiSolution::a0(double t) const {
  cplx I;
  if (t < 0 && !bw.samples.empty())
    I = trace_integral_to(bw, cumbw, k, t);
  else
    I = trace_integral_to(fw, cumfw, k, t);
  return std::exp(-0.5 * I);
}

MatrixXcd riccati_closed_flat(const MatrixXcd& H0, double t) {
  int k = int(H0.rows());
  return (H0.inverse() + t * MatrixXcd::Identity(k, k)).inverse();
}

MatrixXcd riccati_closed_sphere(const MatrixXcd& H0, double t) {
  int k = int(H0.rows());
  MatrixXcd I = MatrixXcd::Identity(k, k);
  // Y'' + Y = 0 propagation of (Y, Y') with Y0' = H0 Y0
  return (-std::sin(t) * I + std::cos(t) * H0) *
         (std::cos(t) * I + std::sin(t) * H0).inverse();
}

BeamProfile make_beam(const GeodesicPath& path, const BeamOptions& opt) {
  const ChartedManifold& m = *path.m;
  int k = m.dim() - 1;
  if (opt.lambda < 1) throw std::invalid_argument("make_beam: lambda must be >= 1");
  if (opt.delta1 <= 0) throw std::invalid_argument("make_beam: delta1 must be > 0");

  BeamProfile bp;
  bp.m = &m;
  bp.path = &path;
  bp.lambda = opt.lambda;
  bp.delta1 = opt.delta1;
  bp.t_lo = path.t_start();
  bp.t_hi = path.t_end();

  MatrixXcd H0 = opt.H0.size() ? opt.H0
                               : MatrixXcd(cplx(0, 1) * MatrixXcd::Identity(k, k));
  bp.ric = solve_riccati(path, H0, bp.t_lo, bp.t_hi, opt.tol);

  bool diag = true;
  for (int j = 0; j < k && diag; ++j)
    for (int i = 0; i < k; ++i)
      if (i != j && H0(i, j) != cplx(0, 0)) { diag = false; break; }
  bool is_iI = diag;
  for (int j = 0; j < k && is_iI; ++j)
    if (H0(j, j) != cplx(0, 1)) is_iI = false;

  if (m.is_flat() && diag) {
    bp.mode = BeamProfile::Mode::FlatDiag;
    bp.h0diag = H0.diagonal();
  } else if (m.is_sphere_like() && is_iI) {
    bp.mode = BeamProfile::Mode::SphereI;
  } else {
    bp.mode = BeamProfile::Mode::Numeric;
  }
  return bp;
}

double BeamProfile::norm_factor() const {
  return std::pow(lambda, double(m->dim() - 1) / 8.0);
}

MatrixXcd BeamProfile::H(double t) const {
  int k = m->dim() - 1;
  switch (mode) {
    case Mode::FlatDiag: {
      MatrixXcd out = MatrixXcd::Zero(k, k);
      for (int j = 0; j < k; ++j) out(j, j) = h0diag[j] / (1.0 + t * h0diag[j]);
      return out;
    }
    case Mode::SphereI:
      return cplx(0, 1) * MatrixXcd::Identity(k, k);
    default:
      return ric.H(t);
  }
}

cplx BeamProfile::a0(double t) const {
  int k = m->dim() - 1;
  switch (mode) {
    case Mode::FlatDiag: {
      cplx lg = 0;
      for (int j = 0; j < k; ++j) lg += std::log(1.0 + t * h0diag[j]);
      return std::exp(-0.5 * lg);
    }
    case Mode::SphereI:
      return std::exp(cplx(0, -0.5 * double(k) * t));
    default:
      return ric.a0(t);
  }
}

cplx BeamProfile::value_at(double t, const VectorXd& y) const {
  double chi = cut(y.norm() / delta1);
  if (chi == 0.0) return cplx(0, 0);
  int k = m->dim() - 1;
  cplx quad(0, 0);
  if (mode == Mode::FlatDiag) {
    for (int j = 0; j < k; ++j) {
      cplx hj = h0diag[j] / (1.0 + t * h0diag[j]);
      quad += hj * (y[j] * y[j]);
    }
  } else if (mode == Mode::SphereI) {
    quad = cplx(0, 1) * y.squaredNorm();
  } else {
    MatrixXcd Ht = ric.H(t);
    for (int jj = 0; jj < k; ++jj)
      for (int ii = 0; ii < k; ++ii) quad += Ht(ii, jj) * y[ii] * y[jj];
  }
  cplx phase = cplx(t, 0) + 0.5 * quad;
  return norm_factor() * a0(t) * std::exp(cplx(0, lambda) * phase) * chi;
}

cplx BeamProfile::operator()(const VectorXd& x) const {
  auto br = path->fermi_branches(x, tube_radius() * (1.0 + 1e-12), t_lo, t_hi);
  cplx v(0, 0);
  for (const auto& b : br) v += value_at(b.t, b.y);
  return v;
}

double BeamProfile::phase_re(const VectorXd& x) const {
  auto br = path->fermi_branches(x, tube_radius(), t_lo, t_hi);
  if (br.empty()) throw std::domain_error("BeamProfile::phase_re: outside tube");
  const FermiBranch* best = &br[0];
  for (const auto& b : br)
    if (b.y.norm() < best->y.norm()) best = &b;
  int k = m->dim() - 1;
  MatrixXcd Ht = H(best->t);
  cplx quad(0, 0);
  for (int jj = 0; jj < k; ++jj)
    for (int ii = 0; ii < k; ++ii) quad += Ht(ii, jj) * best->y[ii] * best->y[jj];
  return best->t + 0.5 * quad.real();
}

BeamNorms beam_norms(const BeamProfile& bp, const GridSpec& grid, Exec ex) {
  const ChartedManifold& m = *bp.m;
  if (grid.dim() != m.dim())
    throw std::invalid_argument("beam_norms: grid dimension mismatch");
  double width = 1.0 / std::sqrt(bp.lambda);
  for (int a = 0; a < grid.dim(); ++a)
    if (grid.cell(a) > width / 8.0 + 1e-15)
      throw std::invalid_argument("beam_norms: grid under-resolves transverse width");

  long N = grid.total();
  std::vector<double> amp(static_cast<size_t>(N));
  parallel_for(size_t(N), [&](size_t i) {
    VectorXd x = grid.center(i);
    amp[size_t(i)] = std::abs(bp(x));
  }, ex);

  double cv = grid.cell_volume();
  double s2 = 0, s4 = 0, mx = 0;
  for (long i = 0; i < N; ++i) {
    double w = m.vol_density(grid.center(i)) * cv;
    double a2 = amp[size_t(i)] * amp[size_t(i)];
    s2 += a2 * w;
    s4 += a2 * a2 * w;
    mx = std::max(mx, amp[size_t(i)]);
  }
  BeamNorms out;
  out.L2 = std::sqrt(s2);
  out.L4 = std::pow(s4, 0.25);
  out.Linf = mx;
  out.ratio4 = out.L4;
  out.ratio_inf = out.Linf / bp.norm_factor();
  return out;
}

namespace {

// shared FD core: -Lap_g of a complex field on the grid interior, one ghost
// layer sampled beyond every edge, 3-plane rolling window along axis 0
ResidualResult residual_core(const ChartedManifold& m, double lambda,
                             const std::function<cplx(const VectorXd&)>& f,
                             const GridSpec& grid, Exec ex) {
  int n = grid.dim();
  if (n != m.dim() || (n != 2 && n != 3))
    throw std::invalid_argument("residual_norm: grid must match manifold dim (2 or 3)");
  for (int a = 0; a < n; ++a) {
    if (grid.npts[a] < 2)
      throw std::invalid_argument("residual_norm: need >= 2 points per axis");
    if (grid.step(a) > 0.05 / lambda + 1e-15)
      throw std::invalid_argument("residual_norm: grid coarser than (1/20)/lambda");
  }

  long N0 = grid.npts[0];
  long N1 = grid.npts[1];
  long N2 = (n == 3) ? grid.npts[2] : 1;
  long M1 = N1 + 2, M2 = (n == 3) ? N2 + 2 : 1;
  long P = M1 * M2;  // extended plane size
  double h0 = grid.step(0), h1 = grid.step(1), h2 = (n == 3) ? grid.step(2) : 1.0;

  auto node = [&](long e0, long e1, long e2) {
    VectorXd x(n);
    x[0] = grid.lo[0] + double(e0 - 1) * h0;
    x[1] = grid.lo[1] + double(e1 - 1) * h1;
    if (n == 3) x[2] = grid.lo[2] + double(e2 - 1) * h2;
    return x;
  };

  std::vector<cplx> planes[3];
  for (auto& p : planes) p.assign(size_t(P), cplx(0, 0));
  auto fill_plane = [&](long e0, std::vector<cplx>& buf) {
    parallel_for(P, [&](long q) {
      long e1 = q / M2, e2 = q % M2;
      buf[size_t(q)] = f(node(e0, e1, e2));
    }, ex);
  };

  bool flat = m.is_flat();
  double wnode = h0 * h1 * (n == 3 ? h2 : 1.0);
  double sres = 0, sv = 0;

  fill_plane(0, planes[0]);
  fill_plane(1, planes[1]);
  int ia = 0, ib = 1, ic = 2;
  for (long i0 = 0; i0 < N0; ++i0) {
    fill_plane(i0 + 2, planes[ic]);
    const auto &Pm = planes[ia], &Pc = planes[ib], &Pp = planes[ic];
    for (long i1 = 0; i1 < N1; ++i1) {
      for (long i2 = 0; i2 < N2; ++i2) {
        // in 2d the plane is a line: no third-axis ghost offset
        long q = (i1 + 1) * M2 + ((n == 3) ? (i2 + 1) : 0);
        cplx c = Pc[size_t(q)];
        cplx d00 = (Pm[size_t(q)] - 2.0 * c + Pp[size_t(q)]) / (h0 * h0);
        cplx d11 = (Pc[size_t(q - M2)] - 2.0 * c + Pc[size_t(q + M2)]) / (h1 * h1);
        cplx lap;
        if (flat) {
          lap = d00 + d11;
          if (n == 3)
            lap += (Pc[size_t(q - 1)] - 2.0 * c + Pc[size_t(q + 1)]) / (h2 * h2);
        } else {
          VectorXd x = node(i0 + 1, i1 + 1, i2 + 1);
          MatrixXd gi = m.metric_inv(x);
          auto dg = m.metric_deriv(x);
          // b_k = dj(g^{jk}) + g^{jk} dj ln sqrt(det g)
          VectorXd b = VectorXd::Zero(n);
          for (int j = 0; j < n; ++j) {
            MatrixXd dgi = -gi * dg[j] * gi;
            double dlogs = 0.5 * (gi * dg[j]).trace();
            for (int kx = 0; kx < n; ++kx) b[kx] += dgi(j, kx) + gi(j, kx) * dlogs;
          }
          cplx d0 = (Pp[size_t(q)] - Pm[size_t(q)]) / (2 * h0);
          cplx d1 = (Pc[size_t(q + M2)] - Pc[size_t(q - M2)]) / (2 * h1);
          cplx d01 = (Pp[size_t(q + M2)] - Pp[size_t(q - M2)] - Pm[size_t(q + M2)] +
                      Pm[size_t(q - M2)]) /
                     (4 * h0 * h1);
          lap = gi(0, 0) * d00 + gi(1, 1) * d11 + 2.0 * gi(0, 1) * d01 + b[0] * d0 +
                b[1] * d1;
          if (n == 3) {
            cplx d22 = (Pc[size_t(q - 1)] - 2.0 * c + Pc[size_t(q + 1)]) / (h2 * h2);
            cplx d2 = (Pc[size_t(q + 1)] - Pc[size_t(q - 1)]) / (2 * h2);
            cplx d02 = (Pp[size_t(q + 1)] - Pp[size_t(q - 1)] - Pm[size_t(q + 1)] +
                        Pm[size_t(q - 1)]) /
                       (4 * h0 * h2);
            cplx d12 = (Pc[size_t(q + M2 + 1)] - Pc[size_t(q + M2 - 1)] -
                        Pc[size_t(q - M2 + 1)] + Pc[size_t(q - M2 - 1)]) /
                       (4 * h1 * h2);
            lap += gi(2, 2) * d22 + 2.0 * gi(0, 2) * d02 + 2.0 * gi(1, 2) * d12 +
                   b[2] * d2;
          }
        }
        cplx res = -lap - lambda * lambda * c;
        double w = wnode;
        if (!flat) w *= m.vol_density(node(i0 + 1, i1 + 1, i2 + 1));
        sres += std::norm(res) * w;
        sv += std::norm(c) * w;
      }
    }
    int t = ia; ia = ib; ib = ic; ic = t;
  }

  ResidualResult out;
  out.res_l2 = std::sqrt(sres);
  out.v_l2 = std::sqrt(sv);
  out.rho = out.res_l2 / (lambda * lambda * out.v_l2);
  out.points = N0 * N1 * N2;
  return out;
}

}  // namespace

ResidualResult residual_norm(const BeamProfile& bp, const GridSpec& grid, Exec ex) {
  return residual_core(*bp.m, bp.lambda,
                       [&bp](const VectorXd& x) { return bp(x); }, grid, ex);
}

ResidualResult residual_norm_field(const ChartedManifold& m, double lambda,
                                   const std::function<cplx(const VectorXd&)>& f,
                                   const GridSpec& grid, Exec ex) {
  return residual_core(m, lambda, f, grid, ex);
}

}  // namespace lab
