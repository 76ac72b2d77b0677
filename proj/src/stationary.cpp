#include "stationary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lab {

PhaseModel make_phase(ScalarFn Psi, const MatrixXd& hess0, double r) {
  PhaseModel ph;
  ph.Psi = std::move(Psi);
  ph.hess0 = hess0;
  ph.r = r;
  ph.n = int(hess0.rows());
  if (ph.n < 1 || ph.n > 3) throw std::invalid_argument("make_phase: n must be 1..3");
  if (r <= 0) throw std::invalid_argument("make_phase: r must be > 0");

  VectorXd zero = VectorXd::Zero(ph.n);
  if (std::abs(ph.Psi(zero)) > 1e-10)
    throw std::invalid_argument("make_phase: Psi(0) != 0");
  const double h = 1e-5;
  for (int a = 0; a < ph.n; ++a) {
    VectorXd xp = zero, xm = zero;
    xp[a] += h;
    xm[a] -= h;
    if (std::abs((ph.Psi(xp) - ph.Psi(xm)) / (2 * h)) > 1e-10 + 1e-5 * h)
      throw std::invalid_argument("make_phase: grad Psi(0) != 0");
  }

  Eigen::SelfAdjointEigenSolver<MatrixXd> es(hess0);
  ph.c = es.eigenvalues().minCoeff();
  if (ph.c <= 0) throw std::invalid_argument("make_phase: hess0 not positive definite");

  // cubic-remainder constant over the ball, |x| >= 1e-3 excluded
  const int M = 41;
  GridSpec g;
  g.lo = VectorXd::Constant(ph.n, -r);
  g.hi = VectorXd::Constant(ph.n, r);
  g.npts.assign(size_t(ph.n), M);
  double C = 0;
  for (long i = 0; i < g.total(); ++i) {
    VectorXd x = g.point(i);
    double rr = x.norm();
    if (rr < 1e-3 || rr > r) continue;
    double quad = 0.5 * x.dot(hess0 * x);
    C = std::max(C, std::abs(ph.Psi(x) - quad) / (rr * rr * rr));
  }
  ph.C = C;
  return ph;
}

PrecondResult check_precondition(const PhaseModel& ph) {
  PrecondResult out;
  out.C = ph.C;
  out.c = ph.c;
  out.r = ph.r;
  out.margin = ph.c / 4.0 - ph.C * ph.r;
  out.pass = out.margin >= 0;
  return out;
}

double leading_term(const MatrixXd& hess, double a0) {
  int n = int(hess.rows());
  double det = hess.determinant();
  if (det <= 0)
    throw std::invalid_argument("leading_term: Hessian must be positive definite");
  return std::pow(2.0 * PI, 0.5 * n) / std::sqrt(det) * a0;
}

namespace {

// composite Simpson sum over an odd-sized tensor grid with the ball indicator
double simpson_ball(const PhaseModel& ph, const ScalarFn& a, double lambda,
                    double w, long N, Exec ex) {
  int n = ph.n;
  double h = 2 * w / double(N - 1);
  auto wt1 = [N, h](long k) {
    if (k == 0 || k == N - 1) return h / 3.0;
    return (k % 2 == 1) ? 4.0 * h / 3.0 : 2.0 * h / 3.0;
  };
  long total = 1;
  for (int d = 0; d < n; ++d) total *= N;
  double r2 = ph.r * ph.r;
  double sum = map_sum(total, [&](long flat) {
    long idx[3] = {0, 0, 0};
    long f = flat;
    for (int d = n - 1; d >= 0; --d) {
      idx[d] = f % N;
      f /= N;
    }
    VectorXd x(n);
    double wgt = 1.0;
    for (int d = 0; d < n; ++d) {
      x[d] = -w + double(idx[d]) * h;
      wgt *= wt1(idx[d]);
    }
    if (x.squaredNorm() > r2) return 0.0;
    return wgt * std::exp(-lambda * ph.Psi(x)) * a(x);
  }, ex);
  return sum;
}

}  // namespace

QuadResult oscillatory_integral(const PhaseModel& ph, const ScalarFn& a,
                                double lambda, int ppw, Exec ex) {
  if (ppw < 8)
    throw std::invalid_argument("oscillatory_integral: need >= 8 points per width");
  if (lambda < 1) throw std::invalid_argument("oscillatory_integral: lambda >= 1");

  double width = 1.0 / std::sqrt(lambda);
  // clip the box to the Gaussian scale: Psi >= (c/4)|x|^2 under the
  // precondition, so the discarded tail is exp(-49) relative
  double w = std::min(ph.r, 14.0 * width / std::sqrt(std::min(1.0, ph.c)));
  double h_target = width / double(ppw);
  long m = std::max<long>(2, long(std::ceil(w / h_target / 2.0)));
  long N = 4 * m + 1;  // fine grid; coarse grid (below) stays odd

  QuadResult out;
  double fine = simpson_ball(ph, a, lambda, w, N, ex);
  double coarse = simpson_ball(ph, a, lambda, w, 2 * m + 1, ex);
  double scale = std::pow(lambda, 0.5 * ph.n);
  out.value = scale * fine;
  out.quad_err = scale * std::abs(fine - coarse) / 15.0;
  long total = 1;
  for (int d = 0; d < ph.n; ++d) total *= N;
  out.points = total;
  return out;
}

RateResult remainder_rate(const PhaseModel& ph, const ScalarFn& a,
                          const std::vector<double>& ladder, int ppw, Exec ex) {
  if (ladder.size() < 4)
    throw std::invalid_argument("remainder_rate: need >= 4 rungs");
  for (size_t i = 1; i < ladder.size(); ++i)
    if (ladder[i] <= ladder[i - 1])
      throw std::invalid_argument("remainder_rate: ladder must increase");
  if (ladder.back() < 10.0 * ladder.front())
    throw std::invalid_argument("remainder_rate: ladder must span a decade");

  double lead = leading_term(ph.hess0, a(VectorXd::Zero(ph.n)));
  RateResult out;
  for (double lam : ladder) {
    QuadResult q = oscillatory_integral(ph, a, lam, ppw, ex);
    out.lambdas.push_back(lam);
    out.remainders.push_back(std::abs(q.value - lead));
    out.quad_errs.push_back(q.quad_err);
  }
  for (int i = 0; i < int(ladder.size()); ++i)
    if (out.remainders[size_t(i)] >= 10.0 * out.quad_errs[size_t(i)])
      out.used.push_back(i);

  if (out.used.size() < 2) {
    out.at_floor = true;
    out.slope = 0;
    return out;
  }
  std::vector<double> lx, ly;
  for (int i : out.used) {
    lx.push_back(std::log(out.lambdas[size_t(i)]));
    ly.push_back(std::log(out.remainders[size_t(i)]));
  }
  out.slope = fit_slope(lx, ly);
  return out;
}

}  // namespace lab
