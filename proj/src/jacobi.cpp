#include "jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lab {

namespace {

// R^d_{cab} = d_a G^d_{bc} - d_b G^d_{ac} + G^d_{ae} G^e_{bc} - G^d_{be} G^e_{ac}
// assembled by central differences of the Christoffel symbols (custom metrics).
MatrixXd curvature_block_fd(const ChartedManifold& m, const VectorXd& x,
                            const VectorXd& v, const MatrixXd& E) {
  int n = m.dim();
  const double h = 1e-5;
  // dG[a][k] = d_a Gamma^k
  std::vector<std::vector<MatrixXd>> dG(n);
  for (int a = 0; a < n; ++a) {
    VectorXd xp = x, xm = x;
    xp[a] += h;
    xm[a] -= h;
    auto Gp = m.christoffel(xp), Gm = m.christoffel(xm);
    dG[a].resize(n);
    for (int k = 0; k < n; ++k) dG[a][k] = (Gp[k] - Gm[k]) / (2 * h);
  }
  auto G = m.christoffel(x);
  MatrixXd g = m.metric(x);

  // Rv(u)^d = R^d_{cab} v^a u^b v^c  -> curvature operator u -> R(u, v) v
  auto Rvv = [&](const VectorXd& u) {
    VectorXd out = VectorXd::Zero(n);
    for (int d = 0; d < n; ++d) {
      double s = 0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b)
          for (int c = 0; c < n; ++c) {
            double r = dG[a][d](b, c) - dG[b][d](a, c);
            for (int e = 0; e < n; ++e)
              r += G[d](a, e) * G[e](b, c) - G[d](b, e) * G[e](a, c);
            s += r * v[a] * u[b] * v[c];
          }
      out[d] = s;
    }
    return out;
  };

  int k = n - 1;
  MatrixXd K(k, k);
  for (int j = 0; j < k; ++j) {
    VectorXd Rj = Rvv(E.col(j));
    for (int i = 0; i < k; ++i) K(i, j) = E.col(i).dot(g * Rj);
  }
  // symmetrize: FD noise breaks exact symmetry of <R(Ei,v)v,Ej>
  return 0.5 * (K + K.transpose());
}

}  // namespace

MatrixXd curvature_block(const ChartedManifold& m, const PathSample& s) {
  int k = m.dim() - 1;
  if (m.is_flat()) return MatrixXd::Zero(k, k);
  if (m.is_sphere_like()) return MatrixXd::Identity(k, k);
  return curvature_block_fd(m, s.x, s.v, s.E);
}

JacobiSolution solve_jacobi(const GeodesicPath& path, double t0, double t1,
                            double tol) {
  const ChartedManifold& m = *path.m;
  int k = m.dim() - 1;
  JacobiSolution js;
  js.path = &path;
  js.t0 = t0;
  js.t1 = t1;
  js.k = k;

  // y = [vec A, vec A', vec B, vec B'], each k*k, column-major
  long kk = long(k) * k;
  VectorXd y0 = VectorXd::Zero(4 * kk);
  for (int i = 0; i < k; ++i) {
    y0[i * k + i] = 1.0;            // A = I
    y0[3 * kk + i * k + i] = 1.0;   // B' = I
  }

  OdeRhs rhs = [&m, &path, k, kk](double t, const VectorXd& y, VectorXd& dy) {
    dy.resize(y.size());
    PathSample s = path.at(t);
    MatrixXd K = curvature_block(m, s);
    Eigen::Map<const MatrixXd> A(y.data(), k, k), Ad(y.data() + kk, k, k),
        B(y.data() + 2 * kk, k, k), Bd(y.data() + 3 * kk, k, k);
    Eigen::Map<MatrixXd>(dy.data(), k, k) = Ad;
    Eigen::Map<MatrixXd>(dy.data() + kk, k, k) = -K * A;
    Eigen::Map<MatrixXd>(dy.data() + 2 * kk, k, k) = Bd;
    Eigen::Map<MatrixXd>(dy.data() + 3 * kk, k, k) = -K * B;
  };

  OdeOptions oo;
  oo.rtol = tol;
  oo.atol = tol * 1e-2;
  js.sol = ode_integrate(rhs, t0, y0, t1, oo);
  return js;
}

namespace {

MatrixXd block_at(const JacobiSolution& js, double t, int which) {
  int k = js.k;
  long kk = long(k) * k;
  VectorXd y = js.sol.at(t);
  return Eigen::Map<const MatrixXd>(y.data() + which * kk, k, k);
}

}  // namespace

MatrixXd JacobiSolution::A(double t) const { return block_at(*this, t, 0); }
MatrixXd JacobiSolution::B(double t) const { return block_at(*this, t, 2); }
MatrixXd JacobiSolution::Bdot(double t) const { return block_at(*this, t, 3); }

std::vector<ConjugatePoint> conjugate_points(const JacobiSolution& js,
                                             double threshold) {
  std::vector<ConjugatePoint> out;
  double lo = std::min(js.t0, js.t1), hi = std::max(js.t0, js.t1);
  double span = hi - lo;
  if (span <= 0) return out;

  auto smin = [&](double t) {
    Eigen::JacobiSVD<MatrixXd> svd(js.B(t));
    return svd.singularValues()(js.k - 1);
  };
  auto bnorm = [&](double t) { return js.B(t).norm(); };

  const int N = std::max(400, int(span * 64));
  double h = span / N;
  double prev = smin(lo + 1e-12 * span);
  double prev2 = prev;
  for (int i = 1; i <= N; ++i) {
    double t = lo + i * h;
    double cur = smin(t);
    // local minimum at the previous node
    if (i >= 2 && prev <= prev2 && prev <= cur) {
      double a = t - 2 * h, b = t;
      // golden-section refine
      const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
      double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
      double f1 = smin(x1), f2 = smin(x2);
      for (int it = 0; it < 80 && (b - a) > 1e-13 * std::max(1.0, hi - lo); ++it) {
        if (f1 < f2) {
          b = x2; x2 = x1; f2 = f1;
          x1 = b - gr * (b - a); f1 = smin(x1);
        } else {
          a = x1; x1 = x2; f1 = f2;
          x2 = a + gr * (b - a); f2 = smin(x2);
        }
      }
      double tc = 0.5 * (a + b);
      double sc = smin(tc);
      double scale = std::max(1e-12, std::max(bnorm(std::max(lo, tc - 0.5)),
                                              bnorm(std::min(hi, tc + 0.5))));
      if (sc < threshold * scale && std::abs(tc - js.t0) > 1e-9) {
        Eigen::JacobiSVD<MatrixXd> svd(js.B(tc));
        int order = 0;
        for (int j = 0; j < js.k; ++j)
          if (svd.singularValues()(j) < threshold * scale) ++order;
        out.push_back({tc, order, sc});
      }
    }
    prev2 = prev;
    prev = cur;
  }
  std::sort(out.begin(), out.end(),
            [](const ConjugatePoint& a, const ConjugatePoint& b) { return a.t < b.t; });
  // merge refinements that landed on the same root
  std::vector<ConjugatePoint> merged;
  for (const auto& c : out) {
    if (!merged.empty() && std::abs(c.t - merged.back().t) < 1e-7)
      merged.back() = c.sigma < merged.back().sigma ? c : merged.back();
    else
      merged.push_back(c);
  }
  return merged;
}

VectorXd jacobi_field(const JacobiSolution& js, double t, const VectorXd& a) {
  return js.B(t) * a;
}

int order_of_conjugacy(const JacobiSolution& js, double t, double threshold) {
  MatrixXd B = js.B(t);
  Eigen::JacobiSVD<MatrixXd> svd(B);
  double scale = std::max(1e-12, B.norm() + js.Bdot(t).norm());
  int order = 0;
  for (int j = 0; j < js.k; ++j)
    if (svd.singularValues()(j) < threshold * scale) ++order;
  return order;
}

}  // namespace lab
