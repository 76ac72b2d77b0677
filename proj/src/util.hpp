#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lab {

using Eigen::MatrixXcd;
using Eigen::MatrixXd;
using Eigen::VectorXcd;
using Eigen::VectorXd;

inline constexpr double PI = 3.141592653589793238462643383279502884;
inline constexpr double INF = std::numeric_limits<double>::infinity();

// Round-trip safe decimal formatting. All file output goes through these so
// reruns with the same config are byte-identical.
inline std::string fmt_g(double v, int prec = 17) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*g", prec, v);
  return buf;
}

inline std::string fmt_f(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

inline bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// Least-squares slope of y against x.
inline double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_slope: need at least two points");
  double mx = 0, my = 0;
  for (size_t i = 0; i < x.size(); ++i) { mx += x[i]; my += y[i]; }
  mx /= double(x.size());
  my /= double(x.size());
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  if (sxx == 0) throw std::invalid_argument("fit_slope: degenerate abscissae");
  return sxy / sxx;
}

// Uniform tensor grid over a box, iterated in row-major order.
struct GridSpec {
  VectorXd lo, hi;
  std::vector<long> npts;  // points per axis

  long total() const {
    long t = 1;
    for (long m : npts) t *= m;
    return t;
  }
  int dim() const { return int(npts.size()); }
  double step(int axis) const {
    return npts[axis] > 1 ? (hi[axis] - lo[axis]) / double(npts[axis] - 1) : 0.0;
  }
  // Cell-centered variant: point k at lo + (k+1/2)*cell
  double cell(int axis) const { return (hi[axis] - lo[axis]) / double(npts[axis]); }

  VectorXd point(long flat) const {
    VectorXd x(dim());
    for (int a = dim() - 1; a >= 0; --a) {
      long k = flat % npts[a];
      flat /= npts[a];
      x[a] = lo[a] + double(k) * step(a);
    }
    return x;
  }
  VectorXd center(long flat) const {
    VectorXd x(dim());
    for (int a = dim() - 1; a >= 0; --a) {
      long k = flat % npts[a];
      flat /= npts[a];
      x[a] = lo[a] + (double(k) + 0.5) * cell(a);
    }
    return x;
  }
  double cell_volume() const {
    double w = 1;
    for (int a = 0; a < dim(); ++a) w *= cell(a);
    return w;
  }
};

}  // namespace lab
