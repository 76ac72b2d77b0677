// Compares the serial reference path against the OpenMP path for the hot
// kernels and verifies the results agree bitwise (blocked reductions make the
// summation order independent of the thread count). CSV on stdout.

#include <chrono>
#include <cmath>
#include <iostream>

#include "beam.hpp"
#include "geodesic.hpp"
#include "manifold.hpp"
#include "parallel.hpp"
#include "stationary.hpp"
#include "util.hpp"

using namespace lab;

namespace {

double ms_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() -
                                                   t0).count();
}

void report(const std::string& kernel, long n, double serial_ms, double parallel_ms,
            double diff) {
  std::cout << kernel << "," << n << "," << fmt_f(serial_ms, 3) << ","
            << fmt_f(parallel_ms, 3) << ","
            << fmt_f(parallel_ms > 0 ? serial_ms / parallel_ms : 0.0, 3) << ","
            << fmt_g(diff, 17) << "\n";
}

}  // namespace

int main() {
  std::cout << "kernel,n,serial_ms,parallel_ms,speedup,max_abs_diff\n";
  std::cerr << "threads: " << hardware_threads() << "\n";

  {
    const std::size_t n = 4'000'000;
    auto f = [](std::size_t i) { return std::sin(1e-6 * double(i)); };
    auto t0 = std::chrono::steady_clock::now();
    double a = map_sum(n, f, Exec::Serial);
    double ts = ms_since(t0);
    t0 = std::chrono::steady_clock::now();
    double b = map_sum(n, f, Exec::Parallel);
    double tp = ms_since(t0);
    report("map_sum", long(n), ts, tp, std::abs(a - b));
  }

  ChartedManifold m = ChartedManifold::cylinder(1.0);
  VectorXd x0(2), dir(2);
  x0 << PI, 0.5;
  dir << 0, 1;
  GeodesicOptions go;
  go.pad = 0.05;
  GeodesicPath path = integrate_geodesic(m, x0, dir, go);

  {
    double lam = 30;
    BeamOptions bo;
    bo.lambda = lam;
    BeamProfile bp = make_beam(path, bo);
    GridSpec grid;
    grid.lo = m.box_lo();
    grid.hi = m.box_hi();
    for (int ax = 0; ax < 2; ++ax) {
      double len = grid.hi[ax] - grid.lo[ax];
      grid.npts.push_back(long(std::ceil(len / (std::pow(lam, -0.5) / 8.0))));
    }
    auto t0 = std::chrono::steady_clock::now();
    BeamNorms a = beam_norms(bp, grid, Exec::Serial);
    double ts = ms_since(t0);
    t0 = std::chrono::steady_clock::now();
    BeamNorms b = beam_norms(bp, grid, Exec::Parallel);
    double tp = ms_since(t0);
    double diff = std::max({std::abs(a.L2 - b.L2), std::abs(a.L4 - b.L4),
                            std::abs(a.Linf - b.Linf)});
    report("beam_norms", grid.total(), ts, tp, diff);
  }

  {
    double lam = 20;
    BeamOptions bo;
    bo.lambda = lam;
    BeamProfile bp = make_beam(path, bo);
    GridSpec grid;
    grid.lo = m.box_lo();
    grid.hi = m.box_hi();
    for (int ax = 0; ax < 2; ++ax) {
      double len = grid.hi[ax] - grid.lo[ax];
      grid.npts.push_back(long(std::ceil(len / (0.05 / lam))) + 1);
    }
    auto t0 = std::chrono::steady_clock::now();
    ResidualResult a = residual_norm(bp, grid, Exec::Serial);
    double ts = ms_since(t0);
    t0 = std::chrono::steady_clock::now();
    ResidualResult b = residual_norm(bp, grid, Exec::Parallel);
    double tp = ms_since(t0);
    double diff = std::max(std::abs(a.res_l2 - b.res_l2), std::abs(a.v_l2 - b.v_l2));
    report("residual_norm", grid.total(), ts, tp, diff);
  }

  {
    PhaseModel ph = make_phase(
        [](const VectorXd& x) { return 0.5 * x.squaredNorm(); },
        MatrixXd::Identity(2, 2), 1.0);
    ScalarFn amp = [](const VectorXd& x) {
      double s = x.norm();
      return s < 1 ? std::exp(-s * s / (1 - s * s)) : 0.0;
    };
    double lam = 2000;
    auto t0 = std::chrono::steady_clock::now();
    QuadResult a = oscillatory_integral(ph, amp, lam, 16, Exec::Serial);
    double ts = ms_since(t0);
    t0 = std::chrono::steady_clock::now();
    QuadResult b = oscillatory_integral(ph, amp, lam, 16, Exec::Parallel);
    double tp = ms_since(t0);
    report("oscillatory_integral", a.points, ts, tp, std::abs(a.value - b.value));
  }

  return 0;
}
