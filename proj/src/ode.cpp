#include "ode.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace lab {

namespace {

// Dormand-Prince 4(5) tableau (FSAL).
const double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
const double a21 = 1.0 / 5;
const double a31 = 3.0 / 40, a32 = 9.0 / 40;
const double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
const double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
             a54 = -212.0 / 729;
const double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
             a64 = 49.0 / 176, a65 = -5103.0 / 18656;
const double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
             b5 = -2187.0 / 6784, b6 = 11.0 / 84;
// 4th-order weights for the error estimate.
const double e1 = 5179.0 / 57600, e3 = 7571.0 / 16695, e4 = 393.0 / 640,
             e5 = -92097.0 / 339200, e6 = 187.0 / 2100, e7 = 1.0 / 40;

VectorXd hermite(double t, const OdeSample& l, const OdeSample& r) {
  double h = r.t - l.t;
  if (h == 0) return l.y;
  double s = (t - l.t) / h;
  double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  double h10 = s * (1 - s) * (1 - s);
  double h01 = s * s * (3 - 2 * s);
  double h11 = s * s * (s - 1);
  return h00 * l.y + (h10 * h) * l.f + h01 * r.y + (h11 * h) * r.f;
}

VectorXd hermite_deriv(double t, const OdeSample& l, const OdeSample& r) {
  double h = r.t - l.t;
  if (h == 0) return l.f;
  double s = (t - l.t) / h;
  double d00 = (6 * s * s - 6 * s) / h;
  double d10 = 3 * s * s - 4 * s + 1;
  double d01 = (6 * s - 6 * s * s) / h;
  double d11 = 3 * s * s - 2 * s;
  return d00 * l.y + d10 * l.f + d01 * r.y + d11 * r.f;
}

}  // namespace

VectorXd OdeSolution::at(double t) const {
  if (samples.empty()) throw std::logic_error("empty ode solution");
  bool fwd = samples.back().t >= samples.front().t;
  double tl = fwd ? samples.front().t : samples.back().t;
  double th = fwd ? samples.back().t : samples.front().t;
  t = std::clamp(t, tl, th);
  // binary search over monotone sample times
  size_t lo = 0, hi = samples.size() - 1;
  while (hi - lo > 1) {
    size_t mid = (lo + hi) / 2;
    bool left = fwd ? (samples[mid].t <= t) : (samples[mid].t >= t);
    if (left) lo = mid; else hi = mid;
  }
  return hermite(t, samples[lo], samples[hi]);
}

VectorXd OdeSolution::deriv_at(double t) const {
  if (samples.empty()) throw std::logic_error("empty ode solution");
  bool fwd = samples.back().t >= samples.front().t;
  double tl = fwd ? samples.front().t : samples.back().t;
  double th = fwd ? samples.back().t : samples.front().t;
  t = std::clamp(t, tl, th);
  size_t lo = 0, hi = samples.size() - 1;
  while (hi - lo > 1) {
    size_t mid = (lo + hi) / 2;
    bool left = fwd ? (samples[mid].t <= t) : (samples[mid].t >= t);
    if (left) lo = mid; else hi = mid;
  }
  return hermite_deriv(t, samples[lo], samples[hi]);
}

OdeSolution ode_integrate(const OdeRhs& rhs, double t0, VectorXd y0, double t1,
                          const OdeOptions& opt, const std::vector<OdeEvent>& events) {
  OdeSolution sol;
  const int dir = (t1 >= t0) ? 1 : -1;
  const long n = y0.size();

  VectorXd f0(n);
  rhs(t0, y0, f0);
  sol.samples.push_back({t0, y0, f0});

  std::vector<double> ev_sign(events.size());
  for (size_t i = 0; i < events.size(); ++i) ev_sign[i] = events[i](t0, y0);

  if (t0 == t1) { sol.reached_end = true; return sol; }

  double h = dir * std::min(opt.h0, std::abs(t1 - t0));
  double t = t0;
  VectorXd y = y0, f = f0;
  VectorXd k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), y5(n), ytmp(n), errv(n);

  for (long step = 0; step < opt.max_steps; ++step) {
    if (dir * (t + h - t1) > 0) h = t1 - t;
    if (std::abs(h) > opt.hmax) h = dir * opt.hmax;

    ytmp = y + h * (a21 * f);
    rhs(t + c2 * h, ytmp, k2);
    ytmp = y + h * (a31 * f + a32 * k2);
    rhs(t + c3 * h, ytmp, k3);
    ytmp = y + h * (a41 * f + a42 * k2 + a43 * k3);
    rhs(t + c4 * h, ytmp, k4);
    ytmp = y + h * (a51 * f + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * h, ytmp, k5);
    ytmp = y + h * (a61 * f + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + h, ytmp, k6);
    y5 = y + h * (b1 * f + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(t + h, y5, k7);  // FSAL

    errv = y5 - (y + h * (e1 * f + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
    double err = 0;
    for (long i = 0; i < n; ++i) {
      double sc = opt.atol + opt.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
      err = std::max(err, std::abs(errv[i]) / sc);
    }

    if (err <= 1.0) {
      // accepted
      double tn = t + h;
      OdeSample prev = sol.samples.back();
      OdeSample cur{tn, y5, k7};

      // event check on [t, tn] via dense output
      int hit = -1;
      double thit = tn;
      for (size_t i = 0; i < events.size(); ++i) {
        double v1 = events[i](tn, y5);
        if (ev_sign[i] == 0) { ev_sign[i] = v1; continue; }
        if (v1 == 0 || (v1 > 0) != (ev_sign[i] > 0)) {
          // bisect inside the step
          double ta = t, tb = tn, va = ev_sign[i];
          // |tb-ta|: the bracket is reversed when integrating backward
          while (std::abs(tb - ta) > opt.event_tol && ta != tb) {
            double tm = 0.5 * (ta + tb);
            VectorXd ym = hermite(tm, prev, cur);
            double vm = events[i](tm, ym);
            if (vm == 0) { ta = tb = tm; break; }
            if ((vm > 0) == (va > 0)) { ta = tm; va = vm; }
            else tb = tm;
          }
          double tc = 0.5 * (ta + tb);
          if (dir * (tc - thit) < 0 || hit < 0) { thit = tc; hit = int(i); }
        }
        ev_sign[i] = v1;
      }

      if (hit >= 0) {
        VectorXd yh = hermite(thit, prev, cur);
        VectorXd fh(n);
        rhs(thit, yh, fh);
        sol.samples.push_back({thit, yh, fh});
        sol.event_hit = true;
        sol.event_index = hit;
        sol.event_time = thit;
        sol.event_state = yh;
        return sol;
      }

      sol.samples.push_back(cur);
      t = tn;
      y.swap(y5);
      f.swap(k7);
      if (t == t1 || dir * (t1 - t) <= 0) { sol.reached_end = true; return sol; }
    }

    // PI-free classic step size update
    double fac = (err > 0) ? 0.9 * std::pow(err, -0.2) : 5.0;
    fac = std::clamp(fac, 0.2, 5.0);
    h *= fac;
    if (std::abs(h) < 1e-15 * std::max(1.0, std::abs(t)))
      throw std::runtime_error("ode_integrate: step size underflow");
  }
  throw std::runtime_error("ode_integrate: max step count exceeded");
}

}  // namespace lab
