#include "spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

namespace lab {

double SpectrumTable::dist(double mu) const {
  if (eigs.empty()) return INF;
  auto it = std::lower_bound(eigs.begin(), eigs.end(), mu,
                             [](const auto& p, double v) { return p.first < v; });
  double d = INF;
  if (it != eigs.end()) d = std::min(d, std::abs(it->first - mu));
  if (it != eigs.begin()) d = std::min(d, std::abs(std::prev(it)->first - mu));
  return d;
}

long SpectrumTable::count_range(double lo, double hi) const {
  long c = 0;
  for (const auto& [mu, mult] : eigs)
    if (mu >= lo - 1e-9 && mu <= hi + 1e-9) c += mult;
  return c;
}

SpectrumTable spectrum(const ChartedManifold& m, double mu_max) {
  if (mu_max < 0) throw std::invalid_argument("spectrum: mu_max must be >= 0");
  SpectrumTable t;
  t.n = m.dim();
  t.mu_max = mu_max;

  if (m.model() == Model::FlatTorus) {
    t.tag = "flat-torus";
    int n = m.dim();
    // periods 2 pi: mu = |k|^2 over the integer lattice
    long kmax = long(std::floor(std::sqrt(mu_max)));
    std::map<double, long> acc;
    long k0lo = (n >= 1) ? -kmax : 0;
    for (long k0 = k0lo; k0 <= kmax; ++k0) {
      long r0 = k0 * k0;
      if (r0 > mu_max) continue;
      if (n == 1) { ++acc[double(r0)]; continue; }
      for (long k1 = -kmax; k1 <= kmax; ++k1) {
        long r1 = r0 + k1 * k1;
        if (r1 > mu_max) continue;
        if (n == 2) { ++acc[double(r1)]; continue; }
        for (long k2 = -kmax; k2 <= kmax; ++k2) {
          long r2 = r1 + k2 * k2;
          if (r2 <= mu_max) ++acc[double(r2)];
        }
      }
    }
    for (const auto& [mu, mult] : acc) t.eigs.emplace_back(mu, mult);
    return t;
  }

  if (m.model() == Model::RoundSphere) {
    t.tag = "round-sphere";
    int n = m.dim();
    for (long l = 0;; ++l) {
      double mu = double(l) * double(l + n - 1);
      if (mu > mu_max) break;
      long mult;
      if (n == 2) mult = 2 * l + 1;
      else if (n == 3) mult = (l + 1) * (l + 1);
      else mult = 1;  // n = 1 circle handled as torus elsewhere
      t.eigs.emplace_back(mu, mult);
    }
    return t;
  }

  throw std::invalid_argument(
      "spectrum: exact spectra available for flat-torus and round-sphere only");
}

ResolventValue resolvent_norm(const SpectrumTable& spec, double mu) {
  ResolventValue out;
  double d = spec.dist(mu);
  if (d <= 1e-12 * std::max(1.0, std::abs(mu))) {
    out.eigenvalue_hit = true;
    out.norm = INF;
    return out;
  }
  out.norm = 1.0 / d;
  return out;
}

WeylCount weyl_count(const SpectrumTable& spec, double h) {
  if (h <= 0) throw std::invalid_argument("weyl_count: h must be > 0");
  double lo = 1.0 / (h * h), hi = 2.0 / (h * h);
  if (spec.mu_max < hi)
    throw std::out_of_range("weyl_count: spectrum table does not reach 2/h^2");
  WeylCount out;
  out.count = spec.count_range(lo, hi);
  out.ratio = double(out.count) * std::pow(h, spec.n);
  return out;
}

namespace {

double level_radius(int l, int n, double eps, double dp) {
  return dp * std::pow(2.0, -0.5 * double(l) * (double(n) + eps));
}

// buffered per-level Weyl constant: counts in [2^l - buf_l, 2^{l+1} + buf_l]
double weyl_constant(const SpectrumTable& spec, int l_lo, int l_hi, double eps,
                     double buf_dp) {
  double cw = 0;
  for (int l = l_lo; l <= l_hi; ++l) {
    double b = buf_dp > 0 ? level_radius(l, spec.n, eps, buf_dp) : 0.0;
    double blo = std::pow(2.0, l) - b, bhi = std::pow(2.0, l + 1) + b;
    long cnt = spec.count_range(blo, bhi);
    cw = std::max(cw, double(cnt) * std::pow(2.0, -0.5 * double(l) * spec.n));
  }
  return cw;
}

}  // namespace

BadSet build_bad_set(const SpectrumTable& spec, double delta, double eps,
                     double lam_lo, double lam_hi) {
  if (delta <= 0 || eps <= 0)
    throw std::invalid_argument("build_bad_set: delta, eps must be > 0");
  if (lam_lo < 1 || lam_hi <= lam_lo)
    throw std::invalid_argument("build_bad_set: need 1 <= lam_lo < lam_hi");

  BadSet bs;
  bs.n = spec.n;
  bs.delta = delta;
  bs.eps = eps;
  bs.lam_lo = lam_lo;
  bs.lam_hi = lam_hi;
  bs.level_lo = int(std::floor(std::log2(lam_lo * lam_lo)));
  bs.level_hi = int(std::floor(std::log2(lam_hi * lam_hi * (1 + 1e-12))));

  double series = 1.0 / (1.0 - std::pow(2.0, -0.5 * eps));  // sum 2^{-l eps/2}

  // pass 1: unbuffered Weyl constant fixes a provisional delta'
  double cw0 = weyl_constant(spec, bs.level_lo, bs.level_hi, eps, 0.0);
  if (cw0 == 0) {
    // empty spectrum window: J is empty, constant defaults to 1/delta
    bs.delta_prime = delta;
    bs.CW = 0;
    return bs;
  }
  double dp0 = delta / (series * cw0);
  // pass 2: buffer with 2*dp0 (final delta' can only shrink as counts grow)
  bs.CW = weyl_constant(spec, bs.level_lo, bs.level_hi, eps, 2.0 * dp0);
  bs.delta_prime = delta / (series * bs.CW);
  if (bs.delta_prime > 2.0 * dp0)
    throw std::logic_error("build_bad_set: buffer fixpoint failed");

  double top_buf = level_radius(bs.level_lo, spec.n, eps, bs.delta_prime);
  if (spec.mu_max < std::pow(2.0, bs.level_hi + 1) + top_buf)
    throw std::out_of_range("build_bad_set: spectrum table too short for range");

  // assemble per-level clipped intervals from the buffered windows
  std::vector<std::pair<double, double>> raw;
  for (int l = bs.level_lo; l <= bs.level_hi; ++l) {
    double R = level_radius(l, spec.n, eps, bs.delta_prime);
    double blo = std::pow(2.0, l), bhi = std::pow(2.0, l + 1);
    for (const auto& [mu, mult] : spec.eigs) {
      (void)mult;
      if (mu < blo - R || mu > bhi + R) continue;
      double a = std::max(mu - R, blo), b = std::min(mu + R, bhi);
      if (b > a) raw.emplace_back(a, b);
    }
  }
  std::sort(raw.begin(), raw.end());
  for (const auto& iv : raw) {
    if (!bs.mu_intervals.empty() && iv.first <= bs.mu_intervals.back().second)
      bs.mu_intervals.back().second =
          std::max(bs.mu_intervals.back().second, iv.second);
    else
      bs.mu_intervals.push_back(iv);
  }

  double mlo = lam_lo * lam_lo, mhi = lam_hi * lam_hi;
  for (const auto& [a, b] : bs.mu_intervals) {
    bs.measure_mu += std::max(0.0, std::min(b, mhi) - std::max(a, mlo));
    double sa = std::sqrt(a), sb = std::sqrt(b);
    bs.lam_intervals.emplace_back(sa, sb);
    bs.measure_lam += std::max(0.0, std::min(sb, lam_hi) - std::max(sa, lam_lo));
  }
  return bs;
}

double BadSet::radius_at(double mu) const {
  int l = int(std::floor(std::log2(std::max(1.0, mu))));
  return level_radius(l, n, eps, delta_prime);
}

bool BadSet::contains_lambda(double lam) const {
  auto it = std::upper_bound(
      lam_intervals.begin(), lam_intervals.end(), lam,
      [](double v, const auto& p) { return v < p.second; });
  return it != lam_intervals.end() && it->first < lam && lam < it->second;
}

BoundCheck verify_polynomial_bound(const SpectrumTable& spec, const BadSet& bad,
                                   const std::vector<double>& lam_samples) {
  BoundCheck out;
  double C = bad.C();
  for (double lam : lam_samples) {
    if (bad.contains_lambda(lam))
      throw std::invalid_argument("verify_polynomial_bound: sample inside J");
    ResolventValue rv = resolvent_norm(spec, lam * lam);
    if (rv.eigenvalue_hit)
      throw std::invalid_argument("verify_polynomial_bound: sample hits spectrum");
    double bound = std::pow(lam, double(spec.n) + bad.eps);
    double ratio = rv.norm / bound;
    if (ratio > out.max_ratio) {
      out.max_ratio = ratio;
      out.witness_lam = lam;
    }
    if (rv.norm > C * bound * (1 + 1e-9)) ++out.violations;
    ++out.samples;
  }
  return out;
}

std::vector<double> sample_outside(const BadSet& bad, long n_samples, double lo,
                                   double hi) {
  std::vector<double> out;
  const long M = 4096;
  for (long k = 0; k < M && long(out.size()) < n_samples; ++k) {
    double lam = lo + (double(k) + 0.5) * (hi - lo) / double(M);
    if (!bad.contains_lambda(lam)) out.push_back(lam);
  }
  if (long(out.size()) < n_samples)
    throw std::runtime_error("sample_outside: could not find enough samples");
  return out;
}

}  // namespace lab
