#pragma once

#include "manifold.hpp"
#include "util.hpp"

namespace lab {

// Exact Laplacian spectrum of a model closed manifold, enumerated to mu_max in
// the mu = lambda^2 variable, with multiplicities.
struct SpectrumTable {
  std::string tag;
  int n = 2;
  double mu_max = 0;
  std::vector<std::pair<double, long>> eigs;  // sorted (mu, multiplicity)

  double dist(double mu) const;
  long count_range(double lo, double hi) const;  // inclusive, 1e-9 slack
};

// flat-torus(n) (periods 2 pi) and round-sphere(n) only; others are a
// capability error.
SpectrumTable spectrum(const ChartedManifold& m, double mu_max);

struct ResolventValue {
  double norm = INF;  // 1 / dist(mu, Spec)
  bool eigenvalue_hit = false;
};
ResolventValue resolvent_norm(const SpectrumTable& spec, double mu);

struct WeylCount {
  long count = 0;
  double ratio = 0;  // count * h^n
};
// # of eigenvalues with h^2 mu in [1, 2], counted with multiplicity.
WeylCount weyl_count(const SpectrumTable& spec, double h);

// Dyadic bad set: at level l (mu block [2^l, 2^{l+1})) every eigenvalue in the
// buffered window gets the open mu-interval of radius R_l = delta' 2^{-l(n+eps)/2};
// delta' is calibrated from the measured Weyl constant so that the total
// lambda-measure is <= delta and the resolvent bound constant is C = 1/delta'.
struct BadSet {
  int n = 2;
  double delta = 0, eps = 0;
  double delta_prime = 0;
  double CW = 0;           // max over levels of buffered count * h^n
  double lam_lo = 1, lam_hi = 1;
  int level_lo = 0, level_hi = 0;
  std::vector<std::pair<double, double>> mu_intervals;   // merged, disjoint
  std::vector<std::pair<double, double>> lam_intervals;  // sqrt image
  double measure_mu = 0;   // of the union clipped to [lam_lo^2, lam_hi^2]
  double measure_lam = 0;  // clipped to [lam_lo, lam_hi]

  double C() const { return 1.0 / delta_prime; }
  double radius_at(double mu) const;  // R_l for the level containing mu
  bool contains_lambda(double lam) const;
};

BadSet build_bad_set(const SpectrumTable& spec, double delta, double eps,
                     double lam_lo, double lam_hi);

struct BoundCheck {
  double max_ratio = 0;    // max of norm / lambda^{n+eps}
  double witness_lam = 0;  // argmax
  long violations = 0;     // samples with norm > C lambda^{n+eps} (1e-9 slack)
  long samples = 0;
};
BoundCheck verify_polynomial_bound(const SpectrumTable& spec, const BadSet& bad,
                                   const std::vector<double>& lam_samples);

// First n_samples midpoints of a fixed uniform subdivision of [lo, hi] that
// fall outside the bad set; deterministic.
std::vector<double> sample_outside(const BadSet& bad, long n_samples, double lo,
                                   double hi);

}  // namespace lab
