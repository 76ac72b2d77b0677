#pragma once

#include <string>

#include "geodesic.hpp"
#include "jacobi.hpp"
#include "manifold.hpp"
#include "util.hpp"

namespace lab {

// Two geodesics through a common point, with the measured intersection data.
// A witness is numerical evidence at its stated grid resolution, not a proof.
struct GeodesicPairWitness {
  GeodesicPath gamma, eta;
  VectorXd x0;
  double t0 = 0, tau0 = 0;  // parameters of x0 on gamma / eta
  double theta = 0;         // acute angle at x0
  double len_gamma = 0, len_eta = 0;
  double c0 = 0;            // empirical (H1)(iv) constant
  double r = 0;             // ball radius used for c0
  double grid_res = 0;
  double min_offdiag = 0;   // product-grid min distance outside the exclusion
  bool valid = false;
  std::string note;
};

struct HCheckOptions {
  double t_max = INF;        // horizon for closed models
  double res_factor = 4e-3;  // product-grid resolution vs min length
  double exclusion = 0.25;   // parameter-ball around (t0,tau0) skipped
  double theta0 = 0;         // family angle for model proposals (0 -> default)
  long dirs = 0;             // fallback direction count (0 -> 12 / 16)
};

// Searches for an (H)-witness at x0: model-aware proposals first (cylinder
// helix, disc chords, sphere-patch great circles), then a direction-grid
// fallback.  Uniqueness is checked on a product grid.
GeodesicPairWitness check_H_at_point(const ChartedManifold& m, const VectorXd& x0,
                                     const HCheckOptions& opt = {});

// c0 = max over grid pairs with d < r_candidate of max(|t-t0|,|tau-tau0|)/d.
// Nested grids (npts, 2*npts-1, ...) make refinement monotone nondecreasing.
double estimate_c0(const GeodesicPairWitness& w, double r_candidate,
                   long npts = 401);

struct PropD1Result {
  double C = 0;         // min over the grid of d/(|t| sin theta)
  double grid_res = 0;
  double min_d = 0;
};
// d(gamma(t), eta(tau)) >= C |t| sin(theta) over |t|,|tau| <= rho, t != 0.
PropD1Result verify_prop_D1(const ChartedManifold& m, const VectorXd& x0,
                            double theta, double rho, long npts = 201);

struct DetectedIntersection {
  double t = 0, r = 0;  // parameters on gamma_v / gamma_u
  double d = 0;         // refined distance
  VectorXd q;           // chart point on gamma_v
};

struct PerturbReport {
  bool hypothesis_ok = false;  // conjugacy order along gamma_v <= n-3
  int max_order = 0;
  std::vector<DetectedIntersection> intersections;
  VectorXd alpha;                 // g-unit vector orthogonal to v
  std::vector<VectorXd> vns;      // perturbed directions, one per step
  std::vector<double> local_miss; // min dist of the last v_n path to each q_j
  long new_intersections = 0;     // fresh crossings of the last v_n path
  bool success = false;
  std::string note;
};

// Lemma-style direction perturbation: detect the intersections of gamma_v
// with gamma_u, assemble the blocked subspaces (B(t_j)^+ image of the
// transversal direction plus the near-kernel of B), pick alpha maximizing the
// distance to all of them, and return v_n = exp_v(alpha/n) on the direction
// sphere for n in steps.
PerturbReport perturb_direction_avoid(const ChartedManifold& m, const VectorXd& x,
                                      const VectorXd& u, const VectorXd& v,
                                      const std::vector<long>& steps,
                                      double t_max);

struct SurveyReport {
  long points = 0, witnesses = 0, skipped_boundary = 0;
  double coverage = 0;       // witnesses / (points - skipped)
  double T = 0;              // max geodesic length used
  double theta_min = INF;    // min witness angle
  double c0_max = 0;
  double r_used = 0;
  std::vector<GeodesicPairWitness> per_point;
  // cylinder closed-form comparison (set when applicable)
  bool has_d3 = false;
  double theta0_analytic = 0, c0_analytic = 0, T_analytic = 0;
  double d3_min_margin = 0;  // min of d - sin(theta) max(...) over the grid
};

SurveyReport h1_survey(const ChartedManifold& m, long n_points,
                       const HCheckOptions& opt = {});

// Appendix-style cylinder bound: gamma vertical through height s0, helix at
// angle theta anchored at height 0; returns min over the product grid of
// d - sin(theta) * max(|t-s0|, |tau-s0/cos(theta)|).
double cylinder_d3_margin(const ChartedManifold& m, double s0, double theta,
                          long npts = 401);

}  // namespace lab
