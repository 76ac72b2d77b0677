#pragma once

#include <functional>

#include "manifold.hpp"
#include "util.hpp"

namespace lab {

// Grid sampling of a scalar function with a Holder exponent attached.  The
// seminorm estimate is a lower bound for the true supremum: all pairs when the
// grid is small, otherwise stratified random pairs (fixed seed) plus every
// nearest-neighbor pair.
struct HolderFunction {
  GridSpec grid;
  std::vector<double> vals;       // at grid.point(i)
  double alpha = 0.5;
  const ChartedManifold* m = nullptr;  // distances; chart-Euclidean when null

  double operator[](long i) const { return vals[size_t(i)]; }
};

HolderFunction sample_function(const GridSpec& grid,
                               const std::function<double(const VectorXd&)>& f,
                               double alpha, const ChartedManifold* m = nullptr);

struct HolderStats {
  double sup = 0;
  double semi = 0;
  double norm = 0;
  long pairs = 0;
  bool exhaustive = false;
};

// all pairs when total <= pair_cutoff (default 2000 points)
HolderStats holder_norm(const HolderFunction& f, long pair_cutoff = 2000);

// N(p) = norm/sup; 0 for p identically zero.
double frequency_function(const HolderFunction& p);

// Extension by zero onto an enclosing aligned grid.  Requires the boundary
// shell of the original samples to vanish (max |f| on the shell <= 1e-8).
HolderFunction extend_by_zero(const HolderFunction& f, const GridSpec& bigger);

}  // namespace lab
