#include "holder.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

namespace lab {

HolderFunction sample_function(const GridSpec& grid,
                               const std::function<double(const VectorXd&)>& f,
                               double alpha, const ChartedManifold* m) {
  if (alpha <= 0 || alpha >= 1)
    throw std::invalid_argument("sample_function: alpha must be in (0,1)");
  HolderFunction h;
  h.grid = grid;
  h.alpha = alpha;
  h.m = m;
  long N = grid.total();
  h.vals.resize(size_t(N));
  for (long i = 0; i < N; ++i) h.vals[size_t(i)] = f(grid.point(i));
  return h;
}

namespace {

double pair_dist(const HolderFunction& f, long i, long j) {
  VectorXd a = f.grid.point(i), b = f.grid.point(j);
  if (f.m) return f.m->distance(a, b);
  return (a - b).norm();
}

// decompose flat index into per-axis indices
void unflatten(const GridSpec& g, long flat, long* idx) {
  for (int a = g.dim() - 1; a >= 0; --a) {
    idx[a] = flat % g.npts[a];
    flat /= g.npts[a];
  }
}

long flatten(const GridSpec& g, const long* idx) {
  long f = 0;
  for (int a = 0; a < g.dim(); ++a) f = f * g.npts[a] + idx[a];
  return f;
}

}  // namespace

HolderStats holder_norm(const HolderFunction& f, long pair_cutoff) {
  long N = long(f.vals.size());
  if (N < 2) throw std::invalid_argument("holder_norm: need at least two samples");

  HolderStats st;
  for (double v : f.vals) st.sup = std::max(st.sup, std::abs(v));

  auto consider = [&](long i, long j) {
    double d = pair_dist(f, i, j);
    if (d <= 0) return;
    double q = std::abs(f.vals[size_t(i)] - f.vals[size_t(j)]) / std::pow(d, f.alpha);
    st.semi = std::max(st.semi, q);
    ++st.pairs;
  };

  if (N <= pair_cutoff) {
    st.exhaustive = true;
    for (long i = 0; i < N; ++i)
      for (long j = i + 1; j < N; ++j) consider(i, j);
  } else {
    // every nearest-neighbor pair along each axis
    int dim = f.grid.dim();
    long idx[4] = {0, 0, 0, 0};
    for (long i = 0; i < N; ++i) {
      unflatten(f.grid, i, idx);
      for (int a = 0; a < dim; ++a) {
        if (idx[a] + 1 >= f.grid.npts[a]) continue;
        ++idx[a];
        consider(i, flatten(f.grid, idx));
        --idx[a];
      }
    }
    // stratified random long-range pairs: fixed seed, every point gets the
    // same number of partners, indices by 64-bit modulo (bias ~2^-40)
    std::mt19937_64 rng(0x5eed5eed5eedULL);
    long per = std::max<long>(1, 4000000 / N);
    for (long i = 0; i < N; ++i)
      for (long s = 0; s < per; ++s) {
        long j = long(rng() % uint64_t(N));
        if (j != i) consider(i, j);
      }
  }
  st.norm = st.sup + st.semi;
  return st;
}

double frequency_function(const HolderFunction& p) {
  HolderStats st = holder_norm(p);
  if (st.sup == 0) return 0.0;
  return st.norm / st.sup;
}

HolderFunction extend_by_zero(const HolderFunction& f, const GridSpec& bigger) {
  int dim = f.grid.dim();
  if (bigger.dim() != dim)
    throw std::invalid_argument("extend_by_zero: dimension mismatch");

  // grids must be aligned: same step, integer offset
  long off[4] = {0, 0, 0, 0};
  for (int a = 0; a < dim; ++a) {
    double hs = f.grid.step(a), hb = bigger.step(a);
    if (std::abs(hs - hb) > 1e-12 * std::max(1.0, std::abs(hs)))
      throw std::invalid_argument("extend_by_zero: grid steps differ");
    double o = (f.grid.lo[a] - bigger.lo[a]) / hs;
    off[a] = std::lround(o);
    if (std::abs(o - double(off[a])) > 1e-9 || off[a] < 0 ||
        off[a] + f.grid.npts[a] > bigger.npts[a])
      throw std::invalid_argument("extend_by_zero: grids not aligned/nested");
  }

  // boundary shell of the original grid must vanish
  long N = long(f.vals.size());
  long idx[4];
  for (long i = 0; i < N; ++i) {
    unflatten(f.grid, i, idx);
    bool shell = false;
    for (int a = 0; a < dim; ++a)
      if (idx[a] == 0 || idx[a] == f.grid.npts[a] - 1) shell = true;
    if (shell && std::abs(f.vals[size_t(i)]) > 1e-8)
      throw std::invalid_argument("extend_by_zero: nonzero boundary trace");
  }

  HolderFunction out;
  out.grid = bigger;
  out.alpha = f.alpha;
  out.m = f.m;
  out.vals.assign(size_t(bigger.total()), 0.0);
  long bidx[4];
  for (long i = 0; i < N; ++i) {
    unflatten(f.grid, i, idx);
    for (int a = 0; a < dim; ++a) bidx[a] = idx[a] + off[a];
    out.vals[size_t(flatten(bigger, bidx))] = f.vals[size_t(i)];
  }
  return out;
}

}  // namespace lab
