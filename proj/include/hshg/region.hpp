#pragma once

// Regions and quadrature.
//
// All volume averages use one rule: a cell belongs to a region iff its centre
// does, and the per-cell value of |f|^2 is the mean over the samples of f on
// the cell's closure (corners for node fields, the cell's own sample for
// fully staggered fields, the bounding faces/edges in between). Oracles in the
// test suite replicate exactly this rule.

#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "hshg/common.hpp"
#include "hshg/grid.hpp"

namespace hshg {

struct Region {
  enum class Kind { Ball, HalfBallPos, HalfBallNeg, Annulus, Box } kind = Kind::Ball;
  double radius = 0.0;
  double inner_radius = 0.0;                  // Annulus only
  std::array<double, 3> lo{0.0, 0.0, 0.0};    // Box only (physical units)
  std::array<double, 3> hi{0.0, 0.0, 0.0};

  static Region ball(double r) { return {Kind::Ball, r, 0.0, {}, {}}; }
  static Region half_ball_pos(double r) { return {Kind::HalfBallPos, r, 0.0, {}, {}}; }
  static Region half_ball_neg(double r) { return {Kind::HalfBallNeg, r, 0.0, {}, {}}; }
  static Region annulus(double r_in, double r_out) { return {Kind::Annulus, r_out, r_in, {}, {}}; }
  static Region box(std::array<double, 3> lo, std::array<double, 3> hi) {
    return {Kind::Box, 0.0, 0.0, lo, hi};
  }

  // x: displacement from the physical origin, already min-imaged on periodic
  // axes; the last of `dim` axes is the vertical one for half-ball kinds.
  bool contains(const std::array<double, 3>& x, int dim) const {
    double r2 = 0.0;
    for (int a = 0; a < dim; ++a) r2 += x[static_cast<std::size_t>(a)] * x[static_cast<std::size_t>(a)];
    const double xd = x[static_cast<std::size_t>(dim - 1)];
    switch (kind) {
      case Kind::Ball:
        return r2 < radius * radius;
      case Kind::HalfBallPos:
        return r2 < radius * radius && xd > 0.0;
      case Kind::HalfBallNeg:
        return r2 < radius * radius && xd < 0.0;
      case Kind::Annulus:
        return r2 >= inner_radius * inner_radius && r2 < radius * radius;
      case Kind::Box:
        for (int a = 0; a < dim; ++a) {
          const auto s = static_cast<std::size_t>(a);
          if (x[s] < lo[s] || x[s] >= hi[s]) return false;
        }
        return true;
    }
    return false;
  }
};

// Calls fn(cell_index_triple) for every cell whose centre lies in the region.
template <typename Fn>
void for_each_cell(const GridSpec& grid, const Region& region, Fn&& fn) {
  const int d = grid.dim;
  std::array<int, 3> n{1, 1, 1};
  for (int a = 0; a < d; ++a) n[static_cast<std::size_t>(a)] = grid.cells[static_cast<std::size_t>(a)];
  std::array<int, 3> c{0, 0, 0};
  for (c[2] = 0; c[2] < n[2]; ++c[2])
    for (c[1] = 0; c[1] < n[1]; ++c[1])
      for (c[0] = 0; c[0] < n[0]; ++c[0]) {
        std::array<double, 3> x{0.0, 0.0, 0.0};
        for (int a = 0; a < d; ++a) {
          const auto s = static_cast<std::size_t>(a);
          double xa = (c[s] + 0.5 - grid.origin[s]) * grid.spacing;
          if (grid.periodic(a)) xa = std::remainder(xa, grid.width(a));
          x[s] = xa;
        }
        if (region.contains(x, d)) fn(c);
      }
}

inline std::int64_t region_cell_count(const GridSpec& grid, const Region& region) {
  std::int64_t n = 0;
  for_each_cell(grid, region, [&](const std::array<int, 3>&) { ++n; });
  return n;
}

// Mean over the closure samples of cell c of fa(sample)*fb(sample), where the
// closure spans {c_a, c_a+1} on integer axes and {c_a} on half axes.
inline double cell_product_mean(const LatticeField& fa, const LatticeField& fb,
                                const std::array<int, 3>& c) {
  const int d = fa.grid.dim;
  int combos = 1;
  for (int a = 0; a < d; ++a)
    if (!fa.half[static_cast<std::size_t>(a)]) combos *= 2;
  double sum = 0.0;
  for (int mask = 0; mask < combos; ++mask) {
    std::array<int, 3> i = c;
    int bit = 0;
    for (int a = 0; a < d; ++a) {
      if (!fa.half[static_cast<std::size_t>(a)]) {
        if (mask & (1 << bit)) i[static_cast<std::size_t>(a)] += 1;
        ++bit;
      }
    }
    const std::int64_t idx = fa.flat_wrap(i);
    sum += fa.v[static_cast<std::size_t>(idx)] * fb.v[static_cast<std::size_t>(idx)];
  }
  return sum / combos;
}

inline double cell_square_mean(const LatticeField& f, const std::array<int, 3>& c) {
  return cell_product_mean(f, f, c);
}

// Mean over the closure samples of cell c of f (linear, not squared).
inline double cell_mean(const LatticeField& f, const std::array<int, 3>& c) {
  const int d = f.grid.dim;
  int combos = 1;
  for (int a = 0; a < d; ++a)
    if (!f.half[static_cast<std::size_t>(a)]) combos *= 2;
  double sum = 0.0;
  for (int mask = 0; mask < combos; ++mask) {
    std::array<int, 3> i = c;
    int bit = 0;
    for (int a = 0; a < d; ++a) {
      if (!f.half[static_cast<std::size_t>(a)]) {
        if (mask & (1 << bit)) i[static_cast<std::size_t>(a)] += 1;
        ++bit;
      }
    }
    sum += f.v[static_cast<std::size_t>(f.flat_wrap(i))];
  }
  return sum / combos;
}

// Linear region average of a scalar lattice field, same cell rule as quad_avg.
inline double region_mean(const LatticeField& f, const Region& region) {
  std::int64_t cells = 0;
  double sum = 0.0;
  for_each_cell(f.grid, region, [&](const std::array<int, 3>& c) {
    ++cells;
    sum += cell_mean(f, c);
  });
  if (cells == 0) throw InvariantError("region_mean: region contains no cell centres");
  return sum / static_cast<double>(cells);
}

// Root mean square of a scalar lattice field over a region:
// sqrt( (1/|region|) * sum_cells cell_mean(|f|^2) * vol ).
inline double quad_avg(const LatticeField& f, const Region& region) {
  std::int64_t cells = 0;
  double sum = 0.0;
  for_each_cell(f.grid, region, [&](const std::array<int, 3>& c) {
    ++cells;
    sum += cell_square_mean(f, c);
  });
  if (cells == 0) throw InvariantError("quad_avg: region contains no cell centres");
  return std::sqrt(sum / static_cast<double>(cells));
}

// Same, for the Euclidean norm of an edge (vector) field.
inline double quad_avg(const EdgeField& f, const Region& region) {
  std::int64_t cells = 0;
  double sum = 0.0;
  for_each_cell(f.grid, region, [&](const std::array<int, 3>& c) {
    ++cells;
    for (int k = 0; k < f.grid.dim; ++k) sum += cell_square_mean(f[k], c);
  });
  if (cells == 0) throw InvariantError("quad_avg: region contains no cell centres");
  return std::sqrt(sum / static_cast<double>(cells));
}

// Region-mean of the inner product of two edge fields (not a norm; used by
// tilt-excess projections). Shares the cell rule with quad_avg.
inline double region_inner(const EdgeField& fa, const EdgeField& fb, const Region& region) {
  std::int64_t cells = 0;
  double sum = 0.0;
  for_each_cell(fa.grid, region, [&](const std::array<int, 3>& c) {
    ++cells;
    for (int k = 0; k < fa.grid.dim; ++k) sum += cell_product_mean(fa[k], fb[k], c);
  });
  if (cells == 0) throw InvariantError("region_inner: region contains no cell centres");
  return sum / static_cast<double>(cells);
}

// Region-mean of |f|^2 for a collection of lattice fields sharing a grid
// (e.g. corrector components plus flux potential components).
inline double quad_avg_squared_sum(const std::vector<const LatticeField*>& fields,
                                   const Region& region) {
  if (fields.empty()) throw InvariantError("quad_avg_squared_sum: no fields");
  std::int64_t cells = 0;
  double sum = 0.0;
  for_each_cell(fields[0]->grid, region, [&](const std::array<int, 3>& c) {
    ++cells;
    for (const LatticeField* f : fields) sum += cell_square_mean(*f, c);
  });
  if (cells == 0) throw InvariantError("quad_avg_squared_sum: empty region");
  return sum / static_cast<double>(cells);
}

}  // namespace hshg
