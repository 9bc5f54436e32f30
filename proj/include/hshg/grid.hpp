#pragma once

// Structured grids and staggered lattice fields.
//
// Unknowns live on nodes (vertices). Coefficients live on edges between
// neighbouring nodes. Derived tensors (skew flux potentials) live on lattices
// shifted by half a step along a subset of axes. One field type covers all of
// these: `half[a]` marks the axes with a half-step offset.
//
// Axis topology is per-axis: Periodic axes identify node N with node 0;
// Bounded axes carry cells+1 node layers including both faces.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "hshg/common.hpp"

namespace hshg {

enum class AxisTopology : std::uint8_t { Periodic = 0, Bounded = 1 };

struct GridSpec {
  int dim = 2;
  std::array<int, 3> cells{0, 0, 0};
  double spacing = 1.0;
  // Node-index coordinates of the physical origin; must sit on a grid node.
  std::array<double, 3> origin{0.0, 0.0, 0.0};
  std::array<AxisTopology, 3> topo{AxisTopology::Periodic, AxisTopology::Periodic,
                                   AxisTopology::Periodic};

  bool periodic(int axis) const { return topo[static_cast<std::size_t>(axis)] == AxisTopology::Periodic; }

  int nodes(int axis) const {
    const int c = cells[static_cast<std::size_t>(axis)];
    return periodic(axis) ? c : c + 1;
  }

  std::int64_t node_count() const {
    std::int64_t n = 1;
    for (int a = 0; a < dim; ++a) n *= nodes(a);
    return n;
  }

  std::int64_t cell_count() const {
    std::int64_t n = 1;
    for (int a = 0; a < dim; ++a) n *= cells[static_cast<std::size_t>(a)];
    return n;
  }

  double width(int axis) const { return cells[static_cast<std::size_t>(axis)] * spacing; }

  void validate() const {
    if (dim < 1 || dim > 3) throw ConfigError("grid dim must be 1, 2 or 3");
    if (!(spacing > 0.0)) throw ConfigError("grid spacing must be positive");
    for (int a = 0; a < dim; ++a) {
      if (cells[static_cast<std::size_t>(a)] < 2) throw ConfigError("grid needs at least 2 cells per axis");
      const double o = origin[static_cast<std::size_t>(a)];
      if (std::abs(o - std::round(o)) > 1e-9)
        throw ConfigError("grid origin must lie on a grid node");
    }
  }

  bool same_layout(const GridSpec& o) const {
    if (dim != o.dim || spacing != o.spacing) return false;
    for (int a = 0; a < dim; ++a)
      if (cells[static_cast<std::size_t>(a)] != o.cells[static_cast<std::size_t>(a)] ||
          topo[static_cast<std::size_t>(a)] != o.topo[static_cast<std::size_t>(a)] ||
          origin[static_cast<std::size_t>(a)] != o.origin[static_cast<std::size_t>(a)])
        return false;
    return true;
  }
};

inline GridSpec make_torus(int dim, int cells, double spacing = 1.0) {
  GridSpec g;
  g.dim = dim;
  g.spacing = spacing;
  for (int a = 0; a < dim; ++a) {
    g.cells[static_cast<std::size_t>(a)] = cells;
    g.topo[static_cast<std::size_t>(a)] = AxisTopology::Periodic;
    g.origin[static_cast<std::size_t>(a)] = cells / 2;
  }
  g.validate();
  return g;
}

// Half grid: lateral axes periodic with the torus width, vertical axis bounded
// with the flat boundary (x_d = 0) on the bottom node row.
inline GridSpec make_half_grid(int dim, int lateral_cells, int height_cells, double spacing = 1.0) {
  GridSpec g;
  g.dim = dim;
  g.spacing = spacing;
  for (int a = 0; a + 1 < dim; ++a) {
    g.cells[static_cast<std::size_t>(a)] = lateral_cells;
    g.topo[static_cast<std::size_t>(a)] = AxisTopology::Periodic;
    g.origin[static_cast<std::size_t>(a)] = lateral_cells / 2;
  }
  g.cells[static_cast<std::size_t>(dim - 1)] = height_cells;
  g.topo[static_cast<std::size_t>(dim - 1)] = AxisTopology::Bounded;
  g.origin[static_cast<std::size_t>(dim - 1)] = 0.0;
  g.validate();
  return g;
}

// Fully truncated half grid: like make_half_grid but with bounded lateral
// axes (Dirichlet box truncation instead of the periodic strip). The flat
// boundary stays on the bottom node row, the analysis origin mid-box.
inline GridSpec make_box_half_grid(int dim, int lateral_cells, int height_cells,
                                   double spacing = 1.0) {
  GridSpec g = make_half_grid(dim, lateral_cells, height_cells, spacing);
  for (int a = 0; a + 1 < dim; ++a)
    g.topo[static_cast<std::size_t>(a)] = AxisTopology::Bounded;
  return g;
}

// ---------------------------------------------------------------------------
// LatticeField
// ---------------------------------------------------------------------------

struct LatticeField {
  GridSpec grid;
  std::array<bool, 3> half{false, false, false};
  std::vector<double> v;

  LatticeField() = default;
  LatticeField(const GridSpec& g, std::array<bool, 3> half_axes)
      : grid(g), half(half_axes), v(static_cast<std::size_t>(count()), 0.0) {}

  int size(int axis) const {
    return half[static_cast<std::size_t>(axis)] ? grid.cells[static_cast<std::size_t>(axis)]
                                                : grid.nodes(axis);
  }

  std::int64_t count() const {
    std::int64_t n = 1;
    for (int a = 0; a < grid.dim; ++a) n *= size(a);
    return n;
  }

  std::int64_t flat(const std::array<int, 3>& i) const {
    std::int64_t idx = 0;
    for (int a = grid.dim - 1; a >= 0; --a) idx = idx * size(a) + i[static_cast<std::size_t>(a)];
    return idx;
  }

  // Index with periodic wrap on periodic axes. Bounded axes must be in range.
  std::int64_t flat_wrap(std::array<int, 3> i) const {
    for (int a = 0; a < grid.dim; ++a) {
      const int n = size(a);
      int& c = i[static_cast<std::size_t>(a)];
      if (grid.periodic(a)) {
        c %= n;
        if (c < 0) c += n;
      }
    }
    return flat(i);
  }

  double& at(const std::array<int, 3>& i) { return v[static_cast<std::size_t>(flat(i))]; }
  double at(const std::array<int, 3>& i) const { return v[static_cast<std::size_t>(flat(i))]; }
  double& at_wrap(const std::array<int, 3>& i) { return v[static_cast<std::size_t>(flat_wrap(i))]; }
  double at_wrap(const std::array<int, 3>& i) const { return v[static_cast<std::size_t>(flat_wrap(i))]; }

  // Wraps periodic axes; out-of-range samples on bounded axes read as zero.
  double at_ext(std::array<int, 3> i) const {
    for (int a = 0; a < grid.dim; ++a) {
      const int n = size(a);
      int& c = i[static_cast<std::size_t>(a)];
      if (grid.periodic(a)) {
        c %= n;
        if (c < 0) c += n;
      } else if (c < 0 || c >= n) {
        return 0.0;
      }
    }
    return at(i);
  }

  // Physical coordinate of sample i along `axis`.
  double coord(int axis, int i) const {
    const auto a = static_cast<std::size_t>(axis);
    return (static_cast<double>(i) + (half[a] ? 0.5 : 0.0) - grid.origin[a]) * grid.spacing;
  }

  // Signed displacement from the origin, minimal image on periodic axes.
  double displacement(int axis, int i) const {
    double x = coord(axis, i);
    if (grid.periodic(axis)) {
      const double w = grid.width(axis);
      x = std::remainder(x, w);
    }
    return x;
  }

  void fill(double value) { std::fill(v.begin(), v.end(), value); }

  void decompose(std::int64_t idx, std::array<int, 3>& i) const {
    for (int a = 0; a < grid.dim; ++a) {
      const int n = size(a);
      i[static_cast<std::size_t>(a)] = static_cast<int>(idx % n);
      idx /= n;
    }
    for (int a = grid.dim; a < 3; ++a) i[static_cast<std::size_t>(a)] = 0;
  }
};

using ScalarField = LatticeField;

inline ScalarField make_scalar_field(const GridSpec& g) {
  return LatticeField(g, {false, false, false});
}

// One family of parallel edges per axis: comp[k] holds the values on k-edges.
// A k-edge lattice is half-offset along axis k only.
struct EdgeField {
  GridSpec grid;
  std::array<LatticeField, 3> comp;

  EdgeField() = default;
  explicit EdgeField(const GridSpec& g) : grid(g) {
    for (int k = 0; k < g.dim; ++k) {
      std::array<bool, 3> half{false, false, false};
      half[static_cast<std::size_t>(k)] = true;
      comp[static_cast<std::size_t>(k)] = LatticeField(g, half);
    }
  }

  LatticeField& operator[](int k) { return comp[static_cast<std::size_t>(k)]; }
  const LatticeField& operator[](int k) const { return comp[static_cast<std::size_t>(k)]; }

  void fill(double value) {
    for (int k = 0; k < grid.dim; ++k) comp[static_cast<std::size_t>(k)].fill(value);
  }
};

// Lattice for a component pair (j,k), j < k: half-offset along both axes.
// This is where skew flux potentials live (cell centres in 2D).
inline LatticeField make_pair_field(const GridSpec& g, int j, int k) {
  std::array<bool, 3> half{false, false, false};
  half[static_cast<std::size_t>(j)] = true;
  half[static_cast<std::size_t>(k)] = true;
  return LatticeField(g, half);
}

// ---------------------------------------------------------------------------
// Whole-field helpers
// ---------------------------------------------------------------------------

inline void axpy(double a, const LatticeField& x, LatticeField& y) {
  const std::int64_t n = static_cast<std::int64_t>(y.v.size());
  parallel_for(n, [&](std::int64_t i) { y.v[static_cast<std::size_t>(i)] += a * x.v[static_cast<std::size_t>(i)]; });
}

inline double dot(const LatticeField& x, const LatticeField& y) {
  return parallel_sum(static_cast<std::int64_t>(x.v.size()), [&](std::int64_t i) {
    return x.v[static_cast<std::size_t>(i)] * y.v[static_cast<std::size_t>(i)];
  });
}

inline double norm2(const LatticeField& x) { return std::sqrt(dot(x, x)); }

inline double field_mean(const LatticeField& x) {
  if (x.v.empty()) return 0.0;
  return parallel_sum(static_cast<std::int64_t>(x.v.size()),
                      [&](std::int64_t i) { return x.v[static_cast<std::size_t>(i)]; }) /
         static_cast<double>(x.v.size());
}

inline void subtract_mean(LatticeField& x) {
  const double m = field_mean(x);
  parallel_for(static_cast<std::int64_t>(x.v.size()),
               [&](std::int64_t i) { x.v[static_cast<std::size_t>(i)] -= m; });
}

}  // namespace hshg
