#pragma once

// Boundary conditions on node fields, one kind per face of each bounded axis.
//
// Dirichlet rows are handled by constraint: the value is written into the
// iterate and the row is masked out of residuals and search directions, so
// Krylov methods act on the free subspace. Neumann-zero is the natural
// condition of the zero-extension divergence and needs no bookkeeping.

#include <array>
#include <cstdint>
#include <vector>

#include "hshg/common.hpp"
#include "hshg/grid.hpp"

namespace hshg {

enum class FaceKind { Periodic, DirichletZero, DirichletData, NeumannZero };

// Flat index of node i within the face normal to `axis` (that coordinate is
// dropped; remaining axes keep their order, lowest fastest).
inline std::int64_t face_flat(const LatticeField& shape, int axis, const std::array<int, 3>& i) {
  std::int64_t idx = 0;
  for (int a = shape.grid.dim - 1; a >= 0; --a) {
    if (a == axis) continue;
    idx = idx * shape.size(a) + i[static_cast<std::size_t>(a)];
  }
  return idx;
}

inline std::int64_t face_count(const GridSpec& g, int axis) {
  std::int64_t n = 1;
  for (int a = 0; a < g.dim; ++a)
    if (a != axis) n *= g.nodes(a);
  return n;
}

struct BoundarySpec {
  int dim = 0;
  std::array<std::array<FaceKind, 2>, 3> kind{};              // [axis][side], side 0 = low
  std::array<std::array<std::vector<double>, 2>, 3> data{};   // DirichletData faces only
  bool mean_zero = false;  // project out constants (singular problems)

  // Periodic axes stay periodic; bounded axes get zero Dirichlet on both
  // sides. mean_zero is enabled only when no face pins the solution.
  static BoundarySpec from_grid(const GridSpec& g) {
    BoundarySpec bc;
    bc.dim = g.dim;
    bool any_dirichlet = false;
    for (int a = 0; a < g.dim; ++a) {
      const FaceKind k = g.periodic(a) ? FaceKind::Periodic : FaceKind::DirichletZero;
      bc.kind[static_cast<std::size_t>(a)] = {k, k};
      any_dirichlet |= !g.periodic(a);
    }
    bc.mean_zero = !any_dirichlet;
    return bc;
  }

  void set(int axis, int side, FaceKind k) {
    kind[static_cast<std::size_t>(axis)][static_cast<std::size_t>(side)] = k;
  }

  void set_data(int axis, int side, std::vector<double> values) {
    kind[static_cast<std::size_t>(axis)][static_cast<std::size_t>(side)] = FaceKind::DirichletData;
    data[static_cast<std::size_t>(axis)][static_cast<std::size_t>(side)] = std::move(values);
  }

  bool has_dirichlet() const {
    for (int a = 0; a < dim; ++a)
      for (int s = 0; s < 2; ++s) {
        const FaceKind k = kind[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)];
        if (k == FaceKind::DirichletZero || k == FaceKind::DirichletData) return true;
      }
    return false;
  }

  void validate(const GridSpec& g) const {
    if (dim != g.dim) throw ConfigError("boundary spec dimension mismatch");
    for (int a = 0; a < g.dim; ++a)
      for (int s = 0; s < 2; ++s) {
        const FaceKind k = kind[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)];
        if (g.periodic(a) != (k == FaceKind::Periodic))
          throw ConfigError("boundary kind does not match the axis topology");
        if (k == FaceKind::DirichletData &&
            static_cast<std::int64_t>(
                data[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)].size()) !=
                face_count(g, a))
          throw ConfigError("Dirichlet face data has the wrong size");
      }
    if (mean_zero && has_dirichlet())
      throw ConfigError("mean-zero projection conflicts with Dirichlet faces");
    if (!mean_zero && !has_dirichlet())
      throw ConfigError("problem without Dirichlet faces needs the mean-zero projection");
  }
};

namespace detail {

template <typename Fn>
void for_each_face_node(const LatticeField& shape, int axis, int side, Fn&& fn) {
  const GridSpec& g = shape.grid;
  const int fixed = side == 0 ? 0 : shape.size(axis) - 1;
  std::int64_t n = 1;
  for (int a = 0; a < g.dim; ++a)
    if (a != axis) n *= shape.size(a);
  parallel_for(n, [&](std::int64_t idx) {
    std::array<int, 3> i{0, 0, 0};
    std::int64_t rem = idx;
    for (int a = 0; a < g.dim; ++a) {
      if (a == axis) continue;
      i[static_cast<std::size_t>(a)] = static_cast<int>(rem % shape.size(a));
      rem /= shape.size(a);
    }
    i[static_cast<std::size_t>(axis)] = fixed;
    fn(i, idx);
  });
}

}  // namespace detail

// Write Dirichlet values into u. Free rows are untouched.
inline void apply_constraints(const BoundarySpec& bc, LatticeField& u) {
  for (int a = 0; a < u.grid.dim; ++a)
    for (int s = 0; s < 2; ++s) {
      const FaceKind k = bc.kind[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)];
      if (k == FaceKind::DirichletZero) {
        detail::for_each_face_node(u, a, s, [&](const std::array<int, 3>& i, std::int64_t) {
          u.v[static_cast<std::size_t>(u.flat(i))] = 0.0;
        });
      } else if (k == FaceKind::DirichletData) {
        const auto& d = bc.data[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)];
        detail::for_each_face_node(u, a, s, [&](const std::array<int, 3>& i, std::int64_t f) {
          u.v[static_cast<std::size_t>(u.flat(i))] = d[static_cast<std::size_t>(f)];
        });
      }
    }
}

// Zero out constrained rows (residuals, search directions, corrections).
inline void mask_constrained(const BoundarySpec& bc, LatticeField& r) {
  for (int a = 0; a < r.grid.dim; ++a)
    for (int s = 0; s < 2; ++s) {
      const FaceKind k = bc.kind[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)];
      if (k == FaceKind::DirichletZero || k == FaceKind::DirichletData)
        detail::for_each_face_node(r, a, s, [&](const std::array<int, 3>& i, std::int64_t) {
          r.v[static_cast<std::size_t>(r.flat(i))] = 0.0;
        });
    }
}

// Per-node constraint flags, used by smoothers.
inline std::vector<char> constrained_mask(const GridSpec& g, const BoundarySpec& bc) {
  LatticeField shape(g, {false, false, false});
  std::vector<char> mask(shape.v.size(), 0);
  for (int a = 0; a < g.dim; ++a)
    for (int s = 0; s < 2; ++s) {
      const FaceKind k = bc.kind[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)];
      if (k == FaceKind::DirichletZero || k == FaceKind::DirichletData)
        detail::for_each_face_node(shape, a, s, [&](const std::array<int, 3>& i, std::int64_t) {
          mask[static_cast<std::size_t>(shape.flat(i))] = 1;
        });
    }
  return mask;
}

}  // namespace hshg
