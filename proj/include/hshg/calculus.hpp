#pragma once

// Discrete calculus: forward-difference gradient on edges, its exact negative
// adjoint divergence on nodes, and the small transfer operators between
// lattices. <grad u, F> = -<u, div F> holds to roundoff on every topology
// (missing edges at bounded faces count as zero flux).

#include <array>
#include <cmath>

#include "hshg/common.hpp"
#include "hshg/grid.hpp"

namespace hshg {

inline EdgeField gradient(const ScalarField& u) {
  EdgeField g(u.grid);
  const double inv_h = 1.0 / u.grid.spacing;
  for (int k = 0; k < u.grid.dim; ++k) {
    LatticeField& gk = g[k];
    const std::int64_t n = gk.count();
    parallel_for(n, [&, k](std::int64_t idx) {
      std::array<int, 3> e;
      gk.decompose(idx, e);
      std::array<int, 3> head = e;
      head[static_cast<std::size_t>(k)] += 1;
      gk.v[static_cast<std::size_t>(idx)] =
          (u.at_wrap(head) - u.at(e)) * inv_h;
    });
  }
  return g;
}

// Divergence at nodes; edges outside the lattice contribute zero, which at
// bounded faces realizes the zero-extension adjoint to `gradient`.
inline ScalarField divergence(const EdgeField& f) {
  ScalarField d = make_scalar_field(f.grid);
  const GridSpec& grid = f.grid;
  const double inv_h = 1.0 / grid.spacing;
  const std::int64_t n = d.count();
  parallel_for(n, [&](std::int64_t idx) {
    std::array<int, 3> i;
    d.decompose(idx, i);
    double s = 0.0;
    for (int k = 0; k < grid.dim; ++k) {
      const LatticeField& fk = f[k];
      const auto sk = static_cast<std::size_t>(k);
      std::array<int, 3> e = i;
      s += fk.at_ext(e);  // outgoing edge (i, k); zero beyond bounded faces
      e[sk] -= 1;
      s -= fk.at_ext(e);  // incoming edge (i - e_k, k)
    }
    d.v[static_cast<std::size_t>(idx)] = s * inv_h;
  });
  return d;
}

// Volume-weighted inner products backing the summation-by-parts identity.
// Node weights follow the trapezoidal rule (1/2 per bounded face membership);
// edge weights are uniform.
inline double node_weight(const ScalarField& u, const std::array<int, 3>& i) {
  double w = 1.0;
  for (int a = 0; a < u.grid.dim; ++a) {
    if (!u.grid.periodic(a)) {
      const auto s = static_cast<std::size_t>(a);
      if (i[s] == 0 || i[s] == u.grid.nodes(a) - 1) w *= 0.5;
    }
  }
  return w;
}

inline double inner_nodes(const ScalarField& a, const ScalarField& b) {
  const double hd = std::pow(a.grid.spacing, a.grid.dim);
  return hd * parallel_sum(a.count(), [&](std::int64_t idx) {
           return a.v[static_cast<std::size_t>(idx)] * b.v[static_cast<std::size_t>(idx)];
         });
}

inline double inner_edges(const EdgeField& a, const EdgeField& b) {
  const double hd = std::pow(a.grid.spacing, a.grid.dim);
  double s = 0.0;
  for (int k = 0; k < a.grid.dim; ++k) s += dot(a[k], b[k]);
  return hd * s;
}

// Node-centred gradient: each component averaged from its two incident edges
// (one-sided at bounded faces). Used by two-scale expansions.
inline std::array<ScalarField, 3> node_gradient(const ScalarField& u) {
  const EdgeField g = gradient(u);
  std::array<ScalarField, 3> out;
  for (int k = 0; k < u.grid.dim; ++k) {
    out[static_cast<std::size_t>(k)] = make_scalar_field(u.grid);
    ScalarField& gk = out[static_cast<std::size_t>(k)];
    const LatticeField& ge = g[k];
    const int nk = ge.size(k);
    parallel_for(gk.count(), [&, k, nk](std::int64_t idx) {
      std::array<int, 3> i;
      gk.decompose(idx, i);
      const auto sk = static_cast<std::size_t>(k);
      double sum = 0.0;
      int cnt = 0;
      if (u.grid.periodic(k) || i[sk] < nk) {
        sum += ge.at_wrap(i);
        ++cnt;
      }
      std::array<int, 3> e = i;
      e[sk] -= 1;
      if (u.grid.periodic(k) || e[sk] >= 0) {
        sum += ge.at_wrap(e);
        ++cnt;
      }
      gk.v[static_cast<std::size_t>(idx)] = cnt ? sum / cnt : 0.0;
    });
  }
  return out;
}

// Average a j-edge field onto the (j,k)-pair lattice (mean of the two
// parallel j-edges bounding the pair position along axis k).
inline LatticeField edge_to_pair(const LatticeField& ej, int j, int k) {
  LatticeField p = make_pair_field(ej.grid, std::min(j, k), std::max(j, k));
  parallel_for(p.count(), [&](std::int64_t idx) {
    std::array<int, 3> i;
    p.decompose(idx, i);
    std::array<int, 3> a = i;
    std::array<int, 3> b = i;
    b[static_cast<std::size_t>(k)] += 1;
    p.v[static_cast<std::size_t>(idx)] = 0.5 * (ej.at_wrap(a) + ej.at_wrap(b));
  });
  return p;
}

// Difference of a (j,k)-pair field along axis k, landing on j-edges. Rows
// touching a bounded face read missing samples as zero; callers evaluate
// interior regions only.
inline LatticeField pair_diff(const LatticeField& p, int k) {
  std::array<bool, 3> half = p.half;
  half[static_cast<std::size_t>(k)] = false;
  LatticeField out(p.grid, half);
  const double inv_h = 1.0 / p.grid.spacing;
  parallel_for(out.count(), [&](std::int64_t idx) {
    std::array<int, 3> i;
    out.decompose(idx, i);
    std::array<int, 3> a = i;
    a[static_cast<std::size_t>(k)] -= 1;
    out.v[static_cast<std::size_t>(idx)] = (p.at_ext(i) - p.at_ext(a)) * inv_h;
  });
  return out;
}

// Difference of a k-edge field along axis j (j != k), landing on the
// (j,k)-pair lattice.
inline LatticeField edge_diff_to_pair(const LatticeField& ek, int k, int j) {
  LatticeField p = make_pair_field(ek.grid, std::min(j, k), std::max(j, k));
  const double inv_h = 1.0 / p.grid.spacing;
  parallel_for(p.count(), [&](std::int64_t idx) {
    std::array<int, 3> i;
    p.decompose(idx, i);
    std::array<int, 3> b = i;
    b[static_cast<std::size_t>(j)] += 1;
    p.v[static_cast<std::size_t>(idx)] = (ek.at_wrap(b) - ek.at_wrap(i)) * inv_h;
  });
  return p;
}

}  // namespace hshg
