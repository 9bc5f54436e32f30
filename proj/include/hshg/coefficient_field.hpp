#pragma once

// Coefficient fields: one d x d matrix per edge midpoint.
//
// Generators produce one matrix per cell; edge entries are the matrix
// harmonic mean of the cells adjacent to the edge (2 in 2D, 4 in 3D). Flux
// continuity across high-contrast interfaces is what controls the
// discretization error, hence harmonic rather than arithmetic averaging.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "hshg/calculus.hpp"
#include "hshg/common.hpp"
#include "hshg/grid.hpp"
#include "hshg/smallmat.hpp"

namespace hshg {

// Per-cell matrices, the generators' working representation.
struct CellMatField {
  GridSpec grid;
  std::vector<double> a;  // cell-major, then d*d row-major

  explicit CellMatField(const GridSpec& g)
      : grid(g), a(static_cast<std::size_t>(g.cell_count()) * static_cast<std::size_t>(g.dim * g.dim), 0.0) {}

  std::int64_t cell_flat(const std::array<int, 3>& c) const {
    std::int64_t idx = 0;
    for (int ax = grid.dim - 1; ax >= 0; --ax)
      idx = idx * grid.cells[static_cast<std::size_t>(ax)] + c[static_cast<std::size_t>(ax)];
    return idx;
  }

  std::int64_t cell_flat_wrap(std::array<int, 3> c) const {
    for (int ax = 0; ax < grid.dim; ++ax) {
      const int n = grid.cells[static_cast<std::size_t>(ax)];
      int& v = c[static_cast<std::size_t>(ax)];
      v %= n;
      if (v < 0) v += n;
    }
    return cell_flat(c);
  }

  Mat get(std::int64_t flat) const {
    const int d = grid.dim;
    Mat m = Mat::zero(d);
    const std::size_t base = static_cast<std::size_t>(flat) * static_cast<std::size_t>(d * d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = a[base + static_cast<std::size_t>(i * d + j)];
    return m;
  }

  void set(std::int64_t flat, const Mat& m) {
    const int d = grid.dim;
    const std::size_t base = static_cast<std::size_t>(flat) * static_cast<std::size_t>(d * d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) a[base + static_cast<std::size_t>(i * d + j)] = m(i, j);
  }
};

struct EllipticityCertificate {
  double min_eig = 0.0;      // min over edges of lambda_min(sym part)
  double max_op_norm = 0.0;  // max over edges of the spectral norm
  bool symmetric = true;
  bool axis_diagonal = true;
};

struct CoefficientField {
  GridSpec grid;
  double lambda = 1.0;  // declared lower ellipticity bound
  std::string generator_id;
  std::uint64_t seed = 0;
  std::string params_json = "{}";

  // Per axis k: entries for every k-edge, edge-major then d*d row-major.
  std::array<std::vector<double>, 3> entries;
  EllipticityCertificate cert;

  // Lattice shape of the k-edge family (shared with EdgeField components).
  LatticeField edge_shape(int k) const {
    std::array<bool, 3> half{false, false, false};
    half[static_cast<std::size_t>(k)] = true;
    LatticeField f(grid, half);
    f.v.clear();  // shape only
    return f;
  }

  std::int64_t edge_count(int k) const {
    std::array<bool, 3> half{false, false, false};
    half[static_cast<std::size_t>(k)] = true;
    std::int64_t n = 1;
    for (int a = 0; a < grid.dim; ++a)
      n *= half[static_cast<std::size_t>(a)] ? grid.cells[static_cast<std::size_t>(a)] : grid.nodes(a);
    return n;
  }

  double entry(int k, std::int64_t edge_flat, int i, int j) const {
    const int d = grid.dim;
    return entries[static_cast<std::size_t>(k)]
                  [static_cast<std::size_t>(edge_flat) * static_cast<std::size_t>(d * d) +
                   static_cast<std::size_t>(i * d + j)];
  }

  Mat edge_mat(int k, std::int64_t edge_flat) const {
    const int d = grid.dim;
    Mat m = Mat::zero(d);
    const std::size_t base =
        static_cast<std::size_t>(edge_flat) * static_cast<std::size_t>(d * d);
    const auto& ek = entries[static_cast<std::size_t>(k)];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) m(i, j) = ek[base + static_cast<std::size_t>(i * d + j)];
    return m;
  }

  void set_edge_mat(int k, std::int64_t edge_flat, const Mat& m) {
    const int d = grid.dim;
    const std::size_t base =
        static_cast<std::size_t>(edge_flat) * static_cast<std::size_t>(d * d);
    auto& ek = entries[static_cast<std::size_t>(k)];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) ek[base + static_cast<std::size_t>(i * d + j)] = m(i, j);
  }

  // Conductance along the edge direction, the 5/7-point stencil weight.
  double diag(int k, std::int64_t edge_flat) const { return entry(k, edge_flat, k, k); }

  bool axis_diagonal() const { return cert.axis_diagonal; }
  bool symmetric() const { return cert.symmetric; }
};

inline EllipticityCertificate compute_certificate(const CoefficientField& f) {
  EllipticityCertificate c;
  c.min_eig = 1e300;
  c.max_op_norm = 0.0;
  for (int k = 0; k < f.grid.dim; ++k) {
    const std::int64_t n = f.edge_count(k);
    for (std::int64_t e = 0; e < n; ++e) {
      const Mat m = f.edge_mat(k, e);
      c.min_eig = std::min(c.min_eig, sym_min_eigenvalue(m));
      c.max_op_norm = std::max(c.max_op_norm, operator_norm(m));
      if (!m.is_symmetric(1e-12)) c.symmetric = false;
      if (m.max_abs_offdiag() > 1e-13) c.axis_diagonal = false;
    }
  }
  return c;
}

inline constexpr double kEllipticityTol = 1e-12;

// Generation-time gate: declared bounds must hold entrywise.
inline void require_elliptic(const CoefficientField& f) {
  if (f.cert.min_eig < f.lambda - kEllipticityTol)
    throw InvariantError("lower ellipticity bound violated: min eigenvalue " +
                         format_double(f.cert.min_eig) + " < lambda " + format_double(f.lambda));
  if (f.cert.max_op_norm > 1.0 + kEllipticityTol)
    throw InvariantError("upper ellipticity bound violated: operator norm " +
                         format_double(f.cert.max_op_norm) + " > 1");
}

// Edge entries from cell matrices: harmonic mean over the cells adjacent to
// each edge (transverse offsets in {-1,0} on every axis other than the edge
// axis; periodic wrap).
inline CoefficientField edges_from_cells(const CellMatField& cells, double lambda,
                                         const std::string& generator_id, std::uint64_t seed,
                                         const std::string& params_json) {
  const GridSpec& g = cells.grid;
  const int d = g.dim;
  for (int a = 0; a < d; ++a)
    if (!g.periodic(a))
      throw ConfigError("field generation requires a fully periodic (torus) grid");
  CoefficientField f;
  f.grid = g;
  f.lambda = lambda;
  f.generator_id = generator_id;
  f.seed = seed;
  f.params_json = params_json;
  for (int k = 0; k < d; ++k) {
    const std::int64_t n = f.edge_count(k);
    f.entries[static_cast<std::size_t>(k)].assign(
        static_cast<std::size_t>(n) * static_cast<std::size_t>(d * d), 0.0);
    std::array<bool, 3> half{false, false, false};
    half[static_cast<std::size_t>(k)] = true;
    LatticeField shape(g, half);
    shape.v.clear();
    const int transverse_count = 1 << (d - 1);
    parallel_for(n, [&, k](std::int64_t idx) {
      std::array<int, 3> e;
      shape.decompose(idx, e);
      std::array<Mat, 4> adj;
      int cnt = 0;
      for (int mask = 0; mask < transverse_count; ++mask) {
        std::array<int, 3> c = e;
        int bit = 0;
        for (int a = 0; a < d; ++a) {
          if (a == k) continue;
          if (mask & (1 << bit)) c[static_cast<std::size_t>(a)] -= 1;
          ++bit;
        }
        adj[static_cast<std::size_t>(cnt++)] = cells.get(cells.cell_flat_wrap(c));
      }
      f.set_edge_mat(k, idx, harmonic_mean(adj.data(), cnt));
    });
  }
  f.cert = compute_certificate(f);
  require_elliptic(f);
  return f;
}

// ---------------------------------------------------------------------------
// Flux: F = a * g for an edge field g, including cross terms when entries
// have off-diagonal components. The transverse gradient at a k-edge is the
// mean of the four neighbouring l-edges (existing ones near bounded faces).
// ---------------------------------------------------------------------------

inline EdgeField apply_coeff(const CoefficientField& a, const EdgeField& g) {
  EdgeField out(a.grid);
  const int d = a.grid.dim;
  for (int k = 0; k < d; ++k) {
    LatticeField& ok = out[k];
    const LatticeField& gk = g[k];
    if (a.axis_diagonal()) {
      parallel_for(ok.count(), [&, k](std::int64_t idx) {
        ok.v[static_cast<std::size_t>(idx)] = a.diag(k, idx) * gk.v[static_cast<std::size_t>(idx)];
      });
      continue;
    }
    parallel_for(ok.count(), [&, k](std::int64_t idx) {
      std::array<int, 3> e;
      ok.decompose(idx, e);
      double s = a.entry(k, idx, k, k) * gk.v[static_cast<std::size_t>(idx)];
      for (int l = 0; l < d; ++l) {
        if (l == k) continue;
        const double akl = a.entry(k, idx, k, l);
        if (akl == 0.0) continue;
        const LatticeField& gl = g[l];
        double sum = 0.0;
        int cnt = 0;
        for (int dk = 0; dk <= 1; ++dk) {
          for (int dl = -1; dl <= 0; ++dl) {
            std::array<int, 3> p = e;
            p[static_cast<std::size_t>(k)] += dk;
            p[static_cast<std::size_t>(l)] += dl;
            // l-edge exists if its index is valid (wrap periodic axes).
            bool ok_idx = true;
            for (int ax = 0; ax < d; ++ax) {
              const int n = gl.size(ax);
              int& c = p[static_cast<std::size_t>(ax)];
              if (a.grid.periodic(ax)) {
                c %= n;
                if (c < 0) c += n;
              } else if (c < 0 || c >= n) {
                ok_idx = false;
                break;
              }
            }
            if (ok_idx) {
              sum += gl.at(p);
              ++cnt;
            }
          }
        }
        if (cnt) s += akl * (sum / cnt);
      }
      ok.v[static_cast<std::size_t>(idx)] = s;
    });
  }
  return out;
}

// F = a * e_i (unit slope): exact even with cross terms, since the averaged
// transverse gradient of a constant is that constant.
inline EdgeField unit_flux(const CoefficientField& a, int i) {
  EdgeField out(a.grid);
  for (int k = 0; k < a.grid.dim; ++k) {
    LatticeField& ok = out[k];
    parallel_for(ok.count(), [&, k, i](std::int64_t idx) {
      ok.v[static_cast<std::size_t>(idx)] = a.entry(k, idx, k, i);
    });
  }
  return out;
}

inline void add_edge_fields(EdgeField& acc, const EdgeField& other, double scale = 1.0) {
  for (int k = 0; k < acc.grid.dim; ++k) axpy(scale, other[k], acc[k]);
}

// ---------------------------------------------------------------------------
// Restriction of torus data to a half grid sharing lateral indexing. The
// flat boundary row x_d = 0 maps to the torus row through the origin.
// ---------------------------------------------------------------------------

inline void check_half_of_torus(const GridSpec& half, const GridSpec& torus) {
  if (half.dim != torus.dim) throw ConfigError("half grid dimension mismatch");
  const int d = torus.dim;
  // Lateral axes may stay periodic (the adaptation grid) or be truncated to
  // a bounded box of the same width (harmonic-sample oracles); either way
  // they must span exactly one torus period.
  for (int a = 0; a + 1 < d; ++a) {
    if (half.cells[static_cast<std::size_t>(a)] != torus.cells[static_cast<std::size_t>(a)])
      throw ConfigError("half grid lateral axes must match the torus");
  }
  if (half.periodic(d - 1)) throw ConfigError("half grid vertical axis must be bounded");
  if (half.cells[static_cast<std::size_t>(d - 1)] > torus.cells[static_cast<std::size_t>(d - 1)])
    throw ConfigError("half grid taller than the torus period");
  if (half.spacing != torus.spacing) throw ConfigError("half grid spacing mismatch");
}

// Torus vertical node row carrying half-grid row iz.
inline int torus_row(const GridSpec& torus, int iz) {
  const int d = torus.dim;
  const int n = torus.cells[static_cast<std::size_t>(d - 1)];
  const int o = static_cast<int>(torus.origin[static_cast<std::size_t>(d - 1)]);
  return ((o + iz) % n + n) % n;
}

inline CoefficientField restrict_to_half(const CoefficientField& tf, const GridSpec& half) {
  check_half_of_torus(half, tf.grid);
  const int d = half.dim;
  CoefficientField out;
  out.grid = half;
  out.lambda = tf.lambda;
  out.generator_id = tf.generator_id;
  out.seed = tf.seed;
  out.params_json = tf.params_json;
  for (int k = 0; k < d; ++k) {
    const std::int64_t n = out.edge_count(k);
    out.entries[static_cast<std::size_t>(k)].assign(
        static_cast<std::size_t>(n) * static_cast<std::size_t>(d * d), 0.0);
    std::array<bool, 3> half_axes{false, false, false};
    half_axes[static_cast<std::size_t>(k)] = true;
    LatticeField shape(half, half_axes);
    shape.v.clear();
    LatticeField tshape(tf.grid, half_axes);
    tshape.v.clear();
    const int dd = d * d;
    parallel_for(n, [&, k, dd](std::int64_t idx) {
      std::array<int, 3> e;
      shape.decompose(idx, e);
      std::array<int, 3> te = e;
      te[static_cast<std::size_t>(d - 1)] = torus_row(tf.grid, e[static_cast<std::size_t>(d - 1)]);
      const std::int64_t tidx = tshape.flat_wrap(te);
      for (int c = 0; c < dd; ++c)
        out.entries[static_cast<std::size_t>(k)][static_cast<std::size_t>(idx * dd + c)] =
            tf.entries[static_cast<std::size_t>(k)][static_cast<std::size_t>(tidx * dd + c)];
    });
  }
  out.cert = tf.cert;  // subset of the torus entries; certified bounds carry over
  return out;
}

// Restriction of a torus lattice field (any staggering) to the half grid.
inline LatticeField restrict_lattice_field(const LatticeField& tf, const GridSpec& half) {
  check_half_of_torus(half, tf.grid);
  const int d = half.dim;
  LatticeField out(half, tf.half);
  parallel_for(out.count(), [&](std::int64_t idx) {
    std::array<int, 3> i;
    out.decompose(idx, i);
    std::array<int, 3> ti = i;
    ti[static_cast<std::size_t>(d - 1)] = torus_row(tf.grid, i[static_cast<std::size_t>(d - 1)]);
    out.v[static_cast<std::size_t>(idx)] = tf.at_wrap(ti);
  });
  return out;
}

}  // namespace hshg
