#pragma once

// Matrix-free elliptic solves: -div(a grad u) = b on node fields.
//
// The operator is the exact composition of the forward-difference gradient,
// the edge coefficient multiply, and the zero-extension divergence, so it is
// symmetric in the plain (unweighted) inner product on every topology and
// the energy identity <Au, u> = sum_e a_e (Du)_e^2 holds to roundoff.
//
// Dirichlet rows are constrained, not eliminated: iterates carry the data,
// residuals and directions are masked. Singular problems (no Dirichlet face)
// run in the mean-zero subspace.
//
// Preconditioners: geometric multigrid V(2,2) with red-black Gauss-Seidel
// smoothing for axis-diagonal coefficients (including the identity), Jacobi
// scaling otherwise. Non-symmetric cases fall back to BiCGStab.

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "hshg/bc.hpp"
#include "hshg/calculus.hpp"
#include "hshg/coefficient_field.hpp"
#include "hshg/common.hpp"
#include "hshg/grid.hpp"

namespace hshg {

struct EllipticProblem {
  GridSpec grid;
  const CoefficientField* coeff = nullptr;  // null: identity coefficients
  BoundarySpec bc;
};

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 50000;
  enum class Precond { Auto, None, Diagonal, Multigrid } precond = Precond::Auto;
  bool verbose = false;
};

struct SolveStats {
  int iterations = 0;
  double rel_residual = 0.0;
  std::string method;
  std::vector<double> history;
};

inline void check_tol(double tol) {
  if (!(tol >= 1e-14) || !(tol <= 1e-4))
    throw ConfigError("solver tolerance must lie in [1e-14, 1e-4]");
}

// out = -div(a grad u); constrained rows zeroed by the caller where needed.
inline void apply_operator(const EllipticProblem& P, const LatticeField& u, LatticeField& out) {
  EdgeField g = gradient(u);
  if (P.coeff) {
    EdgeField f = apply_coeff(*P.coeff, g);
    out = divergence(f);
  } else {
    out = divergence(g);
  }
  parallel_for(out.count(), [&](std::int64_t i) { out.v[static_cast<std::size_t>(i)] = -out.v[static_cast<std::size_t>(i)]; });
}

// Residual b - A u, masked, mean-projected on singular problems. Recomputed
// from the field values alone; shared by the iteration and by verification.
inline LatticeField residual_field(const EllipticProblem& P, const LatticeField& b,
                                   const LatticeField& u) {
  LatticeField r(P.grid, {false, false, false});
  apply_operator(P, u, r);
  parallel_for(r.count(), [&](std::int64_t i) {
    r.v[static_cast<std::size_t>(i)] = b.v[static_cast<std::size_t>(i)] - r.v[static_cast<std::size_t>(i)];
  });
  mask_constrained(P.bc, r);
  if (P.bc.mean_zero) subtract_mean(r);
  return r;
}

// ||r|| / max(||b||, (2d/h^2)||u||, tiny): relative when b dominates, scaled
// by the operator magnitude when the solution does.
inline double residual_scale(const EllipticProblem& P, double bnorm, double unorm) {
  const double opmag = 2.0 * P.grid.dim / (P.grid.spacing * P.grid.spacing);
  return std::max(std::max(bnorm, opmag * unorm), 1e-300);
}

inline double relative_residual(const EllipticProblem& P, const LatticeField& b,
                                const LatticeField& u) {
  const LatticeField r = residual_field(P, b, u);
  return norm2(r) / residual_scale(P, norm2(b), norm2(u));
}

// --------------------------------------------------------------------------
// Axis-diagonal stencil levels (multigrid).
// --------------------------------------------------------------------------

namespace detail {

struct LevelOp {
  GridSpec grid;
  std::array<std::vector<double>, 3> g;  // conductance a_kk per k-edge
  std::vector<char> cmask;
  bool singular = false;

  LatticeField node_field() const { return LatticeField(grid, {false, false, false}); }

  // Edge strides of the k-edge lattice and of the node lattice.
  std::int64_t edge_index(int k, const std::array<int, 3>& e) const {
    std::array<bool, 3> half{false, false, false};
    half[static_cast<std::size_t>(k)] = true;
    std::int64_t idx = 0;
    for (int a = grid.dim - 1; a >= 0; --a) {
      const int n = half[static_cast<std::size_t>(a)] ? grid.cells[static_cast<std::size_t>(a)]
                                                      : grid.nodes(a);
      idx = idx * n + e[static_cast<std::size_t>(a)];
    }
    return idx;
  }

  // Stencil row at node i: (sum_k [g_lo + g_hi] u_i - sum g u_nb) / h^2.
  // Missing edges at bounded faces drop out, matching the zero-extension
  // divergence exactly.
  template <bool Diag>
  double row(const LatticeField& u, const std::array<int, 3>& i, double* diag_out) const {
    const double inv_h2 = 1.0 / (grid.spacing * grid.spacing);
    double off = 0.0;
    double diag = 0.0;
    for (int k = 0; k < grid.dim; ++k) {
      const auto& gk = g[static_cast<std::size_t>(k)];
      const int cells_k = grid.cells[static_cast<std::size_t>(k)];
      const int ik = i[static_cast<std::size_t>(k)];
      // upper edge (ik), lower edge (ik-1) on the half lattice; wrap periodic
      if (grid.periodic(k) || ik < cells_k) {
        std::array<int, 3> e = i;
        e[static_cast<std::size_t>(k)] = grid.periodic(k) ? ik % cells_k : ik;
        const double w = gk[static_cast<std::size_t>(edge_index(k, e))];
        std::array<int, 3> nb = i;
        nb[static_cast<std::size_t>(k)] = grid.periodic(k) ? (ik + 1) % grid.nodes(k) : ik + 1;
        off += w * u.at(nb);
        diag += w;
      }
      if (grid.periodic(k) || ik > 0) {
        std::array<int, 3> e = i;
        e[static_cast<std::size_t>(k)] = grid.periodic(k) ? ((ik - 1) % cells_k + cells_k) % cells_k : ik - 1;
        const double w = gk[static_cast<std::size_t>(edge_index(k, e))];
        std::array<int, 3> nb = i;
        nb[static_cast<std::size_t>(k)] = grid.periodic(k) ? ((ik - 1) % grid.nodes(k) + grid.nodes(k)) % grid.nodes(k) : ik - 1;
        off += w * u.at(nb);
        diag += w;
      }
    }
    if (Diag) *diag_out = diag * inv_h2;
    return (diag * u.at(i) - off) * inv_h2;
  }

  void apply(const LatticeField& u, LatticeField& out) const {
    parallel_for(out.count(), [&](std::int64_t idx) {
      if (cmask[static_cast<std::size_t>(idx)]) {
        out.v[static_cast<std::size_t>(idx)] = 0.0;
        return;
      }
      std::array<int, 3> i;
      out.decompose(idx, i);
      out.v[static_cast<std::size_t>(idx)] = row<false>(u, i, nullptr);
    });
  }

  // One red-black half-sweep: update nodes with parity `color`.
  void gs_color(LatticeField& u, const LatticeField& b, int color) const {
    parallel_for(u.count(), [&](std::int64_t idx) {
      if (cmask[static_cast<std::size_t>(idx)]) return;
      std::array<int, 3> i;
      u.decompose(idx, i);
      int parity = 0;
      for (int a = 0; a < grid.dim; ++a) parity += i[static_cast<std::size_t>(a)];
      if ((parity & 1) != color) return;
      double diag = 0.0;
      const double res = row<true>(u, i, &diag);
      if (diag > 0.0)
        u.v[static_cast<std::size_t>(idx)] += (b.v[static_cast<std::size_t>(idx)] - res) / diag;
    });
  }
};

// Conductances of the coarse k-edge: harmonic mean of the in-line fine pair,
// full-weighting average ({1/4, 1/2, 1/4} per transverse axis) over strands.
inline LevelOp coarsen(const LevelOp& fine) {
  const GridSpec& gf = fine.grid;
  LevelOp coarse;
  GridSpec gc;
  gc.dim = gf.dim;
  gc.spacing = 2.0 * gf.spacing;
  for (int a = 0; a < gf.dim; ++a) {
    gc.cells[static_cast<std::size_t>(a)] = gf.cells[static_cast<std::size_t>(a)] / 2;
    gc.topo[static_cast<std::size_t>(a)] = gf.topo[static_cast<std::size_t>(a)];
    gc.origin[static_cast<std::size_t>(a)] =
        gf.periodic(a) ? gc.cells[static_cast<std::size_t>(a)] / 2 : 0.0;
  }
  gc.validate();
  coarse.grid = gc;
  coarse.singular = fine.singular;

  for (int k = 0; k < gc.dim; ++k) {
    std::array<bool, 3> half{false, false, false};
    half[static_cast<std::size_t>(k)] = true;
    LatticeField shape(gc, half);
    auto& out = coarse.g[static_cast<std::size_t>(k)];
    out.assign(static_cast<std::size_t>(shape.count()), 0.0);
    parallel_for(shape.count(), [&, k](std::int64_t idx) {
      std::array<int, 3> e;
      shape.decompose(idx, e);
      double wsum = 0.0, val = 0.0;
      // iterate transverse offsets in {-1,0,1}^(d-1)
      std::array<int, 3> delta{0, 0, 0};
      for (int a = 0; a < gc.dim; ++a)
        if (a != k) delta[static_cast<std::size_t>(a)] = -1;
      while (true) {
        double w = 1.0;
        std::array<int, 3> f{0, 0, 0};
        bool alive = true;
        for (int a = 0; a < gc.dim; ++a) {
          if (a == k) {
            f[static_cast<std::size_t>(a)] = 2 * e[static_cast<std::size_t>(a)];
            continue;
          }
          int pos = 2 * e[static_cast<std::size_t>(a)] + delta[static_cast<std::size_t>(a)];
          w *= delta[static_cast<std::size_t>(a)] == 0 ? 0.5 : 0.25;
          const int nodes_f = gf.nodes(a);
          if (gf.periodic(a)) {
            pos = (pos % nodes_f + nodes_f) % nodes_f;
          } else if (pos < 0 || pos >= nodes_f) {
            alive = false;
            break;
          }
          f[static_cast<std::size_t>(a)] = pos;
        }
        if (alive) {
          std::array<int, 3> f2 = f;
          f2[static_cast<std::size_t>(k)] += 1;
          const double g1 = fine.g[static_cast<std::size_t>(k)][static_cast<std::size_t>(fine.edge_index(k, f))];
          const double g2 = fine.g[static_cast<std::size_t>(k)][static_cast<std::size_t>(fine.edge_index(k, f2))];
          const double series = g1 + g2 > 0.0 ? 2.0 * g1 * g2 / (g1 + g2) : 0.0;
          val += w * series;
          wsum += w;
        }
        int a = 0;
        for (; a < gc.dim; ++a) {
          if (a == k) continue;
          if (++delta[static_cast<std::size_t>(a)] <= 1) break;
          delta[static_cast<std::size_t>(a)] = -1;
        }
        if (a == gc.dim) break;
      }
      out[static_cast<std::size_t>(idx)] = wsum > 0.0 ? val / wsum : 0.0;
    });
  }

  // Constrained coarse rows: the image of constrained fine rows (faces map
  // to faces under index halving).
  LatticeField cshape = coarse.node_field();
  coarse.cmask.assign(static_cast<std::size_t>(cshape.count()), 0);
  LatticeField fshape(gf, {false, false, false});
  parallel_for(cshape.count(), [&](std::int64_t idx) {
    std::array<int, 3> i;
    cshape.decompose(idx, i);
    std::array<int, 3> f{0, 0, 0};
    for (int a = 0; a < gc.dim; ++a) f[static_cast<std::size_t>(a)] = 2 * i[static_cast<std::size_t>(a)];
    coarse.cmask[static_cast<std::size_t>(idx)] = fine.cmask[static_cast<std::size_t>(fshape.flat(f))];
  });
  return coarse;
}

// uf += P uc, d-linear interpolation. Constrained fine rows stay zero.
inline void prolong_add(const LevelOp& fl, const LevelOp& cl, const LatticeField& uc,
                        LatticeField& uf) {
  parallel_for(uf.count(), [&](std::int64_t idx) {
    if (fl.cmask[static_cast<std::size_t>(idx)]) return;
    std::array<int, 3> i;
    uf.decompose(idx, i);
    double acc = 0.0;
    const int dim = fl.grid.dim;
    const int nterms = 1 << dim;
    for (int m = 0; m < nterms; ++m) {
      double w = 1.0;
      std::array<int, 3> c{0, 0, 0};
      bool alive = true;
      for (int a = 0; a < dim && alive; ++a) {
        const int ia = i[static_cast<std::size_t>(a)];
        const int pick = (m >> a) & 1;
        if (ia % 2 == 0) {
          if (pick) { alive = false; break; }
          c[static_cast<std::size_t>(a)] = ia / 2;
        } else {
          w *= 0.5;
          int ca = (ia - 1) / 2 + pick;
          const int nc = cl.grid.nodes(a);
          if (cl.grid.periodic(a)) ca %= nc;
          else if (ca >= nc) { alive = false; break; }
          c[static_cast<std::size_t>(a)] = ca;
        }
      }
      if (alive) acc += w * uc.at(c);
    }
    uf.v[static_cast<std::size_t>(idx)] += acc;
  });
}

// Full weighting, the adjoint of prolongation scaled by 2^-d.
inline LatticeField restrict_full(const LevelOp& fl, const LevelOp& cl, const LatticeField& rf) {
  LatticeField rc = cl.node_field();
  const int dim = fl.grid.dim;
  const double scale = 1.0 / static_cast<double>(1 << dim);
  parallel_for(rc.count(), [&](std::int64_t idx) {
    if (cl.cmask[static_cast<std::size_t>(idx)]) return;
    std::array<int, 3> j;
    rc.decompose(idx, j);
    std::array<int, 3> delta{0, 0, 0};
    for (int a = 0; a < dim; ++a) delta[static_cast<std::size_t>(a)] = -1;
    double acc = 0.0;
    while (true) {
      double w = 1.0;
      std::array<int, 3> f{0, 0, 0};
      bool alive = true;
      for (int a = 0; a < dim; ++a) {
        int pos = 2 * j[static_cast<std::size_t>(a)] + delta[static_cast<std::size_t>(a)];
        if (delta[static_cast<std::size_t>(a)] != 0) w *= 0.5;
        const int nf = fl.grid.nodes(a);
        if (fl.grid.periodic(a)) {
          pos = (pos % nf + nf) % nf;
        } else if (pos < 0 || pos >= nf) {
          alive = false;
          break;
        }
        f[static_cast<std::size_t>(a)] = pos;
      }
      if (alive) acc += w * rf.at(f);
      int a = 0;
      for (; a < dim; ++a) {
        if (++delta[static_cast<std::size_t>(a)] <= 1) break;
        delta[static_cast<std::size_t>(a)] = -1;
      }
      if (a == dim) break;
    }
    rc.v[static_cast<std::size_t>(idx)] = scale * acc;
  });
  return rc;
}

struct MgHierarchy {
  std::vector<LevelOp> levels;
  int presmooth = 2;
  int postsmooth = 2;
  int coarse_sweeps = 50;

  void vcycle(std::size_t l, const LatticeField& b, LatticeField& u) const {
    const LevelOp& L = levels[l];
    u.fill(0.0);
    if (l + 1 == levels.size()) {
      for (int s = 0; s < coarse_sweeps; ++s) {
        L.gs_color(u, b, 0);
        L.gs_color(u, b, 1);
        L.gs_color(u, b, 1);
        L.gs_color(u, b, 0);
      }
      if (L.singular) subtract_mean(u);
      return;
    }
    for (int s = 0; s < presmooth; ++s) {
      L.gs_color(u, b, 0);
      L.gs_color(u, b, 1);
    }
    LatticeField r = L.node_field();
    L.apply(u, r);
    parallel_for(r.count(), [&](std::int64_t i) {
      r.v[static_cast<std::size_t>(i)] = b.v[static_cast<std::size_t>(i)] - r.v[static_cast<std::size_t>(i)];
    });
    parallel_for(r.count(), [&](std::int64_t i) {
      if (L.cmask[static_cast<std::size_t>(i)]) r.v[static_cast<std::size_t>(i)] = 0.0;
    });
    LatticeField bc = restrict_full(L, levels[l + 1], r);
    if (levels[l + 1].singular) subtract_mean(bc);
    LatticeField uc = levels[l + 1].node_field();
    vcycle(l + 1, bc, uc);
    prolong_add(L, levels[l + 1], uc, u);
    for (int s = 0; s < postsmooth; ++s) {
      L.gs_color(u, b, 1);
      L.gs_color(u, b, 0);
    }
    if (l == 0 && L.singular) subtract_mean(u);
  }
};

inline bool can_coarsen(const GridSpec& g) {
  for (int a = 0; a < g.dim; ++a) {
    const int c = g.cells[static_cast<std::size_t>(a)];
    if (c % 2 != 0 || c < 8) return false;
  }
  return true;
}

// Finest level from the problem; empty result if no coarsening is possible.
inline MgHierarchy build_hierarchy(const EllipticProblem& P) {
  MgHierarchy h;
  if (!can_coarsen(P.grid)) return h;
  LevelOp L0;
  L0.grid = P.grid;
  L0.singular = P.bc.mean_zero;
  L0.cmask = constrained_mask(P.grid, P.bc);
  for (int k = 0; k < P.grid.dim; ++k) {
    std::array<bool, 3> half{false, false, false};
    half[static_cast<std::size_t>(k)] = true;
    LatticeField shape(P.grid, half);
    auto& gk = L0.g[static_cast<std::size_t>(k)];
    gk.assign(static_cast<std::size_t>(shape.count()), 1.0);
    if (P.coeff) {
      parallel_for(shape.count(), [&, k](std::int64_t e) {
        gk[static_cast<std::size_t>(e)] = P.coeff->diag(k, e);
      });
    }
  }
  h.levels.push_back(std::move(L0));
  while (can_coarsen(h.levels.back().grid)) h.levels.push_back(coarsen(h.levels.back()));
  return h;
}

}  // namespace detail

// --------------------------------------------------------------------------
// Krylov drivers.
// --------------------------------------------------------------------------

namespace detail {

using Precond = std::function<void(const LatticeField&, LatticeField&)>;

inline SolveStats pcg(const EllipticProblem& P, const LatticeField& b, LatticeField& u,
                      const SolveOptions& opts, const Precond& M, const std::string& method) {
  SolveStats st;
  st.method = method;
  const double bnorm = norm2(b);
  LatticeField r = residual_field(P, b, u);
  LatticeField z = LatticeField(P.grid, {false, false, false});
  LatticeField p = z, Ap = z;
  M(r, z);
  if (P.bc.mean_zero) subtract_mean(z);
  p = z;
  double rz = dot(r, z);
  double rnorm = norm2(r);
  st.history.push_back(rnorm / residual_scale(P, bnorm, norm2(u)));
  if (st.history.back() <= opts.tol) {
    st.rel_residual = st.history.back();
    return st;
  }
  for (int it = 1; it <= opts.max_iter; ++it) {
    apply_operator(P, p, Ap);
    mask_constrained(P.bc, Ap);
    const double pAp = dot(p, Ap);
    if (!(pAp > 0.0)) {
      if (rnorm == 0.0) break;
      throw InvariantError("conjugate gradients: operator is not positive definite on the free space");
    }
    const double alpha = rz / pAp;
    axpy(alpha, p, u);
    axpy(-alpha, Ap, r);
    if (P.bc.mean_zero) subtract_mean(r);
    rnorm = norm2(r);
    const double rel = rnorm / residual_scale(P, bnorm, norm2(u));
    st.history.push_back(rel);
    st.iterations = it;
    if (opts.verbose && it % 50 == 0) log_debug("pcg iter %d rel %.3e", it, rel);
    if (rel <= opts.tol) {
      st.rel_residual = rel;
      return st;
    }
    M(r, z);
    if (P.bc.mean_zero) subtract_mean(z);
    const double rz_new = dot(r, z);
    const double beta = rz_new / rz;
    rz = rz_new;
    parallel_for(p.count(), [&](std::int64_t i) {
      p.v[static_cast<std::size_t>(i)] = z.v[static_cast<std::size_t>(i)] + beta * p.v[static_cast<std::size_t>(i)];
    });
  }
  st.rel_residual = st.history.back();
  if (st.rel_residual > opts.tol)
    throw SolveError("conjugate gradients did not reach tol " + format_double(opts.tol) +
                         " in " + std::to_string(opts.max_iter) + " iterations",
                     st.history);
  return st;
}

inline SolveStats bicgstab(const EllipticProblem& P, const LatticeField& b, LatticeField& u,
                           const SolveOptions& opts, const Precond& M, const std::string& method) {
  SolveStats st;
  st.method = method;
  const double bnorm = norm2(b);
  LatticeField r = residual_field(P, b, u);
  const LatticeField rhat = r;
  LatticeField p(P.grid, {false, false, false}), v = p, s = p, t = p, phat = p, shat = p;
  double rho = 1.0, alpha = 1.0, omega = 1.0;
  double rnorm = norm2(r);
  st.history.push_back(rnorm / residual_scale(P, bnorm, norm2(u)));
  if (st.history.back() <= opts.tol) {
    st.rel_residual = st.history.back();
    return st;
  }
  for (int it = 1; it <= opts.max_iter; ++it) {
    const double rho1 = dot(rhat, r);
    if (std::abs(rho1) < 1e-300) throw SolveError("bicgstab breakdown (rho)", st.history);
    const double beta = (rho1 / rho) * (alpha / omega);
    parallel_for(p.count(), [&](std::int64_t i) {
      p.v[static_cast<std::size_t>(i)] =
          r.v[static_cast<std::size_t>(i)] +
          beta * (p.v[static_cast<std::size_t>(i)] - omega * v.v[static_cast<std::size_t>(i)]);
    });
    M(p, phat);
    if (P.bc.mean_zero) subtract_mean(phat);
    apply_operator(P, phat, v);
    mask_constrained(P.bc, v);
    alpha = rho1 / dot(rhat, v);
    parallel_for(s.count(), [&](std::int64_t i) {
      s.v[static_cast<std::size_t>(i)] = r.v[static_cast<std::size_t>(i)] - alpha * v.v[static_cast<std::size_t>(i)];
    });
    M(s, shat);
    if (P.bc.mean_zero) subtract_mean(shat);
    apply_operator(P, shat, t);
    mask_constrained(P.bc, t);
    const double tt = dot(t, t);
    omega = tt > 0.0 ? dot(t, s) / tt : 0.0;
    axpy(alpha, phat, u);
    axpy(omega, shat, u);
    parallel_for(r.count(), [&](std::int64_t i) {
      r.v[static_cast<std::size_t>(i)] = s.v[static_cast<std::size_t>(i)] - omega * t.v[static_cast<std::size_t>(i)];
    });
    if (P.bc.mean_zero) subtract_mean(r);
    rho = rho1;
    rnorm = norm2(r);
    const double rel = rnorm / residual_scale(P, bnorm, norm2(u));
    st.history.push_back(rel);
    st.iterations = it;
    if (opts.verbose && it % 50 == 0) log_debug("bicgstab iter %d rel %.3e", it, rel);
    if (rel <= opts.tol) {
      st.rel_residual = rel;
      return st;
    }
    if (omega == 0.0) throw SolveError("bicgstab breakdown (omega)", st.history);
  }
  st.rel_residual = st.history.back();
  throw SolveError("bicgstab did not reach tol " + format_double(opts.tol) + " in " +
                       std::to_string(opts.max_iter) + " iterations",
                   st.history);
}

}  // namespace detail

// Jacobi scaling z = r / diag(A); diag from the same stencil as the operator.
inline std::vector<double> operator_diagonal(const EllipticProblem& P) {
  LatticeField shape(P.grid, {false, false, false});
  std::vector<double> diag(shape.v.size(), 0.0);
  const double inv_h2 = 1.0 / (P.grid.spacing * P.grid.spacing);
  // k-edge lattice sizes, for flat indexing without building fields
  std::array<std::array<int, 3>, 3> esize{};
  for (int k = 0; k < P.grid.dim; ++k)
    for (int a = 0; a < P.grid.dim; ++a)
      esize[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)] =
          a == k ? P.grid.cells[static_cast<std::size_t>(a)] : P.grid.nodes(a);
  parallel_for(shape.count(), [&](std::int64_t idx) {
    std::array<int, 3> i;
    shape.decompose(idx, i);
    double dsum = 0.0;
    for (int k = 0; k < P.grid.dim; ++k) {
      const int ik = i[static_cast<std::size_t>(k)];
      const int cells_k = P.grid.cells[static_cast<std::size_t>(k)];
      for (int side = 0; side < 2; ++side) {
        int ek = side == 0 ? ik : ik - 1;
        if (P.grid.periodic(k)) {
          ek = (ek % cells_k + cells_k) % cells_k;
        } else if (ek < 0 || ek >= cells_k) {
          continue;
        }
        if (!P.coeff) {
          dsum += 1.0;
          continue;
        }
        std::array<int, 3> e = i;
        e[static_cast<std::size_t>(k)] = ek;
        std::int64_t eidx = 0;
        for (int a = P.grid.dim - 1; a >= 0; --a)
          eidx = eidx * esize[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)] +
                 e[static_cast<std::size_t>(a)];
        dsum += P.coeff->diag(k, eidx);
      }
    }
    diag[static_cast<std::size_t>(idx)] = dsum > 0.0 ? dsum * inv_h2 : 1.0;
  });
  return diag;
}

// Entry point. Picks conjugate gradients when the operator is symmetric
// (axis-diagonal coefficients, or symmetric entries on a full torus) and
// BiCGStab otherwise; multigrid preconditioning whenever the coefficients
// are axis-diagonal and the grid coarsens.
inline SolveStats solve_elliptic(const EllipticProblem& P, const LatticeField& rhs,
                                 LatticeField& u, const SolveOptions& opts = {}) {
  check_tol(opts.tol);
  P.bc.validate(P.grid);
  if (!u.grid.same_layout(P.grid) || !rhs.grid.same_layout(P.grid))
    throw ConfigError("solution and right-hand side must live on the problem grid");

  apply_constraints(P.bc, u);
  LatticeField b = rhs;
  mask_constrained(P.bc, b);
  if (P.bc.mean_zero) {
    subtract_mean(b);
    subtract_mean(u);
  }

  bool all_periodic = true;
  for (int a = 0; a < P.grid.dim; ++a) all_periodic &= P.grid.periodic(a);
  const bool axis_diag = !P.coeff || P.coeff->axis_diagonal();
  const bool symmetric = axis_diag || (P.coeff->symmetric() && all_periodic);

  // Zero data, zero rhs: the solution is exactly zero; do not let roundoff in.
  if (norm2(b) == 0.0) {
    bool data_zero = true;
    for (int a = 0; a < P.grid.dim && data_zero; ++a)
      for (int s = 0; s < 2 && data_zero; ++s)
        for (double dv : P.bc.data[static_cast<std::size_t>(a)][static_cast<std::size_t>(s)])
          if (dv != 0.0) data_zero = false;
    if (data_zero) {
      u.fill(0.0);
      SolveStats st;
      st.method = "trivial";
      st.history.push_back(0.0);
      return st;
    }
  }

  auto want_mg = opts.precond == SolveOptions::Precond::Multigrid ||
                 (opts.precond == SolveOptions::Precond::Auto && axis_diag);
  detail::MgHierarchy mg;
  if (want_mg && axis_diag) mg = detail::build_hierarchy(P);
  if (opts.precond == SolveOptions::Precond::Multigrid && mg.levels.size() < 2)
    throw ConfigError("multigrid preconditioner requires even axis sizes of at least 8 cells");

  detail::Precond M;
  std::string pname;
  if (mg.levels.size() >= 2) {
    pname = "mg";
    M = [&mg](const LatticeField& r, LatticeField& z) { mg.vcycle(0, r, z); };
  } else if (opts.precond == SolveOptions::Precond::None) {
    pname = "none";
    M = [](const LatticeField& r, LatticeField& z) { z = r; };
  } else {
    pname = "diag";
    auto diag = std::make_shared<std::vector<double>>(operator_diagonal(P));
    M = [diag](const LatticeField& r, LatticeField& z) {
      z = r;
      parallel_for(static_cast<std::int64_t>(z.v.size()), [&](std::int64_t i) {
        z.v[static_cast<std::size_t>(i)] /= (*diag)[static_cast<std::size_t>(i)];
      });
    };
  }

  SolveStats st = symmetric ? detail::pcg(P, b, u, opts, M, "pcg+" + pname)
                            : detail::bicgstab(P, b, u, opts, M, "bicgstab+" + pname);
  if (P.bc.mean_zero) subtract_mean(u);
  log_info("solve %s: %d iters, rel %.3e", st.method.c_str(), st.iterations, st.rel_residual);
  return st;
}

}  // namespace hshg
