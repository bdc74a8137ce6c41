#include "conewise/hardy_atoms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "conewise/error.hpp"
#include "conewise/littlewood_paley.hpp"
#include "conewise/util.hpp"
#include "fft.hpp"

namespace conewise {

namespace {

// Window points in row-major order; f(k_window, grid_index).
template <class F>
void for_window(int n, const Window& w, F&& f) {
  const std::size_t np = w.points(n);
  IVec off{0, 0, 0};
  for (std::size_t k = 0; k < np; ++k) {
    IVec idx{0, 0, 0};
    for (int a = 0; a < n; ++a) idx[a] = w.lo[a] + off[a];
    f(k, idx);
    for (int a = n - 1; a >= 0; --a) {
      if (++off[a] < w.shape[a]) break;
      off[a] = 0;
    }
  }
}

bool inside_grid(const GridSpec& g, const IVec& i) {
  for (int a = 0; a < g.n; ++a)
    if (i[a] < 0 || i[a] >= g.sizes[a]) return false;
  return true;
}

double cells_distance(int n, const IVec& a, const IVec& b) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += double(a[i] - b[i]) * double(a[i] - b[i]);
  return std::sqrt(s);
}

double window_l2(const GridSpec& g, const WindowForm& w) {
  double s = 0.0;
  for (const auto& c : w.comps)
    for (double v : c) s += v * v;
  return std::sqrt(s * g.cell_volume());
}

double ball_power(int n, double r, double e) { return std::pow(ball_volume(n, r), e); }

// A padded local lattice over the global index box [lo, hi]; local index 0
// sits at global index lo - pad. Values beyond the global grid read as zero.
struct Local {
  GridSpec grid;
  IVec origin{0, 0, 0};  // global index of local 0

  Local(const GridSpec& g, const IVec& lo, const IVec& hi, int pad) {
    grid = g;
    for (int a = 0; a < g.n; ++a) {
      origin[a] = lo[a] - pad;
      grid.sizes[a] = hi[a] - lo[a] + 1 + 2 * pad;
    }
    for (int a = 0; a < g.n; ++a) grid.origin[a] = g.coord(a, origin[a]);
  }
  IVec global(const IVec& l) const {
    IVec r{0, 0, 0};
    for (int a = 0; a < grid.n; ++a) r[a] = l[a] + origin[a];
    return r;
  }
  bool local(const IVec& gi, IVec& l) const {
    for (int a = 0; a < grid.n; ++a) {
      l[a] = gi[a] - origin[a];
      if (l[a] < 0 || l[a] >= grid.sizes[a]) return false;
    }
    return true;
  }
};

// Copies the part of w overlapping the local lattice; `complete` reports
// whether nothing nonzero was left out.
FormField load(const Local& L, const WindowForm& w, bool* complete = nullptr) {
  FormField f(L.grid, w.degree);
  bool ok = true;
  for_window(L.grid.n, w.window, [&](std::size_t k, const IVec& gi) {
    IVec l;
    const bool in = L.local(gi, l);
    for (int c = 0; c < f.ncomp(); ++c) {
      const double v = w.comps[c][k];
      if (v == 0.0) continue;
      if (in)
        f.comp(c)[L.grid.flat(l)] = v;
      else
        ok = false;
    }
  });
  if (complete) *complete = ok;
  return f;
}

// Nonzero part of a local field as a global window form.
WindowForm store(const GridSpec& g, const Local& L, const FormField& f) {
  std::vector<const std::vector<double>*> cs;
  for (int c = 0; c < f.ncomp(); ++c) cs.push_back(&f.comp(c));
  Window lw = nonzero_window(L.grid, cs);
  WindowForm out;
  out.degree = f.degree();
  out.comps.assign(f.ncomp(), {});
  if (lw.empty(g.n)) {
    out.window.shape = {0, 0, 0};
    return out;
  }
  out.window = lw;
  for (int a = 0; a < g.n; ++a) out.window.lo[a] = lw.lo[a] + L.origin[a];
  IVec hi{0, 0, 0};
  for (int a = 0; a < g.n; ++a) hi[a] = out.window.lo[a] + out.window.shape[a] - 1;
  require(inside_grid(g, out.window.lo) && inside_grid(g, hi), ErrorCode::kKernelWrap,
          "atom support reaches the edge of the box");
  for (auto& c : out.comps) c.assign(lw.points(g.n), 0.0);
  for_window(g.n, lw, [&](std::size_t k, const IVec& l) {
    for (int c = 0; c < f.ncomp(); ++c) out.comps[c][k] = f.comp(c)[L.grid.flat(l)];
  });
  return out;
}

// d(p, K) for K = {z : |z'| <= sigma z_n, 0 <= z_n <= tau}.
double truncated_cone_distance(const RVec& p, int n, double sigma, double tau) {
  double q2 = 0.0;
  for (int a = 0; a + 1 < n; ++a) q2 += p[a] * p[a];
  const double q = std::sqrt(q2), pn = p[n - 1];
  auto f = [&](double s) {
    const double l = std::max(0.0, q - sigma * s), v = pn - s;
    return l * l + v * v;
  };
  // f is convex; on [0, s_b] it is the quadratic with lateral excess, above s_b
  // only the vertical term remains.
  const double s_b = sigma > 0.0 ? std::min(tau, q / sigma) : tau;
  double best = std::min(f(0.0), f(tau));
  best = std::min(best, f(std::clamp((sigma * q + pn) / (1.0 + sigma * sigma), 0.0, s_b)));
  best = std::min(best, f(std::clamp(pn, s_b, tau)));
  best = std::min(best, f(s_b));
  return std::sqrt(best);
}

double slice_l2(const GridSpec& g, const std::vector<std::vector<double>>& comps) {
  double s = 0.0;
  for (const auto& c : comps)
    for (double v : c) s += v * v;
  return std::sqrt(s * g.cell_volume());
}

double kernel_l1(const SampledKernel& k) {
  double s = 0.0;
  for (double v : k.values[0]) s += std::abs(v);
  return s * std::pow(k.h, k.n);
}

// pi(A) and primitive(A) on a padded lattice around the patch; the same
// scatter as the operators, with each slice trimmed to its nonzero box.
struct LocalPair {
  Local L;
  FormField a, b;
};

LocalPair local_pi_primitive(const TentOperators& ops, const TentPatch& A) {
  const GridSpec& g = ops.grid();
  const int n = g.n;
  const auto& lad = ops.ladder();
  IVec lo{0, 0, 0}, hi{0, 0, 0};
  for (int a = 0; a < n; ++a) {
    int klo = 0, khi = 0;
    for (int s = A.slice_lo; s < A.slice_hi; ++s)
      for (const SampledKernel* K : {&ops.phi(s), &ops.dphi(s)}) {
        klo = std::min(klo, K->lo[a]);
        khi = std::max(khi, K->lo[a] + K->shape[a] - 1);
      }
    lo[a] = A.window.lo[a] + klo;
    hi[a] = A.window.lo[a] + A.window.shape[a] - 1 + khi;
  }
  LocalPair out{Local(g, lo, hi, 2), {}, {}};
  const Local& L = out.L;
  out.a = FormField(L.grid, A.degree + 1);
  out.b = FormField(L.grid, A.degree);
  std::array<std::size_t, kMaxGridDim> strides{0, 0, 0};
  {
    std::size_t acc = 1;
    for (int a = n - 1; a >= 0; --a) {
      strides[a] = acc;
      acc *= static_cast<std::size_t>(A.window.shape[a]);
    }
  }
  const auto& ob = basis(n, A.degree + 1);
  const double hn = g.cell_volume();
  for (int s = A.slice_lo; s < A.slice_hi; ++s) {
    const auto& slice = A.data[s - A.slice_lo];
    IVec blo{0, 0, 0}, bhi{-1, -1, -1};
    for (int a = 0; a < n; ++a) {
      blo[a] = A.window.shape[a];
      bhi[a] = -1;
    }
    for_window(n, Window{{0, 0, 0}, A.window.shape}, [&](std::size_t k, const IVec& i) {
      bool nz = false;
      for (const auto& c : slice) nz = nz || c[k] != 0.0;
      if (!nz) return;
      for (int a = 0; a < n; ++a) {
        blo[a] = std::min(blo[a], i[a]);
        bhi[a] = std::max(bhi[a], i[a]);
      }
    });
    if (bhi[0] < blo[0]) continue;
    Window sw;
    std::size_t offset = 0;
    for (int a = 0; a < n; ++a) {
      sw.lo[a] = A.window.lo[a] + blo[a] - L.origin[a];
      sw.shape[a] = bhi[a] - blo[a] + 1;
      offset += static_cast<std::size_t>(blo[a]) * strides[a];
    }
    for (int j = 0; j < n; ++j) {
      KernelTaps taps = kernel_taps(ops.dphi(s), j, lad.weights[s] * hn);
      for (std::size_t c = 0; c < ob.size(); ++c) {
        if (!ob[c].contains(j)) continue;
        const MultiIndex I = ob[c].without(j);
        scatter_accumulate(L.grid, slice[basis_position(n, I)].data() + offset, strides, sw, taps,
                           out.a.comp(static_cast<int>(c)).data(), insertion_sign(j, I));
      }
    }
    KernelTaps taps = kernel_taps(ops.phi(s), 0, lad.weights[s] * lad.nodes[s] * hn);
    for (int c = 0; c < out.b.ncomp(); ++c)
      scatter_accumulate(L.grid, slice[c].data() + offset, strides, sw, taps, out.b.comp(c).data());
  }
  return out;
}

}  // namespace

WindowForm crop(const FormField& u, const Window& w) {
  const GridSpec& g = u.grid();
  WindowForm out;
  out.window = w;
  out.degree = u.degree();
  out.comps.assign(u.ncomp(), std::vector<double>(w.points(g.n), 0.0));
  for_window(g.n, w, [&](std::size_t k, const IVec& i) {
    require(inside_grid(g, i), ErrorCode::kDimensionMismatch, "window leaves the grid");
    for (int c = 0; c < u.ncomp(); ++c) out.comps[c][k] = u.comp(c)[g.flat(i)];
  });
  return out;
}

FormField expand(const GridSpec& g, const WindowForm& w) {
  FormField u(g, w.degree);
  accumulate(u, w, 1.0);
  return u;
}

void accumulate(FormField& u, const WindowForm& w, double s) {
  const GridSpec& g = u.grid();
  require(u.degree() == w.degree, ErrorCode::kDegreeOutOfRange, "degree mismatch");
  for_window(g.n, w.window, [&](std::size_t k, const IVec& i) {
    require(inside_grid(g, i), ErrorCode::kDimensionMismatch, "window leaves the grid");
    for (int c = 0; c < u.ncomp(); ++c) u.comp(c)[g.flat(i)] += s * w.comps[c][k];
  });
}

const char* hardy_kind_name(HardyKind k) { return k == HardyKind::kHd ? "Hd" : "Hzd"; }

double pi_bound(const TentOperators& ops) {
  const GridSpec& g = ops.grid();
  const std::size_t P = g.points();
  std::vector<double> acc(P, 0.0);
  for (std::size_t i = 0; i < ops.ladder().size(); ++i) {
    const SampledKernel& K = ops.dphi(i);
    for (int j = 0; j < K.ncomp(); ++j) {
      std::vector<double> emb(P, 0.0);
      for (std::size_t q = 0; q < K.box_points(); ++q) {
        const double v = K.values[j][q];
        if (v == 0.0) continue;
        IVec off = K.offset_at(q), idx{0, 0, 0};
        for (int a = 0; a < g.n; ++a) idx[a] = ((off[a] % g.sizes[a]) + g.sizes[a]) % g.sizes[a];
        emb[g.flat(idx)] += v * g.cell_volume();
      }
      auto F = detail::fft_forward(g, emb);
      const double w = ops.ladder().weights[i];
      for (std::size_t k = 0; k < P; ++k) acc[k] += w * std::norm(F[k]);
    }
  }
  return std::sqrt(*std::max_element(acc.begin(), acc.end()));
}

std::vector<HardyAtom> atoms_from_tent(const TentOperators& ops, const TentDecomposition& dec, double kappa) {
  const GridSpec& g = ops.grid();
  require(dec.grid == g, ErrorCode::kDimensionMismatch, "decomposition grid differs from the operators");
  require(kappa > 0.0, ErrorCode::kInvalidArgument, "operator bound must be positive");
  const int n = g.n;
  const double p = dec.params.p;
  const auto& lad = ops.ladder();
  std::vector<double> phi_l1(lad.size());
  for (std::size_t i = 0; i < lad.size(); ++i) phi_l1[i] = kernel_l1(ops.phi(i));

  std::vector<HardyAtom> out(dec.atoms.size());
  parallel_for(dec.atoms.size(), [&](std::size_t k) {
    const TentAtom& T = dec.atoms[k];
    HardyAtom& H = out[k];
    H.kind = HardyKind::kHd;
    H.center = T.center;
    H.center_index = T.center_index;
    H.radius = T.radius;
    H.coefficient = T.lambda * kappa;
    H.parent = static_cast<int>(k);
    H.interior_ok = true;

    LocalPair P = local_pi_primitive(ops, T.A);
    FormField& a = P.a;
    FormField& b = P.b;
    a *= 1.0 / kappa;
    b *= 1.0 / kappa;
    const double na = l2_norm(a);
    H.exactness = na > 0.0 ? l2_norm(a - exterior_derivative(b)) / na : 0.0;
    H.exact_ok = H.exactness <= 1e-11;
    H.a = store(g, P.L, a);
    H.b = store(g, P.L, b);

    const double reach = T.radius / g.h + kGeometricSlackCells;
    auto within = [&](const WindowForm& f) {
      bool ok = true;
      for_window(n, f.window, [&](std::size_t q, const IVec& i) {
        for (const auto& c : f.comps)
          if (c[q] != 0.0 && cells_distance(n, i, T.center_index) > reach) ok = false;
      });
      return ok;
    };
    H.support_ok = within(H.a);
    H.b_support_ok = within(H.b);

    const double scale = ball_power(n, T.radius, 0.5 - 1.0 / p);
    H.size_ratio = na / scale;
    H.size_ok = H.size_ratio <= 1.0 + 1e-9;
    const double nb = l2_norm(b);
    H.b_constant = nb / (T.radius * scale);
    double young = 0.0;
    for (int s = T.A.slice_lo; s < T.A.slice_hi; ++s)
      young += lad.weights[s] * lad.nodes[s] * phi_l1[s] * slice_l2(g, T.A.data[s - T.A.slice_lo]);
    H.b_size_ok = nb <= young / kappa * (1.0 + 1e-9);
  });
  return out;
}

BetaReport beta_support_check(const TentOperators& ops, const FormField& u, const LipschitzGraphDomain& dom,
                              double a) {
  const GridSpec& g = ops.grid();
  require(u.grid() == g && dom.grid == g, ErrorCode::kDimensionMismatch, "field, domain and operators disagree");
  require(a > 0.0, ErrorCode::kInvalidArgument, "shell height must be positive");
  const double sigma = ops.spec().sigma, A = dom.A_certified;
  require(sigma * A < 1.0, ErrorCode::kPreconditionViolated, "sigma * A must be below 1");
  BetaReport rep;
  rep.a = a;
  rep.beta = a * (1.0 - sigma * A) / std::sqrt(1.0 + A * A);
  const auto closure = dom.closure_mask();
  rep.support_in_closure = true;
  for (int c = 0; c < u.ncomp(); ++c)
    for (std::size_t k = 0; k < closure.size(); ++k)
      if (u.comp(c)[k] != 0.0 && !closure[k]) rep.support_in_closure = false;

  TentFunction U = ops.q(u);
  const auto& lad = ops.ladder();
  rep.margins.assign(lad.size(), std::numeric_limits<double>::infinity());
  rep.pass = true;
  rep.min_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lad.size(); ++i) {
    const auto& S = U.slices[i];
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < g.points(); ++k) {
      bool nz = false;
      for (int c = 0; c < S.ncomp() && !nz; ++c) nz = S.comp(c)[k] != 0.0;
      if (nz) m = std::min(m, dom.dist_complement[k] / lad.nodes[i]);
    }
    rep.margins[i] = m;
    rep.min_margin = std::min(rep.min_margin, m);
    if (m < rep.beta - kGeometricSlackCells * g.h / lad.nodes[i]) rep.pass = false;
  }
  return rep;
}

InteriorSplit interior_split(const TentOperators& ops, const HardyAtom& atom, const TentDecomposition& dec,
                             const std::vector<double>& dist_omega) {
  const GridSpec& g = ops.grid();
  const int n = g.n;
  require(atom.kind == HardyKind::kHd, ErrorCode::kInvalidArgument, "only H^p_d atoms are split");
  require(atom.parent >= 0 && atom.parent < static_cast<int>(dec.atoms.size()), ErrorCode::kInvalidArgument,
          "atom has no tent parent in this decomposition");
  require(dist_omega.size() == g.points(), ErrorCode::kDimensionMismatch, "distance field size mismatch");
  const TentAtom& T = dec.atoms[atom.parent];
  const double h = g.h;
  const double p = dec.params.p;
  const double rho = dec.c_beta * T.radius;
  const double tau = 6.0 * dec.c_beta * T.radius / dec.params.beta_used();
  const double sigma = ops.spec().sigma;
  const double reach = rho + kGeometricSlackCells * h;

  InteriorSplit out;
  out.parent = atom.parent;

  // Index box of G = {x : d(x - x_c, K) <= rho + slack}.
  IVec lo{0, 0, 0}, hi{0, 0, 0};
  const IVec& c0 = T.center_index;
  for (int a = 0; a < n; ++a) {
    const bool vertical = a == n - 1;
    const int below = static_cast<int>(std::ceil((vertical ? reach : reach + sigma * tau) / h));
    const int above = static_cast<int>(std::ceil((vertical ? reach + tau : reach + sigma * tau) / h));
    lo[a] = std::max(0, c0[a] - below);
    hi[a] = std::min(g.sizes[a] - 1, c0[a] + above);
  }
  const int pad = static_cast<int>(std::ceil(rho / h)) + 2;
  Local L(g, lo, hi, pad);
  bool a_in = false, b_in = false;
  FormField aL = load(L, atom.a, &a_in);
  FormField bL = load(L, atom.b, &b_in);
  require(a_in && b_in, ErrorCode::kPreconditionViolated, "atom support escapes the cone neighbourhood");

  const std::size_t LP = L.grid.points();
  std::vector<char> G(LP, 0);
  {
    Window gw;
    for (int a = 0; a < n; ++a) {
      gw.lo[a] = lo[a] - L.origin[a];
      gw.shape[a] = hi[a] - lo[a] + 1;
    }
    for_window(n, gw, [&](std::size_t, const IVec& l) {
      RVec d{0, 0, 0};
      for (int a = 0; a < n; ++a) d[a] = (l[a] + L.origin[a] - c0[a]) * h;
      G[L.grid.flat(l)] = truncated_cone_distance(d, n, sigma, tau) <= reach ? 1 : 0;
    });
  }
  for (std::size_t k = 0; k < LP; ++k) {
    bool nz = false;
    for (int c = 0; c < aL.ncomp(); ++c) nz = nz || aL.comp(c)[k] != 0.0;
    for (int c = 0; c < bL.ncomp(); ++c) nz = nz || bL.comp(c)[k] != 0.0;
    require(!nz || G[k], ErrorCode::kPreconditionViolated, "atom support escapes the cone neighbourhood");
  }

  // Greedy cover of G by closed balls of radius rho / 2; centers are bucketed
  // by cells of that size so only neighbouring buckets are searched.
  std::vector<IVec> centers;
  const double half2 = (rho / 2 / h) * (rho / 2 / h);
  const int bs = std::max(1, static_cast<int>(std::ceil(rho / 2 / h)));
  IVec nb{1, 1, 1};
  for (int a = 0; a < n; ++a) nb[a] = L.grid.sizes[a] / bs + 1;
  std::vector<std::vector<int>> buckets(static_cast<std::size_t>(nb[0]) * nb[1] * nb[2]);
  auto bucket_of = [&](const IVec& l) {
    IVec q{0, 0, 0};
    for (int a = 0; a < n; ++a) q[a] = l[a] / bs;
    return q;
  };
  auto bucket_flat = [&](const IVec& q) { return (static_cast<std::size_t>(q[0]) * nb[1] + q[1]) * nb[2] + q[2]; };
  for (std::size_t k = 0; k < LP; ++k) {
    if (!G[k]) continue;
    const IVec l = L.grid.unflat(k);
    const IVec q = bucket_of(l);
    bool covered = false;
    IVec qlo{0, 0, 0}, qhi{0, 0, 0};
    for (int a = 0; a < n; ++a) {
      qlo[a] = std::max(0, q[a] - 1);
      qhi[a] = std::min(nb[a] - 1, q[a] + 1);
    }
    for (int q0 = qlo[0]; q0 <= qhi[0] && !covered; ++q0)
      for (int q1 = qlo[1]; q1 <= qhi[1] && !covered; ++q1)
        for (int q2 = qlo[2]; q2 <= qhi[2] && !covered; ++q2)
          for (int ci : buckets[bucket_flat({q0, q1, q2})]) {
            double s2 = 0.0;
            for (int a = 0; a < n; ++a) s2 += double(l[a] - centers[ci][a]) * double(l[a] - centers[ci][a]);
            if (s2 <= half2) {
              covered = true;
              break;
            }
          }
    if (covered) continue;
    buckets[bucket_flat(q)].push_back(static_cast<int>(centers.size()));
    centers.push_back(l);
  }
  out.M = static_cast<int>(centers.size());

  // psi_j = cutoff(|x - z_j| / rho): 1 on the half ball, 0 off the open ball.
  // Every ball shares the stencil; a ball's lattice is its box plus 2 cells.
  const int rb = static_cast<int>(std::ceil(rho / h));
  const int side = 2 * rb + 5;
  Window inner;
  for (int a = 0; a < n; ++a) {
    inner.lo[a] = 2;
    inner.shape[a] = 2 * rb + 1;
  }
  GridSpec bg = g;
  for (int a = 0; a < n; ++a) bg.sizes[a] = side;
  const std::size_t BP = bg.points();
  std::vector<double> stencil(BP, 0.0);
  const IVec mid{rb + 2, n > 1 ? rb + 2 : 0, n > 2 ? rb + 2 : 0};
  for_window(n, inner, [&](std::size_t, const IVec& q) {
    stencil[bg.flat(q)] = lp_cutoff(cells_distance(n, q, mid) * h / rho);
  });
  // Local index of ball-lattice point q for a ball centred at local z.
  auto to_L = [&](const IVec& z, const IVec& q) {
    IVec l{0, 0, 0};
    for (int a = 0; a < n; ++a) l[a] = z[a] - rb - 2 + q[a];
    return L.grid.flat(l);
  };
  std::vector<double> S(LP, 0.0);
  for (const IVec& z : centers)
    for_window(n, inner, [&](std::size_t, const IVec& q) { S[to_L(z, q)] += stencil[bg.flat(q)]; });

  FormField sum(L.grid, atom.a.degree);
  const double vol_exp = 1.0 / p - 0.5;
  for (const IVec& z : centers) {
    const IVec zg = L.global(z);
    IVec blo{0, 0, 0}, bhi{0, 0, 0};
    for (int a = 0; a < n; ++a) {
      blo[a] = zg[a] - rb;
      bhi[a] = zg[a] + rb;
    }
    Local B(g, blo, bhi, 2);
    FormField f(B.grid, bL.degree());
    std::vector<double> eta(BP, 0.0);
    bool any = false;
    for_window(n, inner, [&](std::size_t, const IVec& q) {
      const std::size_t k = bg.flat(q);
      if (stencil[k] == 0.0) return;
      const std::size_t lk = to_L(z, q);
      eta[k] = stencil[k] / std::max(S[lk], 1.0);
      for (int c = 0; c < f.ncomp(); ++c) {
        const double v = bL.comp(c)[lk] * eta[k];
        f.comp(c)[k] = v;
        any = any || v != 0.0;
      }
    });
    double g2max = 0.0;
    for_window(n, inner, [&](std::size_t, const IVec& q) {
      const std::size_t k = bg.flat(q);
      double s2 = 0.0;
      for (int a = 0; a < n; ++a) {
        const double d = (eta[k + bg.stride(a)] - eta[k]) / h;
        s2 += d * d;
      }
      g2max = std::max(g2max, s2);
    });
    out.grad_constant = std::max(out.grad_constant, std::sqrt(g2max) * T.radius);
    if (!any) continue;
    FormField df = exterior_derivative(f);
    double peak = 0.0;
    for (int c = 0; c < df.ncomp(); ++c)
      for (double v : df.comp(c)) peak = std::max(peak, std::abs(v));
    if (peak == 0.0) continue;
    // Far out on the fringe of b the squares underflow and 1/peak may
    // overflow; rescale exactly by a power of two first.
    int e = 0;
    std::frexp(peak, &e);
    auto rescale = [](FormField& x, int by) {
      for (int c = 0; c < x.ncomp(); ++c)
        for (double& v : x.comp(c)) v = std::scalbn(v, by);
    };
    rescale(df, -e);
    rescale(f, -e);
    const double unit = ball_power(n, rho, vol_exp) * l2_norm(df);
    const double mu = std::scalbn(unit, e);
    out.max_mu = std::max(out.max_mu, mu);
    // Running sum of mu_j a_j = d(eta_j b) on the cover's lattice.
    for_window(n, Window{{0, 0, 0}, bg.sizes}, [&](std::size_t, const IVec& q) {
      const std::size_t k = bg.flat(q), lk = to_L(z, q);
      for (int c = 0; c < df.ncomp(); ++c) sum.comp(c)[lk] += std::scalbn(df.comp(c)[k], e);
    });
    df *= 1.0 / unit;
    f *= 1.0 / unit;

    HardyAtom H;
    H.kind = HardyKind::kHzd;
    H.center_index = zg;
    for (int a = 0; a < n; ++a) H.center[a] = g.coord(a, zg[a]);
    H.radius = rho;
    H.coefficient = atom.coefficient * mu;
    H.parent = atom.parent;
    H.a = store(g, B, df);
    H.b = store(g, B, f);
    H.exactness = 0.0;
    H.exact_ok = true;
    const double scale = ball_power(n, rho, 0.5 - 1.0 / p);
    H.size_ratio = window_l2(g, H.a) / scale;
    H.size_ok = H.size_ratio <= 1.0 + 1e-9;
    H.b_constant = window_l2(g, H.b) / (rho * scale);
    H.b_size_ok = true;
    const double reach_cells = rho / h + kGeometricSlackCells;
    auto within = [&](const WindowForm& w) {
      bool ok = true;
      for_window(n, w.window, [&](std::size_t q, const IVec& i) {
        for (const auto& c : w.comps)
          if (c[q] != 0.0 && cells_distance(n, i, zg) > reach_cells) ok = false;
      });
      return ok;
    };
    H.support_ok = within(H.a);
    H.b_support_ok = within(H.b);
    H.interior_ok = dist_omega[g.flat(zg)] >= 4.0 * rho - kGeometricSlackCells * h;
    out.atoms.push_back(std::move(H));
  }

  const FormField db = exterior_derivative(bL);
  const double ndb = l2_norm(db), na = l2_norm(aL);
  out.partition_error = ndb > 0.0 ? l2_norm(sum - db) / ndb : l2_norm(sum);
  out.parent_error = na > 0.0 ? l2_norm(sum - aL) / na : l2_norm(sum);
  return out;
}

HardyResult hardy_decompose(const TentOperators& ops, const FormField& u, DecompositionParams params,
                            const LipschitzGraphDomain* domain, const HardyOptions& opts) {
  const GridSpec& g = ops.grid();
  const int n = g.n;
  require(u.grid() == g, ErrorCode::kDimensionMismatch, "field grid differs from the operators");
  require(u.degree() >= 1, ErrorCode::kDegreeOutOfRange, "Hardy atoms need a form of degree at least 1");
  params.validate(n);
  const double nu = l2_norm(u);
  HardyResult R;
  if (nu == 0.0) return R;
  if (u.degree() < n)
    require(l2_norm(exterior_derivative(u)) * g.h <= 1e-12 * nu, ErrorCode::kPreconditionViolated,
            "field is not closed");
  std::optional<std::vector<char>> omega;
  if (domain) {
    require(domain->grid == g, ErrorCode::kDimensionMismatch, "domain grid differs from the operators");
    const auto closure = domain->closure_mask();
    for (int c = 0; c < u.ncomp(); ++c)
      for (std::size_t k = 0; k < closure.size(); ++k)
        require(u.comp(c)[k] == 0.0 || closure[k], ErrorCode::kPreconditionViolated,
                "support of u leaves the closure of the domain");
    omega = domain->mask();
  }

  TentFunction U = ops.q(u);
  const auto& lad = ops.ladder();

  if (omega) {
    std::vector<char> outside(g.points());
    for (std::size_t k = 0; k < outside.size(); ++k) outside[k] = (*omega)[k] ? 0 : 1;
    const auto DO = distance_to_set(g, outside, true);
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < lad.size(); ++i)
      for (int c = 0; c < U.slices[i].ncomp(); ++c)
        for (std::size_t k = 0; k < g.points(); ++k)
          if (U.slices[i].comp(c)[k] != 0.0) m = std::min(m, DO[k] / lad.nodes[i]);
    require(m > 0.0, ErrorCode::kPreconditionViolated, "support of Q u touches the domain boundary");
    if (std::isfinite(m)) params.beta = m;
  }
  R.beta_measured = params.beta;

  R.tent = decompose(U, omega, params);
  R.tent_audit = audit(R.tent, U, omega);
  R.kappa = pi_bound(ops);
  std::vector<HardyAtom> parents = atoms_from_tent(ops, R.tent, R.kappa);
  R.parents = static_cast<int>(parents.size());
  for (const auto& H : parents) {
    R.primitive_constant = std::max(R.primitive_constant, H.b_constant);
    R.max_exactness = std::max(R.max_exactness, H.exactness);
  }

  R.fields_kept = opts.keep_fields;
  FormField synth(g, u.degree());
  auto take = [&](HardyAtom&& H) {
    if (!H.passed()) ++R.failed_atoms;
    accumulate(synth, H.a, H.coefficient);
    if (!opts.keep_fields) {
      H.a.comps = {};
      H.b.comps = {};
    }
    R.atoms.push_back(std::move(H));
  };
  if (omega) {
    std::vector<char> outside(g.points());
    for (std::size_t k = 0; k < outside.size(); ++k) outside[k] = (*omega)[k] ? 0 : 1;
    const auto D = distance_to_set(g, outside, false);
    for (const auto& H : parents)
      if (!H.passed()) ++R.failed_atoms;
    R.M_min = parents.empty() ? 0 : std::numeric_limits<int>::max();
    const std::size_t chunk = 16 * static_cast<std::size_t>(thread_count());
    for (std::size_t start = 0; start < parents.size(); start += chunk) {
      const std::size_t cnt = std::min(chunk, parents.size() - start);
      std::vector<InteriorSplit> splits(cnt);
      parallel_for(cnt, [&](std::size_t i) { splits[i] = interior_split(ops, parents[start + i], R.tent, D); });
      for (auto& s : splits) {
        R.M_min = std::min(R.M_min, s.M);
        R.M_max = std::max(R.M_max, s.M);
        R.grad_constant = std::max(R.grad_constant, s.grad_constant);
        R.max_mu = std::max(R.max_mu, s.max_mu);
        R.split_error = std::max(R.split_error, s.partition_error);
        for (auto& H : s.atoms) take(std::move(H));
      }
    }
  } else {
    for (auto& H : parents) take(std::move(H));
  }

  const FormField piQu = ops.pi(U, ConvolutionMode::kTransform);
  const double npi = l2_norm(piQu);
  R.synthesis_error = npi > 0.0 ? l2_norm(synth - piQu) / npi : l2_norm(synth);
  const FormField ta = convolve(u, ops.theta(lad.t_min), ConvolutionMode::kTransform);
  const FormField tb = convolve(u, ops.theta(lad.t_max), ConvolutionMode::kTransform);
  R.truncation_a = l2_norm(ta) / nu;
  R.truncation_b = l2_norm(tb) / nu;
  R.reconstruction = l2_norm(synth - (ta - tb)) / nu;

  for (const auto& H : R.atoms) R.sum_coefficients_p += std::pow(std::abs(H.coefficient), params.p);
  R.proxy_norm_p = R.tent_audit.tent_norm_p;
  R.coefficient_ratio = R.proxy_norm_p > 0.0 ? R.sum_coefficients_p / R.proxy_norm_p : 0.0;
  return R;
}

}  // namespace conewise
