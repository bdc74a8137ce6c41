#include "conewise/atomic_decomposition.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "conewise/error.hpp"
#include "conewise/lipschitz_domain.hpp"
#include "conewise/littlewood_paley.hpp"
#include "conewise/util.hpp"

namespace conewise {

namespace {

constexpr int kMaxLevels = 24;

// The grid seen as (N0, N1, L) with the last axis contiguous.
struct Box3 {
  IVec N{1, 1, 1};
  explicit Box3(const GridSpec& g) {
    for (int a = 0; a < g.n; ++a) N[3 - g.n + a] = g.sizes[a];
  }
  std::size_t rows() const { return static_cast<std::size_t>(N[0]) * N[1]; }
  int L() const { return N[2]; }
};

struct Chord {
  int d0, d1, m;
};

// Chords of the closed lattice ball |o| <= R (cells).
std::vector<Chord> closed_ball_chords(const Box3& b, int R, long& count) {
  std::vector<Chord> out;
  count = 0;
  const int r0 = b.N[0] > 1 ? R : 0, r1 = b.N[1] > 1 ? R : 0;
  const long R2 = static_cast<long>(R) * R;
  for (int d0 = -r0; d0 <= r0; ++d0)
    for (int d1 = -r1; d1 <= r1; ++d1) {
      const long s = R2 - static_cast<long>(d0) * d0 - static_cast<long>(d1) * d1;
      if (s < 0) continue;
      long m = static_cast<long>(std::floor(std::sqrt(static_cast<double>(s))));
      while (m * m > s) --m;
      while ((m + 1) * (m + 1) <= s) ++m;
      out.push_back({d0, d1, static_cast<int>(m)});
      count += 2 * m + 1;
    }
  return out;
}

std::vector<char> complement(const std::vector<char>& m) {
  std::vector<char> c(m.size());
  for (std::size_t k = 0; k < m.size(); ++k) c[k] = m[k] ? 0 : 1;
  return c;
}

// d(x, O^c) with the points beyond the box counted in O^c.
std::vector<double> inner_distance(const GridSpec& g, const std::vector<char>& O) {
  return distance_to_set(g, complement(O), true);
}

double offset_norm(const GridSpec& g, const IVec& a, const IVec& b) {
  double s = 0.0;
  for (int i = 0; i < g.n; ++i) s += double(a[i] - b[i]) * double(a[i] - b[i]);
  return std::sqrt(s) * g.h;
}

// Iterates over the window's lattice points; f(k_window, grid_index).
template <class F>
void for_window(const GridSpec& g, const Window& w, F&& f) {
  const std::size_t np = w.points(g.n);
  IVec off{0, 0, 0};
  for (std::size_t k = 0; k < np; ++k) {
    IVec idx{0, 0, 0};
    for (int a = 0; a < g.n; ++a) idx[a] = w.lo[a] + off[a];
    f(k, idx);
    for (int a = g.n - 1; a >= 0; --a) {
      if (++off[a] < w.shape[a]) break;
      off[a] = 0;
    }
  }
}

Window clipped_box(const GridSpec& g, const IVec& c, int half) {
  Window w;
  for (int a = 0; a < g.n; ++a) {
    const int lo = std::max(0, c[a] - half), hi = std::min(g.sizes[a] - 1, c[a] + half);
    w.lo[a] = lo;
    w.shape[a] = hi - lo + 1;
  }
  return w;
}

RVec position(const GridSpec& g, const IVec& i) {
  RVec x{0, 0, 0};
  for (int a = 0; a < g.n; ++a) x[a] = g.coord(a, i[a]);
  return x;
}

}  // namespace

void DecompositionParams::validate(int n) const {
  require(p > static_cast<double>(n) / (n + 1) && p <= 1.0, ErrorCode::kInvalidArgument,
          "p must lie in (n/(n+1), 1]");
  require(gamma > 0.0 && gamma < 1.0, ErrorCode::kInvalidArgument, "gamma must lie in (0, 1)");
  require(nu > 0.0 && nu < 1.0, ErrorCode::kInvalidArgument, "nu must lie in (0, 1)");
  require(beta > 0.0, ErrorCode::kInvalidArgument, "beta must be positive");
}

double DecompositionParams::beta_used() const { return std::min(beta, nu); }

double unit_ball_volume(int n) { return std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0 + 1.0); }
double ball_volume(int n, double r) { return unit_ball_volume(n) * std::pow(r, n); }

LevelSets level_sets(const GridSpec& g, const std::vector<double>& SU) {
  require(SU.size() == g.points(), ErrorCode::kDimensionMismatch, "area integral size mismatch");
  double mx = 0.0, mn = INFINITY;
  for (double v : SU) {
    require(std::isfinite(v), ErrorCode::kInvalidArgument, "area integral is not finite");
    if (v > 0.0) {
      mx = std::max(mx, v);
      mn = std::min(mn, v);
    }
  }
  LevelSets L;
  if (mx == 0.0) return L;
  L.k_lo = static_cast<int>(std::floor(std::log2(mn)));
  const int k_hi = static_cast<int>(std::ceil(std::log2(mx)));
  for (int k = L.k_lo; k <= k_hi; ++k) {
    const double thr = std::ldexp(1.0, k);
    std::vector<char> s(SU.size());
    for (std::size_t i = 0; i < SU.size(); ++i) s[i] = SU[i] > thr ? 1 : 0;
    L.sets.push_back(std::move(s));
  }
  return L;
}

std::vector<int> maximal_radii(const GridSpec& g) {
  int smallest = g.sizes[0];
  for (int a = 1; a < g.n; ++a) smallest = std::min(smallest, g.sizes[a]);
  const int rmax = std::max(1, smallest / 3);
  // Every radius up to 16 cells, then a 2^(1/8) progression.
  std::vector<int> r;
  for (int i = 0; i <= std::min(16, rmax); ++i) r.push_back(i);
  while (r.back() < rmax) {
    const int next = std::max(r.back() + 1, static_cast<int>(std::ceil(r.back() * std::exp2(0.125))));
    r.push_back(std::min(next, rmax));
  }
  return r;
}

DensitySet density_enlarge(const GridSpec& g, const std::vector<char>& O, double gamma) {
  require(O.size() == g.points(), ErrorCode::kDimensionMismatch, "mask size mismatch");
  require(gamma > 0.0 && gamma < 1.0, ErrorCode::kInvalidArgument, "gamma must lie in (0, 1)");
  DensitySet out;
  out.set.assign(O.size(), 0);
  const long count = std::count(O.begin(), O.end(), 1);
  if (count == 0) return out;

  const Box3 b(g);
  const int L = b.L();
  const auto radii = maximal_radii(g);
  std::vector<std::vector<Chord>> chords;
  std::vector<double> threshold, ball_count;
  for (int r : radii) {
    long c = 0;
    auto ch = closed_ball_chords(b, r, c);
    const double thr = (1.0 - gamma) * static_cast<double>(c);
    if (static_cast<double>(count) <= thr) break;  // no ball this large can exceed the threshold
    chords.push_back(std::move(ch));
    threshold.push_back(thr);
    ball_count.push_back(static_cast<double>(c));
  }
  // inner[s] = #{offsets o : |o|^2 < s}; a ball around x holds no point of O
  // closer than d(x, O), so radius r needs inner[d^2] < gamma |B_r|.
  const int rtop = chords.empty() ? 0 : radii[chords.size() - 1];
  const long s_top = static_cast<long>(rtop) * rtop + 1;
  std::vector<double> inner(static_cast<std::size_t>(s_top) + 1, 0.0);
  {
    std::vector<long> hist(static_cast<std::size_t>(s_top) + 1, 0);
    const int r0 = b.N[0] > 1 ? rtop : 0, r1 = b.N[1] > 1 ? rtop : 0;
    for (int d0 = -r0; d0 <= r0; ++d0)
      for (int d1 = -r1; d1 <= r1; ++d1)
        for (int d2 = -rtop; d2 <= rtop; ++d2) {
          const long q = long(d0) * d0 + long(d1) * d1 + long(d2) * d2;
          if (q < s_top) ++hist[q];
        }
    for (long q = 1; q <= s_top; ++q) inner[q] = inner[q - 1] + static_cast<double>(hist[q - 1]);
  }
  const std::size_t rows = b.rows();
  std::vector<long> pre(rows * (L + 1));
  for (std::size_t r = 0; r < rows; ++r) {
    long* p = pre.data() + r * (L + 1);
    p[0] = 0;
    for (int k = 0; k < L; ++k) p[k + 1] = p[k] + (O[r * L + k] ? 1 : 0);
  }
  const auto dO = distance_to_set(g, O, false);
  parallel_for(rows, [&](std::size_t row) {
    const int x0 = static_cast<int>(row / b.N[1]), x1 = static_cast<int>(row % b.N[1]);
    for (int x2 = 0; x2 < L; ++x2) {
      const std::size_t k = row * L + x2;
      if (O[k]) {
        out.set[k] = 1;
        continue;
      }
      const double dcell = dO[k] / g.h;
      const long d2 = std::min<long>(s_top, std::lround(dcell * dcell));
      for (std::size_t ri = 0; ri < chords.size(); ++ri) {
        if (radii[ri] < dcell - 1e-9) continue;
        if (inner[d2] >= gamma * ball_count[ri]) continue;
        long acc = 0;
        for (const auto& c : chords[ri]) {
          const int y0 = x0 + c.d0, y1 = x1 + c.d1;
          if (y0 < 0 || y0 >= b.N[0] || y1 < 0 || y1 >= b.N[1]) continue;
          const int lo = std::max(0, x2 - c.m), hi = std::min(L - 1, x2 + c.m);
          if (lo > hi) continue;
          const long* p = pre.data() + (static_cast<std::size_t>(y0) * b.N[1] + y1) * (L + 1);
          acc += p[hi + 1] - p[lo];
        }
        if (static_cast<double>(acc) > threshold[ri]) {
          out.set[k] = 1;
          break;
        }
      }
    }
  });
  out.ratio = static_cast<double>(std::count(out.set.begin(), out.set.end(), 1)) / static_cast<double>(count);
  return out;
}

WhitneyCover whitney_cover(const GridSpec& g, const std::vector<char>& O) {
  require(O.size() == g.points(), ErrorCode::kDimensionMismatch, "mask size mismatch");
  const long count = std::count(O.begin(), O.end(), 1);
  require(count > 0, ErrorCode::kPreconditionViolated, "Whitney cover of an empty set");
  require(static_cast<std::size_t>(count) < O.size(), ErrorCode::kPreconditionViolated,
          "Whitney cover needs a proper subset of the box");
  const auto D = inner_distance(g, O);
  std::vector<std::size_t> order;
  order.reserve(count);
  for (std::size_t k = 0; k < O.size(); ++k)
    if (O[k]) order.push_back(k);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return D[a] > D[b]; });

  WhitneyCover W;
  std::vector<char> covered(O.size(), 0);
  for (std::size_t k : order) {
    if (covered[k]) continue;
    const IVec c = g.unflat(k);
    const double r = D[k] / 10.0;
    W.centers.push_back(c);
    W.radii.push_back(r);
    W.dist.push_back(D[k]);
    const int half = static_cast<int>(std::ceil(r / g.h));
    for_window(g, clipped_box(g, c, half), [&](std::size_t, const IVec& y) {
      const std::size_t f = g.flat(y);
      if (O[f] && offset_norm(g, y, c) < r) covered[f] = 1;
    });
    covered[k] = 1;
  }

  // psi_j = 1 on B_j, 0 off 2B_j; phi_j = psi_j / sum psi on O.
  const std::size_t J = W.centers.size();
  std::vector<double> sum(O.size(), 0.0);
  std::vector<int> overlap(O.size(), 0);
  W.partition.resize(J);
  for (std::size_t j = 0; j < J; ++j) {
    const double r = W.radii[j];
    WindowField& F = W.partition[j];
    F.window = clipped_box(g, W.centers[j], static_cast<int>(std::ceil(2.0 * r / g.h)));
    F.values.assign(F.window.points(g.n), 0.0);
    for_window(g, F.window, [&](std::size_t q, const IVec& y) {
      const double s = offset_norm(g, y, W.centers[j]) / (2.0 * r);
      if (s >= 1.0) return;
      const std::size_t f = g.flat(y);
      ++overlap[f];
      const double v = lp_cutoff(s);
      F.values[q] = v;
      sum[f] += v;
    });
  }
  for (std::size_t j = 0; j < J; ++j) {
    WindowField& F = W.partition[j];
    for_window(g, F.window, [&](std::size_t q, const IVec& y) {
      const std::size_t f = g.flat(y);
      F.values[q] = O[f] && sum[f] > 0.0 ? F.values[q] / sum[f] : 0.0;
    });
  }
  W.max_overlap = *std::max_element(overlap.begin(), overlap.end());
  W.quarter_disjoint = true;
  for (std::size_t i = 0; i < J && W.quarter_disjoint; ++i)
    for (std::size_t j = i + 1; j < J; ++j)
      if (offset_norm(g, W.centers[i], W.centers[j]) < 0.25 * (W.radii[i] + W.radii[j])) {
        W.quarter_disjoint = false;
        break;
      }
  return W;
}

TentDecomposition decompose(const TentFunction& U, const std::optional<std::vector<char>>& omega,
                            const DecompositionParams& params) {
  U.validate();
  const GridSpec& g = U.grid();
  const int n = g.n;
  params.validate(n);
  const TLadder& lad = U.ladder;
  const std::size_t P = g.points();
  const int nc = U.slices.front().ncomp();

  TentDecomposition dec;
  dec.grid = g;
  dec.ladder = lad;
  dec.degree = U.degree();
  dec.params = params;
  dec.boundary_aware = omega.has_value();
  dec.C = params.C();
  dec.c_beta = params.c_beta();
  dec.energy = tent_energy(U);

  std::vector<char> Om(P, 1);
  if (omega) {
    require(omega->size() == P, ErrorCode::kDimensionMismatch, "domain mask size mismatch");
    Om = *omega;
    const auto DO = inner_distance(g, Om);
    for (std::size_t i = 0; i < lad.size(); ++i) {
      const double need = params.beta * lad.nodes[i] * (1.0 - 1e-12);
      for (int c = 0; c < nc; ++c) {
        const auto& s = U.slices[i].comp(c);
        for (std::size_t k = 0; k < P; ++k)
          require(s[k] == 0.0 || DO[k] >= need, ErrorCode::kPreconditionViolated,
                  "support of U leaves the tent over the domain");
      }
    }
  }
  if (dec.energy == 0.0) return dec;

  const auto SU = area_integral(U);
  LevelSets LS = level_sets(g, SU);
  const int k_hi = LS.k_lo + static_cast<int>(LS.sets.size()) - 1;
  const int k_floor = std::min(std::max(LS.k_lo, k_hi - kMaxLevels), k_hi - 1);
  // Lowest level: the cone shadow {SU > 0} of supp U.
  std::vector<std::vector<char>> O;
  for (int k = k_floor; k < k_hi; ++k) O.push_back(LS.sets[std::max(0, k - LS.k_lo)]);
  for (std::size_t q = 0; q < P; ++q) O.front()[q] = SU[q] > 0.0 ? 1 : 0;

  const std::size_t K = O.size();
  std::vector<std::vector<char>> Ostar(K);
  std::vector<double> ratios(K, 0.0);
  for (std::size_t i = K; i-- > 0;) {
    if (i + 1 < K && O[i] == O[i + 1]) {
      Ostar[i] = Ostar[i + 1];
      ratios[i] = ratios[i + 1];
      continue;
    }
    auto ds = density_enlarge(g, O[i], params.gamma);
    Ostar[i] = std::move(ds.set);
    ratios[i] = ds.ratio;
  }
  std::vector<std::vector<double>> Dstar(K + 1);
  for (std::size_t i = 0; i < K; ++i)
    Dstar[i] = (i > 0 && Ostar[i] == Ostar[i - 1]) ? Dstar[i - 1] : inner_distance(g, Ostar[i]);
  Dstar[K].assign(P, 0.0);
  for (std::size_t i = 0; i + 1 < K; ++i)
    for (std::size_t q = 0; q < P; ++q)
      require(!Ostar[i + 1][q] || Ostar[i][q], ErrorCode::kInternal, "density sets are not nested");

  // Mass outside every tent T_nu(O*_k) cannot be assigned.
  {
    double un = 0.0;
    for (std::size_t i = 0; i < lad.size(); ++i) {
      const double nt = params.nu * lad.nodes[i];
      double acc = 0.0;
      for (std::size_t q = 0; q < P; ++q) {
        if (Om[q] && Dstar[0][q] >= nt) continue;
        for (int c = 0; c < nc; ++c) acc += U.slices[i].comp(c)[q] * U.slices[i].comp(c)[q];
      }
      un += lad.weights[i] * acc;
    }
    dec.unassigned_energy = un * g.cell_volume();
    require(dec.unassigned_energy <= 1e-8 * dec.energy, ErrorCode::kBudgetExceeded,
            "tent function has mass outside the tents of its level sets (ladder or box too small)");
  }

  const double hn = g.cell_volume();
  const double C = dec.C;
  const double scaleA = std::pow(C, n * (0.5 - 1.0 / params.p));
  const double scaleL = std::pow(C, n * (1.0 / params.p - 0.5));
  for (std::size_t lev = 0; lev < K; ++lev) {
    if (lev + 1 < K && Ostar[lev] == Ostar[lev + 1]) continue;
    std::vector<char> target(P);
    for (std::size_t q = 0; q < P; ++q) target[q] = Ostar[lev][q] && Om[q];
    if (std::find(target.begin(), target.end(), 1) == target.end()) continue;
    const WhitneyCover W = whitney_cover(g, target);
    dec.max_overlap = std::max(dec.max_overlap, W.max_overlap);
    const auto& Dk = Dstar[lev];
    const auto& Dk1 = Dstar[lev + 1];
    const std::size_t J = W.centers.size();
    std::vector<std::optional<TentAtom>> slots(J);
    parallel_for(J, [&](std::size_t j) {
      const WindowField& F = W.partition[j];
      const std::size_t np = F.window.points(n);
      std::vector<std::size_t> map(np);
      for_window(g, F.window, [&](std::size_t q, const IVec& y) { map[q] = g.flat(y); });
      std::vector<std::vector<std::vector<double>>> data(lad.size());
      double mu = 0.0;
      int lo = -1, hi = -1;
      for (std::size_t i = 0; i < lad.size(); ++i) {
        const double nt = params.nu * lad.nodes[i];
        double acc = 0.0;
        bool any = false;
        std::vector<std::vector<double>> slice(nc, std::vector<double>(np, 0.0));
        for (std::size_t q = 0; q < np; ++q) {
          const double ph = F.values[q];
          if (ph == 0.0) continue;
          const std::size_t f = map[q];
          if (!(Dk[f] >= nt) || Dk1[f] >= nt) continue;
          for (int c = 0; c < nc; ++c) {
            const double v = U.slices[i].comp(c)[f] * ph;
            if (v == 0.0) continue;
            slice[c][q] = v;
            acc += v * v;
            any = true;
          }
        }
        if (any) {
          if (lo < 0) lo = static_cast<int>(i);
          hi = static_cast<int>(i) + 1;
          mu += lad.weights[i] * acc;
        }
        data[i] = std::move(slice);
      }
      mu *= hn;
      if (lo < 0 || mu == 0.0) return;
      const double vol = ball_volume(n, W.radii[j]);
      const double sA = std::pow(vol, 0.5 - 1.0 / params.p) / std::sqrt(mu) * scaleA;
      TentAtom at;
      at.A.window = F.window;
      at.A.slice_lo = lo;
      at.A.slice_hi = hi;
      at.A.degree = U.degree();
      for (int i = lo; i < hi; ++i) {
        for (auto& c : data[i])
          for (double& v : c) v *= sA;
        at.A.data.push_back(std::move(data[i]));
      }
      at.center_index = W.centers[j];
      at.center = position(g, W.centers[j]);
      at.whitney_radius = W.radii[j];
      at.radius = C * W.radii[j];
      at.lambda = std::pow(vol, 1.0 / params.p - 0.5) * std::sqrt(mu) * scaleL;
      at.level = k_floor + static_cast<int>(lev);
      at.index = static_cast<int>(j);
      slots[j] = std::move(at);
    });
    bool used = false;
    for (auto& s : slots)
      if (s) {
        dec.atoms.push_back(std::move(*s));
        used = true;
      }
    if (used) {
      dec.levels.push_back(k_floor + static_cast<int>(lev));
      dec.density_ratios.push_back(ratios[lev]);
    }
  }
  return dec;
}

TentFunction reconstruct(const TentDecomposition& dec) {
  TentFunction S = zero_tent(dec.grid, dec.degree, dec.ladder);
  for (const auto& a : dec.atoms) add_patch(S, a.A, a.lambda);
  return S;
}

AuditReport audit(TentDecomposition& dec, const TentFunction& U, const std::optional<std::vector<char>>& omega) {
  const GridSpec& g = dec.grid;
  const int n = g.n;
  const double slack = kGeometricSlackCells * g.h;
  const double p = dec.params.p;
  std::vector<double> DO;
  if (omega) DO = inner_distance(g, *omega);
  AuditReport rep;
  rep.atoms = static_cast<int>(dec.atoms.size());
  for (auto& a : dec.atoms) {
    const double R = a.radius;
    const double inner = dec.c_beta * R;
    const double tmax = 6.0 * dec.c_beta * R / dec.params.beta_used();
    bool in_tent = true, boxed = true;
    const std::size_t np = a.A.window.points(n);
    std::vector<double> dist(np);
    for_window(g, a.A.window, [&](std::size_t q, const IVec& y) { dist[q] = offset_norm(g, y, a.center_index); });
    for (int s = a.A.slice_lo; s < a.A.slice_hi; ++s) {
      const double t = dec.ladder.nodes[s];
      const auto& sl = a.A.data[s - a.A.slice_lo];
      for (std::size_t q = 0; q < np; ++q) {
        bool nz = false;
        for (const auto& c : sl) nz = nz || c[q] != 0.0;
        if (!nz) continue;
        if (dist[q] + t > R + slack) in_tent = false;
        if (dist[q] >= inner + slack || t >= tmax + slack) boxed = false;
      }
    }
    a.flags.in_tent = in_tent;
    a.flags.boxed = boxed;
    a.flags.interior5x = omega ? DO[g.flat(a.center_index)] >= 5.0 * inner - slack : true;
    const double budget = std::pow(ball_volume(n, R), 1.0 - 2.0 / p);
    const double e = patch_energy(g, dec.ladder, a.A);
    rep.max_energy_ratio = std::max(rep.max_energy_ratio, e / budget);
    a.flags.normalized = e <= budget * 1.1;
    rep.failed_in_tent += !a.flags.in_tent;
    rep.failed_boxed += !a.flags.boxed;
    rep.failed_interior += !a.flags.interior5x;
    rep.failed_normalized += !a.flags.normalized;
    rep.sum_lambda_p += std::pow(std::abs(a.lambda), p);
  }
  TentFunction S = reconstruct(dec);
  const double eU = tent_energy(U);
  for (std::size_t i = 0; i < S.slices.size(); ++i) S.slices[i] -= U.slices[i];
  rep.reconstruction_error = eU > 0.0 ? std::sqrt(tent_energy(S) / eU) : std::sqrt(tent_energy(S));
  rep.tent_norm_p = eU > 0.0 ? std::pow(tent_norm(U, p), p) : 0.0;
  rep.coefficient_ratio = rep.tent_norm_p > 0.0 ? rep.sum_lambda_p / rep.tent_norm_p : 0.0;
  return rep;
}

UnitNormalization unit_normalization(const TentDecomposition& dec) {
  require(dec.params.p == 1.0, ErrorCode::kInvalidArgument, "unit normalization is stated for p = 1");
  const int n = dec.grid.n;
  const double cb = dec.c_beta;
  UnitNormalization out;
  for (const auto& a : dec.atoms) {
    const double lam = std::pow(cb, n / 2.0) * a.lambda;
    const double e = std::pow(cb, -static_cast<double>(n)) * patch_energy(dec.grid, dec.ladder, a.A);
    out.max_deviation = std::max(out.max_deviation, std::abs(ball_volume(n, cb * a.radius) * e - 1.0));
    out.sum_lambda += std::abs(lam);
  }
  return out;
}

}  // namespace conewise
