#include "conewise/lipschitz_domain.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "conewise/error.hpp"
#include "conewise/util.hpp"

namespace conewise {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One-dimensional squared distance transform of sampled function f
// (lower envelope of parabolas).
void edt_1d(const double* f, double* d, int N, std::vector<int>& v, std::vector<double>& z) {
  v.assign(N, 0);
  z.assign(N + 1, 0.0);
  int k = -1;
  for (int q = 0; q < N; ++q) {
    if (f[q] == kInf) continue;
    if (k < 0) {
      k = 0;
      v[0] = q;
      z[0] = -kInf;
      z[1] = kInf;
      continue;
    }
    double s;
    // z[0] = -inf stops the loop at k = 0.
    for (;;) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * (q - p));
      if (s > z[k]) break;
      --k;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  if (k < 0) {
    for (int q = 0; q < N; ++q) d[q] = kInf;
    return;
  }
  int j = 0;
  for (int q = 0; q < N; ++q) {
    while (z[j + 1] < q) ++j;
    const double dq = q - v[j];
    d[q] = dq * dq + f[v[j]];
  }
}

}  // namespace

std::vector<double> distance_to_set(const GridSpec& g, const std::vector<char>& target, bool outside_is_target) {
  require(target.size() == g.points(), ErrorCode::kDimensionMismatch, "mask size mismatch");
  const int pad = outside_is_target ? 1 : 0;
  IVec P{1, 1, 1};
  for (int a = 0; a < g.n; ++a) P[a] = g.sizes[a] + 2 * pad;
  std::size_t total = 1;
  for (int a = 0; a < g.n; ++a) total *= P[a];
  std::vector<double> f(total, kInf);
  auto pflat = [&](const IVec& i) {
    std::size_t k = 0;
    for (int a = 0; a < g.n; ++a) k = k * P[a] + i[a];
    return k;
  };
  for (std::size_t k = 0; k < total; ++k) {
    std::size_t r = k;
    IVec i{0, 0, 0};
    for (int a = g.n - 1; a >= 0; --a) {
      i[a] = static_cast<int>(r % P[a]);
      r /= P[a];
    }
    bool border = false;
    IVec j{0, 0, 0};
    for (int a = 0; a < g.n; ++a) {
      j[a] = i[a] - pad;
      if (j[a] < 0 || j[a] >= g.sizes[a]) border = true;
    }
    if (border ? true : target[g.flat(j)]) f[k] = 0.0;
  }
  // Separable passes along every axis.
  std::vector<int> v;
  std::vector<double> z, line, out;
  for (int a = 0; a < g.n; ++a) {
    std::size_t stride = 1;
    for (int b = a + 1; b < g.n; ++b) stride *= P[b];
    const int N = P[a];
    line.resize(N);
    out.resize(N);
    for (std::size_t k = 0; k < total; ++k) {
      if ((k / stride) % N != 0) continue;
      for (int q = 0; q < N; ++q) line[q] = f[k + q * stride];
      edt_1d(line.data(), out.data(), N, v, z);
      for (int q = 0; q < N; ++q) f[k + q * stride] = out[q];
    }
  }
  std::vector<double> d(g.points());
  for (std::size_t k = 0; k < g.points(); ++k) {
    IVec i = g.unflat(k);
    for (int a = 0; a < g.n; ++a) i[a] += pad;
    d[k] = std::sqrt(f[pflat(i)]) * g.h;
  }
  return d;
}

const char* domain_kind_name(DomainKind k) {
  switch (k) {
    case DomainKind::kFlat: return "flat";
    case DomainKind::kWedge: return "wedge";
    case DomainKind::kRandom: return "random";
  }
  return "flat";
}

DomainKind domain_kind_from_name(const std::string& s) {
  if (s == "flat") return DomainKind::kFlat;
  if (s == "wedge") return DomainKind::kWedge;
  if (s == "random") return DomainKind::kRandom;
  fail(ErrorCode::kInvalidArgument, "unknown domain kind '" + s + "'");
}

double LipschitzGraphDomain::lambda_at(const IVec& idx) const {
  std::size_t k = 0;
  for (int a = 0; a + 1 < grid.n; ++a) k = k * grid.sizes[a] + idx[a];
  return lambda[k];
}

namespace {

template <class Pred>
std::vector<char> build_mask(const GridSpec& g, Pred pred) {
  std::vector<char> m(g.points());
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = pred(g.unflat(k)) ? 1 : 0;
  return m;
}

std::size_t lateral_count(const GridSpec& g) {
  std::size_t c = 1;
  for (int a = 0; a + 1 < g.n; ++a) c *= g.sizes[a];
  return c;
}

RVec lateral_coords(const GridSpec& g, std::size_t k) {
  RVec x{0, 0, 0};
  for (int a = g.n - 2; a >= 0; --a) {
    x[a] = g.coord(a, static_cast<int>(k % g.sizes[a]));
    k /= g.sizes[a];
  }
  return x;
}

}  // namespace

std::vector<char> LipschitzGraphDomain::mask() const {
  return build_mask(grid, [&](const IVec& i) { return contains(i); });
}
std::vector<char> LipschitzGraphDomain::closure_mask() const {
  return build_mask(grid, [&](const IVec& i) { return in_closure(i); });
}
std::vector<char> LipschitzGraphDomain::lower_mask() const {
  return build_mask(grid, [&](const IVec& i) { return in_lower(i); });
}
std::vector<char> LipschitzGraphDomain::lower_closure_mask() const {
  return build_mask(grid, [&](const IVec& i) { return in_lower_closure(i); });
}

void certify_lipschitz(const LipschitzGraphDomain& d, double& adjacent, double& gradient_bound) {
  adjacent = 0.0;
  gradient_bound = 0.0;
  const GridSpec& g = d.grid;
  const int m = g.n - 1;
  if (m == 0) return;
  IVec S{1, 1, 1};
  for (int a = 0; a < m; ++a) S[a] = g.sizes[a];
  auto at = [&](int i, int j) { return m == 1 ? d.lambda[i] : d.lambda[static_cast<std::size_t>(i) * S[1] + j]; };
  if (m == 1) {
    for (int i = 0; i + 1 < S[0]; ++i) adjacent = std::max(adjacent, std::abs(at(i + 1, 0) - at(i, 0)) / g.h);
    gradient_bound = adjacent;
    return;
  }
  for (int i = 0; i < S[0]; ++i)
    for (int j = 0; j < S[1]; ++j) {
      if (i + 1 < S[0]) adjacent = std::max(adjacent, std::abs(at(i + 1, j) - at(i, j)) / g.h);
      if (j + 1 < S[1]) adjacent = std::max(adjacent, std::abs(at(i, j + 1) - at(i, j)) / g.h);
    }
  // Bilinear interpolant: on a cell the gradient norm peaks at a corner, where
  // it equals the length of the two adjacent edge slopes.
  for (int i = 0; i + 1 < S[0]; ++i)
    for (int j = 0; j + 1 < S[1]; ++j) {
      const double sx0 = (at(i + 1, j) - at(i, j)) / g.h, sx1 = (at(i + 1, j + 1) - at(i, j + 1)) / g.h;
      const double sy0 = (at(i, j + 1) - at(i, j)) / g.h, sy1 = (at(i + 1, j + 1) - at(i + 1, j)) / g.h;
      for (double sx : {sx0, sx1})
        for (double sy : {sy0, sy1}) gradient_bound = std::max(gradient_bound, std::hypot(sx, sy));
    }
}

void finalize_domain(LipschitzGraphDomain& d) {
  require(d.lambda.size() == lateral_count(d.grid), ErrorCode::kDimensionMismatch, "lambda size mismatch");
  certify_lipschitz(d, d.max_adjacent_slope, d.A_certified);
  // Snap rounding noise in the certificate back to the requested constant.
  if (d.A_certified <= d.A * (1.0 + 1e-9)) d.A_certified = std::min(d.A_certified, d.A);
  require(d.sigma > 0.0, ErrorCode::kInvalidArgument, "aperture must be positive");
  require(d.sigma * d.A_certified < 1.0, ErrorCode::kCertificationFailed,
          "sigma * A must be below 1 (certified A = " + std::to_string(d.A_certified) + ")");
  std::vector<char> comp(d.grid.points());
  for (std::size_t k = 0; k < comp.size(); ++k) comp[k] = d.contains(d.grid.unflat(k)) ? 0 : 1;
  d.dist_complement = distance_to_set(d.grid, comp, false);
}

LipschitzGraphDomain make_domain(const GridSpec& grid, DomainKind kind, double A, double sigma, std::uint64_t seed,
                                 double level) {
  grid.validate();
  require(A >= 0.0, ErrorCode::kInvalidArgument, "Lipschitz constant must be nonnegative");
  require(sigma > 0.0 && sigma * A < 1.0, ErrorCode::kCertificationFailed, "need sigma > 0 and sigma * A < 1");
  LipschitzGraphDomain d;
  d.grid = grid;
  d.kind = kind;
  d.A = kind == DomainKind::kFlat ? 0.0 : A;
  d.sigma = sigma;
  d.seed = seed;
  const std::size_t L = lateral_count(grid);
  d.lambda.assign(L, level);
  if (grid.n == 1 || kind == DomainKind::kFlat) {
    d.A = 0.0;
    finalize_domain(d);
    return d;
  }
  const int m = grid.n - 1;
  if (kind == DomainKind::kWedge) {
    RVec c{0, 0, 0};
    for (int a = 0; a < m; ++a) c[a] = grid.coord(a, grid.sizes[a] / 2);
    for (std::size_t k = 0; k < L; ++k) {
      RVec x = lateral_coords(grid, k);
      double r = 0.0;
      for (int a = 0; a < m; ++a) r += (x[a] - c[a]) * (x[a] - c[a]);
      d.lambda[k] = A * std::sqrt(r) + level;
    }
    finalize_domain(d);
    return d;
  }
  // Random: smoothed white noise, mean removed, rescaled to certify A.
  Rng rng(seed);
  std::vector<double> f(L);
  for (double& v : f) v = rng.normal();
  const int passes = std::max(4, (grid.sizes[0] / 8) * (grid.sizes[0] / 8));
  std::vector<double> tmp(L);
  for (int a = 0; a < m; ++a) {
    const std::size_t stride = m == 2 && a == 0 ? grid.sizes[1] : 1;
    const int N = grid.sizes[a];
    for (int it = 0; it < passes; ++it) {
      for (std::size_t k = 0; k < L; ++k) {
        const int i = static_cast<int>((k / stride) % N);
        const std::size_t base = k - i * stride;
        const std::size_t km = base + ((i + N - 1) % N) * stride, kp = base + ((i + 1) % N) * stride;
        tmp[k] = 0.25 * f[km] + 0.5 * f[k] + 0.25 * f[kp];
      }
      f.swap(tmp);
    }
  }
  double mean = 0.0;
  for (double v : f) mean += v;
  mean /= static_cast<double>(L);
  for (double& v : f) v -= mean;
  LipschitzGraphDomain probe = d;
  probe.lambda = f;
  double adj, grad;
  certify_lipschitz(probe, adj, grad);
  require(grad > 0.0, ErrorCode::kCertificationFailed, "degenerate random profile");
  double scale = A / grad;
  for (int halving = 0; halving <= 16; ++halving) {
    for (std::size_t k = 0; k < L; ++k) d.lambda[k] = scale * f[k] + level;
    certify_lipschitz(d, adj, grad);
    if (grad <= A) {
      finalize_domain(d);
      return d;
    }
    scale *= 0.5;
  }
  fail(ErrorCode::kCertificationFailed, "random profile failed to certify A in 16 halvings");
}

ConeCheck cone_containment_check(const LipschitzGraphDomain& d, int samples, std::uint64_t seed,
                                 double sigma_override) {
  const GridSpec& g = d.grid;
  const double sigma = sigma_override > 0.0 ? sigma_override : d.sigma;
  const int n = g.n;
  const int R = 12;
  Rng rng(seed);
  ConeCheck out;
  auto random_point = [&]() {
    IVec i{0, 0, 0};
    for (int a = 0; a < n; ++a) i[a] = rng.uniform_int(0, g.sizes[a] - 1);
    return i;
  };
  for (int mirrored = 0; mirrored < 2; ++mirrored) {
    int found = 0;
    for (int attempt = 0; attempt < samples * 50 && found < samples; ++attempt) {
      IVec x = random_point();
      if (mirrored ? !d.in_lower_closure(x) : !d.in_closure(x)) continue;
      ++found;
      IVec y = x;
      bool inside_box = true;
      for (int a = 0; a < n; ++a) {
        y[a] = x[a] + rng.uniform_int(-R, R);
        if (y[a] < 0 || y[a] >= g.sizes[a]) inside_box = false;
      }
      if (!inside_box) continue;
      double lat = 0.0;
      for (int a = 0; a + 1 < n; ++a) {
        const double dx = (y[a] - x[a]) * g.h;
        lat += dx * dx;
      }
      lat = std::sqrt(lat);
      const double up = (y[n - 1] - x[n - 1]) * g.h;
      if (mirrored) {
        if (!(sigma * -up > lat)) continue;
        ++out.mirrored_samples;
        if (!d.in_lower(y)) ++out.mirrored_violations;
      } else {
        if (!(sigma * up > lat)) continue;
        ++out.samples;
        if (!d.contains(y)) ++out.violations;
      }
    }
  }
  return out;
}

TentRegion TentRegion::make(const GridSpec& g, std::vector<char> base, double beta) {
  require(beta > 0.0, ErrorCode::kInvalidArgument, "tent aperture must be positive");
  require(base.size() == g.points(), ErrorCode::kDimensionMismatch, "mask size mismatch");
  TentRegion r;
  r.grid = g;
  r.beta = beta;
  std::vector<char> comp(base.size());
  for (std::size_t k = 0; k < base.size(); ++k) comp[k] = base[k] ? 0 : 1;
  r.dist = distance_to_set(g, comp, true);
  r.base = std::move(base);
  return r;
}

}  // namespace conewise
