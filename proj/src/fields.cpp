#include "conewise/fields.hpp"

#include <cmath>
#include <numbers>

#include "conewise/error.hpp"
#include "conewise/mollifiers.hpp"
#include "conewise/util.hpp"

namespace conewise {

namespace {

void quantize_field(FormField& u, int bits) {
  double m = 0.0;
  for (int c = 0; c < u.ncomp(); ++c)
    for (double v : u.comp(c)) m = std::max(m, std::abs(v));
  if (m == 0.0) return;
  int e = 0;
  std::frexp(m, &e);
  const double q = std::ldexp(1.0, e - bits);
  for (int c = 0; c < u.ncomp(); ++c)
    for (double& v : u.comp(c)) v = std::nearbyint(v / q) * q;
}

}  // namespace

FormField smooth_bump_form(const GridSpec& g, int degree, const RVec& center, double radius, std::uint64_t seed) {
  require(radius > 0.0, ErrorCode::kInvalidArgument, "bump radius must be positive");
  FormField u(g, degree);
  Rng rng(seed);
  const int n = g.n;
  for (int c = 0; c < u.ncomp(); ++c) {
    double c0 = rng.normal();
    RVec lin{};
    for (int a = 0; a < n; ++a) lin[a] = rng.normal();
    auto& v = u.comp(c);
    for (std::size_t p = 0; p < g.points(); ++p) {
      IVec i = g.unflat(p);
      double r2 = 0.0, poly = c0;
      for (int a = 0; a < n; ++a) {
        const double y = (g.coord(a, i[a]) - center[a]) / radius;
        r2 += y * y;
        poly += lin[a] * y;
      }
      v[p] = r2 < 1.0 ? poly * bump_profile(std::sqrt(r2)) : 0.0;
    }
  }
  return u;
}

FormField closed_bump_form(const GridSpec& g, int degree, const RVec& center, double radius, std::uint64_t seed) {
  require(degree >= 1 && degree <= g.n, ErrorCode::kDegreeOutOfRange, "closed forms need degree in 1..n");
  FormField v = smooth_bump_form(g, degree - 1, center, radius, seed);
  quantize_field(v, 40);
  return exterior_derivative(v);
}

FormField band_limited_form(const GridSpec& g, int degree, double omega_lo, double omega_hi, int modes,
                            std::uint64_t seed) {
  require(omega_lo >= 0.0 && omega_hi > omega_lo && modes >= 1, ErrorCode::kInvalidArgument, "bad frequency band");
  const int n = g.n;
  IVec kmax{0, 0, 0};
  bool any = false;
  for (int a = 0; a < n; ++a) {
    kmax[a] = std::min(static_cast<int>(std::floor(omega_hi * g.sizes[a] * g.h / (2 * std::numbers::pi))),
                       (g.sizes[a] - 1) / 2);
    any = any || kmax[a] > 0;
  }
  require(any, ErrorCode::kOutOfBand, "band is below the lowest lattice frequency");
  // Admissible wave vectors, enumerated once.
  std::vector<IVec> ks;
  IVec k{0, 0, 0};
  for (k[0] = -kmax[0]; k[0] <= kmax[0]; ++k[0])
    for (k[1] = -kmax[1]; k[1] <= kmax[1]; ++k[1])
      for (k[2] = -kmax[2]; k[2] <= kmax[2]; ++k[2]) {
        double w2 = 0.0;
        for (int a = 0; a < n; ++a) {
          const double w = 2 * std::numbers::pi * k[a] / (g.sizes[a] * g.h);
          w2 += w * w;
        }
        const double w = std::sqrt(w2);
        if (w >= omega_lo && w <= omega_hi && w > 0.0) ks.push_back(k);
      }
  require(!ks.empty(), ErrorCode::kOutOfBand, "no lattice frequency in the requested band");
  FormField u(g, degree);
  Rng rng(seed);
  for (int c = 0; c < u.ncomp(); ++c) {
    auto& v = u.comp(c);
    for (int m = 0; m < modes; ++m) {
      const IVec& km = ks[rng.uniform_int(0, static_cast<int>(ks.size()) - 1)];
      const double amp = rng.normal(), ph = rng.uniform(0.0, 2 * std::numbers::pi);
      for (std::size_t p = 0; p < g.points(); ++p) {
        IVec i = g.unflat(p);
        double arg = ph;
        for (int a = 0; a < n; ++a) arg += 2 * std::numbers::pi * double(km[a]) * i[a] / g.sizes[a];
        v[p] += amp * std::cos(arg);
      }
    }
  }
  return u;
}

FormField band_limited_closed_form(const GridSpec& g, int degree, double omega_lo, double omega_hi, int modes,
                                   std::uint64_t seed) {
  require(degree >= 1 && degree <= g.n, ErrorCode::kDegreeOutOfRange, "closed forms need degree in 1..n");
  return exterior_derivative(band_limited_form(g, degree - 1, omega_lo, omega_hi, modes, seed));
}

void apply_mask(FormField& u, const std::vector<char>& mask) {
  require(mask.size() == u.grid().points(), ErrorCode::kDimensionMismatch, "mask size differs from the grid");
  for (int c = 0; c < u.ncomp(); ++c)
    for (std::size_t p = 0; p < mask.size(); ++p)
      if (!mask[p]) u.comp(c)[p] = 0.0;
}

}  // namespace conewise
