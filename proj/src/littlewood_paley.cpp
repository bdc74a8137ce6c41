#include "conewise/littlewood_paley.hpp"

#include <cmath>

#include "conewise/error.hpp"
#include "conewise/tent_space.hpp"
#include "fft.hpp"

namespace conewise {

namespace {

double ramp(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }

// Smooth step: 0 for s <= 0, 1 for s >= 1.
double smooth_step(double s) {
  if (s <= 0.0) return 0.0;
  if (s >= 1.0) return 1.0;
  const double a = ramp(s), b = ramp(1.0 - s);
  return a / (a + b);
}

double omega_norm(const GridSpec& g, std::size_t flat_k) {
  IVec k = g.unflat(flat_k);
  double s = 0.0;
  for (int a = 0; a < g.n; ++a) {
    const double w = detail::angular_frequency(g, a, k[a]);
    s += w * w;
  }
  return std::sqrt(s);
}

bool on_nyquist_layer(const GridSpec& g, std::size_t flat_k) {
  IVec k = g.unflat(flat_k);
  for (int a = 0; a < g.n; ++a)
    if (g.sizes[a] % 2 == 0 && k[a] == g.sizes[a] / 2) return true;
  return false;
}

}  // namespace

double lp_cutoff(double r) { return smooth_step(2.0 - 2.0 * r); }

double lp_profile(double r) { return lp_cutoff(r / 2.0) - lp_cutoff(r); }

DyadicSystem DyadicSystem::make(const GridSpec& g) {
  g.validate();
  DyadicSystem s;
  s.grid = g;
  double wmin = INFINITY;
  for (int a = 0; a < g.n; ++a) wmin = std::min(wmin, 2.0 * M_PI / (g.sizes[a] * g.h));
  const double wmax = std::sqrt(static_cast<double>(g.n)) * M_PI / g.h;
  s.j_min = static_cast<int>(std::floor(std::log2(wmin)));
  s.j_max = static_cast<int>(std::ceil(std::log2(wmax)));
  return s;
}

double DyadicSystem::frequency_norm(std::size_t flat_k) const { return omega_norm(grid, flat_k); }

double DyadicSystem::partition_at(std::size_t flat_k) const {
  const double w = frequency_norm(flat_k);
  double s = 0.0;
  for (int j = j_min; j <= j_max; ++j) s += lp_profile(std::ldexp(w, -j));
  return s;
}

FormField delta_j(const DyadicSystem& sys, const FormField& u, int j) {
  require(u.grid() == sys.grid, ErrorCode::kDimensionMismatch, "field and dyadic system grids differ");
  require(j >= sys.j_min && j <= sys.j_max, ErrorCode::kOutOfBand, "level outside the grid band");
  const GridSpec& g = u.grid();
  std::vector<double> mult(g.points());
  for (std::size_t k = 0; k < mult.size(); ++k) mult[k] = lp_profile(std::ldexp(omega_norm(g, k), -j));
  FormField out(g, u.degree());
  for (int c = 0; c < u.ncomp(); ++c) {
    auto F = detail::fft_forward(g, u.comp(c));
    for (std::size_t k = 0; k < F.size(); ++k) F[k] *= mult[k];
    out.comp(c) = detail::fft_inverse_real(g, F);
  }
  return out;
}

double out_of_band_fraction(const FormField& u) {
  const GridSpec& g = u.grid();
  double total = 0.0, outside = 0.0;
  for (int c = 0; c < u.ncomp(); ++c) {
    auto F = detail::fft_forward(g, u.comp(c));
    for (std::size_t k = 0; k < F.size(); ++k) {
      const double e = std::norm(F[k]);
      total += e;
      if (on_nyquist_layer(g, k)) outside += e;
    }
  }
  return total > 0.0 ? outside / total : 0.0;
}

double sobolev_norm(const FormField& u, double s) {
  const GridSpec& g = u.grid();
  double total = 0.0, outside = 0.0, acc = 0.0, zero = 0.0;
  for (int c = 0; c < u.ncomp(); ++c) {
    auto F = detail::fft_forward(g, u.comp(c));
    for (std::size_t k = 0; k < F.size(); ++k) {
      const double e = std::norm(F[k]);
      total += e;
      if (on_nyquist_layer(g, k)) outside += e;
      if (k == 0) {
        zero += e;
        if (s == 0.0) acc += e;
        continue;
      }
      acc += std::pow(omega_norm(g, k), 2.0 * s) * e;
    }
  }
  if (total == 0.0) return 0.0;
  require(outside <= 1e-8 * total, ErrorCode::kOutOfBand, "field carries energy on the Nyquist layer");
  require(s >= 0.0 || zero <= 1e-24 * total, ErrorCode::kPreconditionViolated,
          "negative smoothness needs a mean-zero field");
  return std::sqrt(acc * g.cell_volume() / static_cast<double>(g.points()));
}

double dyadic_sobolev_norm(const DyadicSystem& sys, const FormField& u, double s) {
  double acc = 0.0;
  for (int j = sys.j_min; j <= sys.j_max; ++j) {
    const double nj = l2_norm(delta_j(sys, u, j));
    acc += std::pow(2.0, 2.0 * j * s) * nj * nj;
  }
  return std::sqrt(acc);
}

double hardy_proxy_norm(const TentOperators& ops, const FormField& u, double p) {
  const int n = u.grid().n;
  require(p > static_cast<double>(n) / (n + 1) && p <= 1.0, ErrorCode::kInvalidArgument,
          "p must lie in (n/(n+1), 1]");
  return tent_norm(ops.q(u), p);
}

}  // namespace conewise
