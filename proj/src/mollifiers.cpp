#include "conewise/mollifiers.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "conewise/error.hpp"
#include "conewise/util.hpp"

namespace conewise {

namespace {

constexpr int kQuantBits = 44;

double quantize(double v, double q) { return std::nearbyint(v / q) * q; }

void quantize_kernel(SampledKernel& k) {
  double m = 0.0;
  for (const auto& c : k.values)
    for (double v : c) m = std::max(m, std::abs(v));
  if (m == 0.0) return;
  int e = 0;
  std::frexp(m, &e);
  const double q = std::ldexp(1.0, e - kQuantBits - 1);
  for (auto& c : k.values)
    for (double& v : c) v = quantize(v, q);
}

double norm_lateral(const RVec& y, int n) {
  double s = 0.0;
  for (int a = 0; a + 1 < n; ++a) s += y[a] * y[a];
  return std::sqrt(s);
}

double norm_full(const RVec& y, int n) {
  double s = 0.0;
  for (int a = 0; a < n; ++a) s += y[a] * y[a];
  return std::sqrt(s);
}

bool point_admissible(const ConeBumpSpec& s, const RVec& y) {
  const double yn = y[s.n - 1];
  if (yn < s.shell_lo) return false;
  if (norm_full(y, s.n) > s.shell_hi) return false;
  if (s.n > 1 && norm_lateral(y, s.n) > s.sigma * yn) return false;
  return true;
}

double bump_mass_of(const ConeBumpSpec& s, std::size_t b) {
  double m = 1.0;
  for (int a = 0; a < s.n; ++a) m *= s.halfs[b][a] * bump_mass();
  return m;
}

}  // namespace

double bump_profile(double s) {
  if (!(std::abs(s) < 1.0)) return 0.0;
  return std::exp(-1.0 / (1.0 - s * s));
}

void bump_transform(double nu, double& value, double& derivative) {
  const int Q = 256 + 4 * static_cast<int>(std::ceil(std::abs(nu)));
  const double ds = 2.0 / Q;
  double v = 0.0, d = 0.0;
  for (int k = 1; k < Q; ++k) {
    const double s = -1.0 + k * ds;
    const double b = bump_profile(s);
    v += b * std::cos(nu * s);
    d -= b * s * std::sin(nu * s);
  }
  value = v * ds;
  derivative = d * ds;
}

double bump_mass() {
  static const double m = [] {
    double v, d;
    bump_transform(0.0, v, d);
    return v;
  }();
  return m;
}

// ---------------------------------------------------------------- spec

double ConeBumpSpec::bump(std::size_t b, const RVec& x) const {
  double v = 1.0;
  for (int a = 0; a < n && v != 0.0; ++a) v *= bump_profile((x[a] - centers[b][a]) / halfs[b][a]);
  return v;
}

double ConeBumpSpec::profile(const RVec& x) const {
  double v = 0.0;
  for (std::size_t b = 0; b < centers.size(); ++b) v += weights[b] * bump(b, x);
  return v;
}

RVec ConeBumpSpec::profile_gradient(const RVec& x) const {
  RVec g{0.0, 0.0, 0.0};
  for (std::size_t b = 0; b < centers.size(); ++b) {
    RVec s{}, f{};
    for (int a = 0; a < n; ++a) {
      s[a] = (x[a] - centers[b][a]) / halfs[b][a];
      f[a] = bump_profile(s[a]);
    }
    for (int j = 0; j < n; ++j) {
      if (f[j] == 0.0) continue;
      const double sj = s[j];
      double v = weights[b] * f[j] * (-2.0 * sj / ((1.0 - sj * sj) * (1.0 - sj * sj))) / halfs[b][j];
      for (int a = 0; a < n; ++a)
        if (a != j) v *= f[a];
      g[j] += v;
    }
  }
  return g;
}

double ConeBumpSpec::min_extent() const {
  double m = INFINITY;
  for (const auto& hb : halfs)
    for (int a = 0; a < n; ++a) m = std::min(m, 2.0 * hb[a]);
  return m;
}

void ConeBumpSpec::bounds(RVec& lo, RVec& hi) const {
  lo = {INFINITY, INFINITY, INFINITY};
  hi = {-INFINITY, -INFINITY, -INFINITY};
  for (std::size_t b = 0; b < centers.size(); ++b)
    for (int a = 0; a < n; ++a) {
      lo[a] = std::min(lo[a], centers[b][a] - halfs[b][a]);
      hi[a] = std::max(hi[a], centers[b][a] + halfs[b][a]);
    }
}

bool ConeBumpSpec::boxes_admissible() const {
  for (std::size_t b = 0; b < centers.size(); ++b) {
    for (unsigned corner = 0; corner < (1u << n); ++corner) {
      RVec y{};
      for (int a = 0; a < n; ++a)
        y[a] = centers[b][a] + ((corner >> a) & 1u ? halfs[b][a] : -halfs[b][a]);
      if (!point_admissible(*this, y)) return false;
    }
  }
  return true;
}

std::complex<double> ConeBumpSpec::fourier(const RVec& xi) const {
  std::complex<double> total = 0.0;
  for (std::size_t b = 0; b < centers.size(); ++b) {
    std::complex<double> f = weights[b];
    for (int a = 0; a < n; ++a) {
      double v, d;
      bump_transform(halfs[b][a] * xi[a], v, d);
      f *= halfs[b][a] * std::polar(1.0, -centers[b][a] * xi[a]) * v;
    }
    total += f;
  }
  return total;
}

std::complex<double> ConeBumpSpec::fourier_moment(const RVec& xi, int j) const {
  const std::complex<double> I(0.0, 1.0);
  std::complex<double> total = 0.0;
  for (std::size_t b = 0; b < centers.size(); ++b) {
    std::complex<double> f = weights[b];
    for (int a = 0; a < n; ++a) {
      double v, d;
      bump_transform(halfs[b][a] * xi[a], v, d);
      const double hw = halfs[b][a];
      const std::complex<double> ph = std::polar(1.0, -centers[b][a] * xi[a]);
      if (a == j)
        f *= I * hw * ph * (-I * centers[b][a] * v + hw * d);
      else
        f *= hw * ph * v;
    }
    total += f;
  }
  return total;
}

double ConeBumpSpec::integral() const {
  double s = 0.0;
  for (std::size_t b = 0; b < centers.size(); ++b) s += weights[b] * bump_mass_of(*this, b);
  return s;
}

// ---------------------------------------------------------------- builders

ConeBumpSpec theta_spec(int n, double sigma) {
  require(n >= 1 && n <= kMaxGridDim, ErrorCode::kInvalidArgument, "dimension must be in 1..3");
  require(sigma > 0.0, ErrorCode::kInvalidArgument, "aperture must be positive");
  ConeBumpSpec s;
  s.n = n;
  s.sigma = sigma;
  s.shell_lo = 1.0;
  s.shell_hi = 2.0;
  s.provenance = "theta";
  RVec c{0.0, 0.0, 0.0}, hw{0.0, 0.0, 0.0};
  c[n - 1] = 1.5;
  hw[n - 1] = 0.45;
  if (n > 1) {
    const double lat = std::min(sigma * 1.05, std::sqrt(4.0 - 1.95 * 1.95)) / std::sqrt(n - 1.0) * 0.95;
    for (int a = 0; a + 1 < n; ++a) hw[a] = lat;
  }
  s.centers = {c};
  s.halfs = {hw};
  s.weights = {1.0};
  s.weights[0] = 1.0 / bump_mass_of(s, 0);
  require(s.boxes_admissible(), ErrorCode::kInternal, "theta box escapes its shell");
  return s;
}

namespace {

// Largest lateral half width keeping every corner admissible.
double max_lateral(const ConeBumpSpec& s, const RVec& c, double half_n) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    ConeBumpSpec t = s;
    RVec hw{mid, mid, mid};
    hw[s.n - 1] = half_n;
    t.centers = {c};
    t.halfs = {hw};
    (t.boxes_admissible() ? lo : hi) = mid;
  }
  return lo;
}

// Weights w minimizing |w| subject to M w = e0.
bool min_norm_weights(const Eigen::MatrixXd& M, Eigen::VectorXd& w) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0 || sv(sv.size() - 1) <= 1e-10 * sv(0)) return false;
  Eigen::VectorXd e0 = Eigen::VectorXd::Zero(M.rows());
  e0(0) = 1.0;
  w = svd.solve(e0);
  return w.allFinite();
}

}  // namespace

ConeBumpSpec phi_spec(int n, double sigma, std::uint64_t seed) {
  require(n >= 1 && n <= kMaxGridDim, ErrorCode::kInvalidArgument, "dimension must be in 1..3");
  require(sigma > 0.0, ErrorCode::kInvalidArgument, "aperture must be positive");
  for (int attempt = 0; attempt < 8; ++attempt) {
    Rng rng(seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(attempt));
    ConeBumpSpec s;
    s.n = n;
    s.sigma = sigma;
    s.shell_lo = 0.5;
    s.shell_hi = 1.0;
    s.provenance = "phi";
    s.seed = seed;
    s.attempts = attempt + 1;
    const int B = n + 2;
    for (int b = 0; b < B; ++b) {
      RVec c{0.0, 0.0, 0.0}, hw{0.0, 0.0, 0.0};
      if (n == 1) {
        c[0] = 0.5 + rng.uniform(0.12, 0.38);
        hw[0] = 0.97 * std::min(c[0] - 0.5, 1.0 - c[0]);
      } else {
        c[n - 1] = 0.5 + rng.uniform(0.17, 0.24);
        hw[n - 1] = 0.98 * (c[n - 1] - 0.5);
        const double top = c[n - 1] + hw[n - 1];
        const double room = std::min(sigma * 0.5, std::sqrt(std::max(0.0, 1.0 - top * top)));
        for (int a = 0; a + 1 < n; ++a) c[a] = rng.uniform(-0.3, 0.3) * room / std::sqrt(n - 1.0);
        const double lat = 0.97 * max_lateral(s, c, hw[n - 1]);
        for (int a = 0; a + 1 < n; ++a) hw[a] = lat;
      }
      s.centers.push_back(c);
      s.halfs.push_back(hw);
    }
    s.weights.assign(B, 1.0);
    if (!s.boxes_admissible() || s.min_extent() < 0.05) continue;
    Eigen::MatrixXd M(n + 1, B);
    for (int b = 0; b < B; ++b) {
      const double m = bump_mass_of(s, b);
      M(0, b) = m;
      for (int a = 0; a < n; ++a) M(a + 1, b) = m * s.centers[b][a];
    }
    Eigen::VectorXd w;
    if (!min_norm_weights(M, w)) continue;
    for (int b = 0; b < B; ++b) s.weights[b] = w(b);
    return s;
  }
  fail(ErrorCode::kSingularSystem, "phi moment system singular after 8 reseeds");
}

SampledKernel sample_kernel(const ConeBumpSpec& spec, double t, double h, const RVec& shift) {
  require(t > 0.0 && h > 0.0, ErrorCode::kInvalidArgument, "dilation and spacing must be positive");
  require(spec.min_extent() * t >= 8.0 * h, ErrorCode::kUnderResolved,
          "kernel under-resolved: fewer than 8 samples across its support at t=" + std::to_string(t));
  const int n = spec.n;
  RVec blo, bhi;
  spec.bounds(blo, bhi);
  IVec lo{0, 0, 0}, shape{1, 1, 1};
  for (int a = 0; a < n; ++a) {
    lo[a] = static_cast<int>(std::ceil(t * blo[a] / h + shift[a]));
    const int hi = static_cast<int>(std::floor(t * bhi[a] / h + shift[a]));
    shape[a] = hi - lo[a] + 1;
  }
  SampledKernel k = make_kernel(n, h, lo, shape, 1);
  k.t = t;
  k.provenance = spec.provenance;
  k.sigma = spec.sigma;
  k.shell_lo = spec.shell_lo;
  k.shell_hi = spec.shell_hi;
  const std::size_t P = k.box_points();
  const std::size_t B = spec.centers.size();
  const double tn = std::pow(t, -n);
  std::vector<std::vector<double>> g(B, std::vector<double>(P, 0.0));
  for (std::size_t p = 0; p < P; ++p) {
    IVec off = k.offset_at(p);
    RVec y{};
    for (int a = 0; a < n; ++a) y[a] = (off[a] - shift[a]) * h / t;
    for (std::size_t b = 0; b < B; ++b) g[b][p] = spec.bump(b, y) * tn;
  }
  const double vol = std::pow(h, n);
  auto& v = k.values[0];
  if (spec.provenance == "theta") {
    double mass = 0.0;
    for (std::size_t p = 0; p < P; ++p) {
      double s = 0.0;
      for (std::size_t b = 0; b < B; ++b) s += spec.weights[b] * g[b][p];
      v[p] = s;
      mass += s;
    }
    mass *= vol;
    require(mass > 0.0, ErrorCode::kUnderResolved, "theta has no mass on the lattice");
    for (double& x : v) x /= mass;
  } else {
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + 1, B);
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t p = 0; p < P; ++p) {
        if (g[b][p] == 0.0) continue;
        IVec off = k.offset_at(p);
        M(0, b) += g[b][p] * vol;
        for (int a = 0; a < n; ++a) M(a + 1, b) += g[b][p] * ((off[a] - shift[a]) * h) * vol;
      }
    Eigen::VectorXd w;
    require(min_norm_weights(M, w), ErrorCode::kSingularSystem, "discrete phi moment system singular");
    for (std::size_t p = 0; p < P; ++p) {
      double s = 0.0;
      for (std::size_t b = 0; b < B; ++b) s += w(b) * g[b][p];
      v[p] = s;
    }
  }
  quantize_kernel(k);
  return k;
}

SampledKernel build_theta(int n, double sigma, double h) {
  ConeBumpSpec s = theta_spec(n, sigma);
  require(s.min_extent() >= 16.0 * h, ErrorCode::kUnderResolved, "shell too thin for the requested spacing");
  return sample_kernel(s, 1.0, h);
}

SampledKernel build_phi(int n, double sigma, double h, std::uint64_t seed) {
  ConeBumpSpec s = phi_spec(n, sigma, seed);
  require(s.min_extent() >= 16.0 * h, ErrorCode::kUnderResolved, "shell too thin for the requested spacing");
  return sample_kernel(s, 1.0, h);
}

SampledKernel sample_staggered_vector(const ConeBumpSpec& spec, double t, double h, double scale, double offset) {
  const int n = spec.n;
  std::vector<SampledKernel> parts;
  IVec lo{0, 0, 0}, hi{0, 0, 0};
  for (int j = 0; j < n; ++j) {
    RVec shift{0.0, 0.0, 0.0};
    shift[j] = offset;
    parts.push_back(sample_kernel(spec, t, h, shift));
    for (int a = 0; a < n; ++a) {
      const int l = parts[j].lo[a], u = parts[j].lo[a] + parts[j].shape[a];
      lo[a] = j == 0 ? l : std::min(lo[a], l);
      hi[a] = j == 0 ? u : std::max(hi[a], u);
    }
  }
  IVec shape{1, 1, 1};
  for (int a = 0; a < n; ++a) shape[a] = hi[a] - lo[a];
  SampledKernel k = make_kernel(n, h, lo, shape, n);
  k.t = t;
  k.sigma = spec.sigma;
  k.shell_lo = spec.shell_lo;
  k.shell_hi = spec.shell_hi;
  for (std::size_t p = 0; p < k.box_points(); ++p) {
    IVec off = k.offset_at(p);
    for (int j = 0; j < n; ++j) k.values[j][p] = parts[j].value(0, off) * ((off[j] - offset) * h * scale / t);
  }
  return k;
}

SampledKernel make_big_theta(const SampledKernel& theta_t) {
  SampledKernel k = kernel_times_coordinate(theta_t, 1.0 / theta_t.t);
  k.provenance = "Theta";
  return k;
}

SampledKernel make_psi(const SampledKernel& phi_t) {
  SampledKernel k = kernel_times_coordinate(phi_t, 2.0 / phi_t.t);
  k.provenance = "Psi";
  return k;
}

SampledKernel make_dphi(const SampledKernel& phi_t) {
  SampledKernel k = kernel_gradient(phi_t);
  if (phi_t.t != 1.0)
    for (auto& c : k.values)
      for (double& v : c) v *= phi_t.t;
  k.provenance = "dphi";
  return k;
}

DerivedKernels derive_vector_kernels(const SampledKernel& k) {
  DerivedKernels d;
  d.big_theta = make_big_theta(k);
  d.psi = make_psi(k);
  d.dphi = make_dphi(k);
  return d;
}

double verify_phi_psi_theta(const SampledKernel& phi, const SampledKernel& psi) {
  SampledKernel lhs = convolve_kernels(phi, psi);
  SampledKernel theta = convolve_kernels(phi, phi);
  SampledKernel rhs = kernel_times_coordinate(theta, 1.0 / phi.t);
  double num = 0.0, den = 0.0;
  for (std::size_t p = 0; p < lhs.box_points(); ++p) {
    IVec off = lhs.offset_at(p);
    for (int c = 0; c < lhs.ncomp(); ++c) {
      num = std::max(num, std::abs(lhs.values[c][p] - rhs.value(c, off)));
      den = std::max(den, std::abs(rhs.value(c, off)));
    }
  }
  return den > 0.0 ? num / den : num;
}

SampledKernel sample_theta_time_derivative(const ConeBumpSpec& spec, double t, double h) {
  SampledKernel k = sample_kernel(spec, t, h);
  const int n = spec.n;
  const double tn = std::pow(t, -n);
  const double mass = spec.integral();
  for (std::size_t p = 0; p < k.box_points(); ++p) {
    IVec off = k.offset_at(p);
    RVec y{};
    for (int a = 0; a < n; ++a) y[a] = off[a] * h / t;
    RVec gr = spec.profile_gradient(y);
    double div = n * spec.profile(y);
    for (int a = 0; a < n; ++a) div += y[a] * gr[a];
    k.values[0][p] = -(1.0 / t) * div * tn / mass;
  }
  k.provenance = "custom";
  return k;
}

bool kernel_in_shell(const SampledKernel& k, double t) {
  ConeBumpSpec s;
  s.n = k.n;
  s.sigma = k.sigma;
  s.shell_lo = k.shell_lo;
  s.shell_hi = k.shell_hi;
  for (std::size_t p = 0; p < k.box_points(); ++p) {
    bool nz = false;
    for (int c = 0; c < k.ncomp(); ++c) nz = nz || k.values[c][p] != 0.0;
    if (!nz) continue;
    IVec off = k.offset_at(p);
    RVec y{};
    for (int a = 0; a < k.n; ++a) y[a] = off[a] * k.h / t;
    if (!point_admissible(s, y)) return false;
  }
  return true;
}

}  // namespace conewise
