#include "conewise/potential_op.hpp"

#include <cmath>

#include "conewise/error.hpp"
#include "conewise/littlewood_paley.hpp"
#include "conewise/util.hpp"

namespace conewise {

TruncationWindow TruncationWindow::make(double a, double b, int panels_per_octave) {
  require(a > 0.0 && b > a, ErrorCode::kInvalidArgument, "window needs 0 < a < b");
  require(panels_per_octave >= 1, ErrorCode::kInvalidArgument, "need at least one panel per octave");
  TruncationWindow w;
  w.a = a;
  w.b = b;
  w.panels_per_octave = panels_per_octave;
  const int M = std::max(1, static_cast<int>(std::ceil(panels_per_octave * std::log2(b / a) - 1e-9)));
  const double r = std::pow(b / a, 1.0 / M);
  const double lr = std::log(r);
  for (int k = 0; k < M; ++k) {
    const double t = a * std::pow(r, k + 0.5);
    w.nodes.push_back(t);
    w.weights.push_back(t * lr);
  }
  return w;
}

double TruncationWindow::panel_ratio() const { return std::pow(b / a, 1.0 / nodes.size()); }

namespace {

SampledKernel orient(SampledKernel k, Orientation o) {
  return o == Orientation::kReflected ? kernel_reflect(k) : k;
}

}  // namespace

PotentialOperator::PotentialOperator(const PotentialConfig& cfg) : cfg_(cfg) {
  require(cfg.n >= 1 && cfg.n <= kMaxGridDim, ErrorCode::kInvalidArgument, "dimension must be in 1..3");
  window_ = TruncationWindow::make(cfg.a, cfg.b, cfg.panels_per_octave);
  spec_ = cfg.route == KernelRoute::kTheta ? theta_spec(cfg.n, cfg.sigma) : phi_spec(cfg.n, cfg.sigma, cfg.phi_seed);
  // The truncation terms are sampled at the window edges.
  require(spec_.min_extent() * cfg.a >= 8.0 * cfg.h, ErrorCode::kUnderResolved,
          "window start a is below the 8h resolution limit");
  bool first = true;
  for (std::size_t i = 0; i < window_.nodes.size(); ++i) {
    SampledKernel T = big_theta_at(window_.nodes[i]);
    SampledKernel D = kernel_divergence(T);
    const double w = window_.weights[i];
    if (first) {
      K_ = kernel_combine(w, T, 0.0, T);
      delta_ = kernel_combine(w, D, 0.0, D);
      first = false;
    } else {
      K_ = kernel_combine(1.0, K_, w, T);
      delta_ = kernel_combine(1.0, delta_, w, D);
    }
  }
  K_.provenance = "K";
  delta_.provenance = "delta";
}

SampledKernel PotentialOperator::theta_at(double t) const {
  SampledKernel k = sample_kernel(spec_, t, cfg_.h);
  if (cfg_.route == KernelRoute::kReproducing) k = convolve_kernels(k, k);
  k.provenance = "theta";
  return orient(k, cfg_.orientation);
}

SampledKernel PotentialOperator::big_theta_at(double t) const {
  // Staggered so the divergence is centred; the reflected kernel is built
  // with the opposite offset so that it too ends up centred.
  const double off = cfg_.orientation == Orientation::kUpward ? 0.5 : -0.5;
  SampledKernel T;
  if (cfg_.route == KernelRoute::kTheta) {
    T = sample_staggered_vector(spec_, t, cfg_.h, 1.0, off);
  } else {
    T = convolve_kernels(sample_kernel(spec_, t, cfg_.h), sample_staggered_vector(spec_, t, cfg_.h, 2.0, off));
  }
  T.provenance = "Theta";
  return orient(T, cfg_.orientation);
}

FormField PotentialOperator::apply(const FormField& u, ConvolutionMode mode) const {
  require(u.grid().n == cfg_.n && u.grid().h == cfg_.h, ErrorCode::kDimensionMismatch,
          "field grid does not match the operator");
  if (u.degree() == 0) return FormField(u.grid(), 0);
  return contract_convolve(K_, u, mode);
}

HomotopyResiduals homotopy_residuals(const PotentialOperator& P, const FormField& u, ConvolutionMode mode) {
  const GridSpec& g = u.grid();
  HomotopyResiduals r;
  r.norm_u = l2_norm(u);
  require(r.norm_u > 0.0, ErrorCode::kInvalidArgument, "homotopy residuals need a nonzero field");
  FormField lhs(g, u.degree());
  if (u.degree() >= 1) lhs += exterior_derivative(P.apply(u, mode));
  if (u.degree() < g.n) lhs += P.apply(exterior_derivative(u), mode);
  FormField alg = convolve(u, P.delta_kernel(), mode);
  FormField ta = convolve(u, P.theta_at(P.window().a), mode);
  FormField tb = convolve(u, P.theta_at(P.window().b), mode);
  r.norm_theta_a = l2_norm(ta);
  r.norm_theta_b = l2_norm(tb);
  r.algebraic = l2_norm(lhs - alg) / r.norm_u;
  r.quadrature = l2_norm(lhs - (ta - tb)) / r.norm_u;
  return r;
}

LeakReport support_preservation_check(const PotentialOperator& P, const FormField& u,
                                      const LipschitzGraphDomain& omega, SupportSide side, bool mask_input) {
  const bool upward = P.config().orientation == Orientation::kUpward;
  require(upward == (side == SupportSide::kUpper), ErrorCode::kPreconditionViolated,
          "operator orientation does not match the data side");
  require(u.grid() == omega.grid, ErrorCode::kDimensionMismatch, "field and domain grids differ");
  const std::vector<char> closure = upward ? omega.closure_mask() : omega.lower_closure_mask();
  FormField v = u;
  if (mask_input)
    for (int c = 0; c < v.ncomp(); ++c)
      for (std::size_t k = 0; k < closure.size(); ++k)
        if (!closure[k]) v.comp(c)[k] = 0.0;
  FormField Tu = P.apply(v);
  auto mag = pointwise_norm(Tu);
  auto dist = distance_to_set(u.grid(), closure, false);
  LeakReport rep;
  double far = 0.0;
  for (std::size_t k = 0; k < mag.size(); ++k) {
    rep.max_value = std::max(rep.max_value, mag[k]);
    if (dist[k] > kGeometricSlackCells * u.grid().h) {
      ++rep.far_points;
      far = std::max(far, mag[k]);
    }
  }
  rep.leak = rep.max_value > 0.0 ? far / rep.max_value : 0.0;
  return rep;
}

namespace {

std::vector<std::complex<double>> big_theta_hat(const PotentialOperator& P, const RVec& eta) {
  const int n = P.config().n;
  RVec e = eta;
  if (P.config().orientation == Orientation::kReflected)
    for (int a = 0; a < n; ++a) e[a] = -e[a];
  std::vector<std::complex<double>> out(n);
  if (P.config().route == KernelRoute::kTheta) {
    for (int j = 0; j < n; ++j) out[j] = P.spec().fourier_moment(e, j);
  } else {
    const std::complex<double> ph = P.spec().fourier(e);
    for (int j = 0; j < n; ++j) out[j] = ph * 2.0 * P.spec().fourier_moment(e, j);
  }
  return out;
}

std::vector<std::complex<double>> symbol_range(const PotentialOperator& P, const RVec& xi, double a, double b,
                                              int per_octave) {
  const int n = P.config().n;
  double xnorm = 0.0;
  for (int k = 0; k < n; ++k) xnorm += xi[k] * xi[k];
  xnorm = std::sqrt(xnorm);
  require(xnorm > 0.0, ErrorCode::kInvalidArgument, "symbol is undefined at xi = 0");
  TruncationWindow w = TruncationWindow::make(a, b, per_octave);
  std::vector<std::complex<double>> m(n, 0.0);
  for (std::size_t i = 0; i < w.nodes.size(); ++i) {
    const double t = w.nodes[i];
    // Beyond this the bump transforms are below rounding.
    if (t * xnorm > 3000.0) break;
    RVec eta{t * xi[0], t * xi[1], t * xi[2]};
    auto v = big_theta_hat(P, eta);
    for (int k = 0; k < n; ++k) m[k] += w.weights[i] * v[k];
  }
  return m;
}

double vnorm(const std::vector<std::complex<double>>& v) {
  double s = 0.0;
  for (auto z : v) s += std::norm(z);
  return std::sqrt(s);
}

}  // namespace

std::vector<std::complex<double>> symbol(const PotentialOperator& P, const RVec& xi, const SymbolWindow& w) {
  return symbol_range(P, xi, w.a0, w.b0, w.panels_per_octave);
}

std::vector<std::complex<double>> symbol_tail(const PotentialOperator& P, const RVec& xi, double b,
                                             const SymbolWindow& w) {
  return symbol_range(P, xi, b, w.b0, w.panels_per_octave);
}

HomogeneityReport homogeneity_check(const PotentialOperator& P, int count, std::uint64_t seed,
                                    const SymbolWindow& w) {
  const int n = P.config().n;
  Rng rng(seed);
  HomogeneityReport rep;
  for (int i = 0; i < count; ++i) {
    RVec dir{0, 0, 0};
    double s = 0.0;
    for (int a = 0; a < n; ++a) {
      dir[a] = rng.normal();
      s += dir[a] * dir[a];
    }
    const double r = std::exp(rng.uniform(std::log(0.5), std::log(8.0))) / std::sqrt(s);
    RVec xi{dir[0] * r, dir[1] * r, dir[2] * r};
    RVec xi2{2 * xi[0], 2 * xi[1], 2 * xi[2]};
    auto m1 = symbol(P, xi, w), m2 = symbol(P, xi2, w);
    std::vector<std::complex<double>> diff(n);
    for (int a = 0; a < n; ++a) diff[a] = 2.0 * m2[a] - m1[a];
    rep.max_deviation = std::max(rep.max_deviation, vnorm(diff) / vnorm(m1));
    ++rep.frequencies;
  }
  return rep;
}

double lifting_ratio(const PotentialOperator& P, const FormField& u, double s) {
  const double den = sobolev_norm(u, s);
  require(den > 0.0, ErrorCode::kInvalidArgument, "degenerate norm: field is zero");
  return sobolev_norm(P.apply(u, ConvolutionMode::kTransform), s + 1.0) / den;
}

}  // namespace conewise
