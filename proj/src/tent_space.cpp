#include "conewise/tent_space.hpp"

#include <cmath>

#include "conewise/error.hpp"
#include "conewise/exterior_algebra.hpp"
#include "conewise/util.hpp"

namespace conewise {

TLadder TLadder::make(double t_min, double t_max, int per_octave) {
  TruncationWindow w = TruncationWindow::make(t_min, t_max, per_octave);
  TLadder l;
  l.t_min = t_min;
  l.t_max = t_max;
  l.per_octave = per_octave;
  l.nodes = w.nodes;
  const double lr = std::log(w.panel_ratio());
  l.weights.assign(l.nodes.size(), lr);
  return l;
}

TruncationWindow TLadder::as_window() const { return TruncationWindow::make(t_min, t_max, per_octave); }

void TentFunction::validate() const {
  require(!slices.empty() && slices.size() == ladder.size(), ErrorCode::kDimensionMismatch,
          "tent function needs one slice per ladder node");
  for (const auto& s : slices)
    require(s.grid() == slices.front().grid() && s.degree() == slices.front().degree(),
            ErrorCode::kDimensionMismatch, "tent slices disagree in grid or degree");
}

TentFunction zero_tent(const GridSpec& g, int degree, const TLadder& ladder) {
  TentFunction U;
  U.ladder = ladder;
  U.slices.assign(ladder.size(), FormField(g, degree));
  return U;
}

namespace {

std::array<std::size_t, kMaxGridDim> window_strides(const Window& w, int n) {
  std::array<std::size_t, kMaxGridDim> s{0, 0, 0};
  std::size_t acc = 1;
  for (int a = n - 1; a >= 0; --a) {
    s[a] = acc;
    acc *= static_cast<std::size_t>(w.shape[a]);
  }
  return s;
}

std::size_t window_to_grid(const GridSpec& g, const Window& w, std::size_t k) {
  IVec idx{0, 0, 0};
  for (int a = g.n - 1; a >= 0; --a) {
    const int off = static_cast<int>(k % w.shape[a]);
    k /= w.shape[a];
    int v = (w.lo[a] + off) % g.sizes[a];
    if (v < 0) v += g.sizes[a];
    idx[a] = v;
  }
  return g.flat(idx);
}

void check_patch(const GridSpec& g, const TLadder& ladder, const TentPatch& A) {
  require(A.slice_lo >= 0 && A.slice_hi <= static_cast<int>(ladder.size()) && A.slice_lo <= A.slice_hi,
          ErrorCode::kInvalidArgument, "patch slice range outside the ladder");
  require(static_cast<int>(A.data.size()) == A.slice_hi - A.slice_lo, ErrorCode::kDimensionMismatch,
          "patch data does not match its slice range");
  const std::size_t nc = basis(g.n, A.degree).size();
  for (const auto& s : A.data) {
    require(s.size() == nc, ErrorCode::kDimensionMismatch, "patch component count");
    for (const auto& c : s)
      require(c.size() == A.window.points(g.n), ErrorCode::kDimensionMismatch, "patch window size");
  }
}

}  // namespace

double patch_energy(const GridSpec& g, const TLadder& ladder, const TentPatch& A) {
  check_patch(g, ladder, A);
  double e = 0.0;
  for (int s = A.slice_lo; s < A.slice_hi; ++s) {
    double acc = 0.0;
    for (const auto& c : A.data[s - A.slice_lo])
      for (double v : c) acc += v * v;
    e += ladder.weights[s] * acc;
  }
  return e * g.cell_volume();
}

double tent_energy(const TentFunction& U) {
  U.validate();
  double e = 0.0;
  for (std::size_t i = 0; i < U.slices.size(); ++i) {
    const double l2 = l2_norm(U.slices[i]);
    e += U.ladder.weights[i] * l2 * l2;
  }
  return e;
}

void add_patch(TentFunction& U, const TentPatch& A, double coefficient) {
  U.validate();
  const GridSpec& g = U.grid();
  check_patch(g, U.ladder, A);
  require(A.degree == U.degree(), ErrorCode::kDimensionMismatch, "patch degree differs from the tent function");
  const std::size_t np = A.window.points(g.n);
  std::vector<std::size_t> map(np);
  for (std::size_t k = 0; k < np; ++k) map[k] = window_to_grid(g, A.window, k);
  for (int s = A.slice_lo; s < A.slice_hi; ++s)
    for (std::size_t c = 0; c < A.data[s - A.slice_lo].size(); ++c) {
      const auto& src = A.data[s - A.slice_lo][c];
      auto& dst = U.slices[s].comp(static_cast<int>(c));
      for (std::size_t k = 0; k < np; ++k) dst[map[k]] += coefficient * src[k];
    }
}

TentOperators::TentOperators(const GridSpec& grid, double sigma, const TLadder& ladder, std::uint64_t seed)
    : grid_(grid), sigma_(sigma), seed_(seed), ladder_(ladder) {
  grid.validate();
  require(!ladder.nodes.empty(), ErrorCode::kInvalidArgument, "empty t-ladder");
  spec_ = phi_spec(grid.n, sigma, seed);
  phi_.resize(ladder.size());
  psi_.resize(ladder.size());
  dphi_.resize(ladder.size());
  parallel_for(ladder.size(), [&](std::size_t i) {
    phi_[i] = sample_kernel(spec_, ladder.nodes[i], grid.h);
    psi_[i] = sample_staggered_vector(spec_, ladder.nodes[i], grid.h, 2.0);
    psi_[i].provenance = "Psi";
    dphi_[i] = make_dphi(phi_[i]);
  });
  check_no_wrap(grid, psi_.back());
  check_no_wrap(grid, dphi_.back());
  check_no_wrap(grid, convolve_kernels(phi_.back(), phi_.back()));
}

SampledKernel TentOperators::theta(double t) const {
  SampledKernel p = sample_kernel(spec_, t, grid_.h);
  return convolve_kernels(p, p);
}

PotentialConfig TentOperators::potential_config() const {
  PotentialConfig c;
  c.n = grid_.n;
  c.h = grid_.h;
  c.sigma = sigma_;
  c.route = KernelRoute::kReproducing;
  c.orientation = Orientation::kUpward;
  c.a = ladder_.t_min;
  c.b = ladder_.t_max;
  c.panels_per_octave = ladder_.per_octave;
  c.phi_seed = seed_;
  return c;
}

TentFunction TentOperators::q(const FormField& u, ConvolutionMode mode) const {
  require(u.grid() == grid_, ErrorCode::kDimensionMismatch, "field grid differs from the operators");
  require(u.degree() >= 1, ErrorCode::kDegreeOutOfRange, "Q needs a form of degree at least 1");
  TentFunction U;
  U.ladder = ladder_;
  U.slices.assign(ladder_.size(), FormField(grid_, u.degree() - 1));
  parallel_for(ladder_.size(), [&](std::size_t i) { U.slices[i] = contract_convolve(psi_[i], u, mode); });
  return U;
}

FormField TentOperators::pi(const TentFunction& U, ConvolutionMode mode) const {
  U.validate();
  require(U.grid() == grid_ && U.slices.size() == ladder_.size(), ErrorCode::kDimensionMismatch,
          "tent function does not match the operators");
  std::vector<FormField> parts(ladder_.size(), FormField(grid_, U.degree() + 1));
  parallel_for(ladder_.size(), [&](std::size_t i) {
    parts[i] = wedge_convolve(dphi_[i], U.slices[i], mode);
    parts[i] *= ladder_.weights[i];
  });
  FormField out(grid_, U.degree() + 1);
  for (const auto& p : parts) out += p;
  return out;
}

FormField TentOperators::pi(const TentPatch& A) const {
  check_patch(grid_, ladder_, A);
  const int n = grid_.n;
  require(A.degree <= n, ErrorCode::kDegreeOutOfRange, "form degree out of range");
  FormField out(grid_, A.degree + 1);
  const auto& ob = basis(n, A.degree + 1);
  const auto strides = window_strides(A.window, n);
  const double hn = grid_.cell_volume();
  for (int s = A.slice_lo; s < A.slice_hi; ++s) {
    const auto& slice = A.data[s - A.slice_lo];
    for (int j = 0; j < n; ++j) {
      KernelTaps taps = kernel_taps(dphi_[s], j, ladder_.weights[s] * hn);
      for (std::size_t c = 0; c < ob.size(); ++c) {
        if (!ob[c].contains(j)) continue;
        const MultiIndex I = ob[c].without(j);
        const auto& src = slice[basis_position(n, I)];
        scatter_accumulate(grid_, src.data(), strides, A.window, taps, out.comp(static_cast<int>(c)).data(),
                           insertion_sign(j, I));
      }
    }
  }
  return out;
}

FormField TentOperators::primitive(const TentPatch& A) const {
  check_patch(grid_, ladder_, A);
  FormField out(grid_, A.degree);
  const auto strides = window_strides(A.window, grid_.n);
  for (int s = A.slice_lo; s < A.slice_hi; ++s) {
    KernelTaps taps = kernel_taps(phi_[s], 0, ladder_.weights[s] * ladder_.nodes[s] * grid_.cell_volume());
    const auto& slice = A.data[s - A.slice_lo];
    for (int c = 0; c < out.ncomp(); ++c)
      scatter_accumulate(grid_, slice[c].data(), strides, A.window, taps, out.comp(c).data());
  }
  return out;
}

std::vector<double> area_integral(const TentFunction& U) {
  U.validate();
  const GridSpec& g = U.grid();
  const int n = g.n;
  IVec N{1, 1, 1};
  for (int a = 0; a < n; ++a) N[3 - n + a] = g.sizes[a];
  const std::size_t P = g.points();
  const int L = N[2];
  const double hn = g.cell_volume();
  std::vector<double> S(P, 0.0);
  std::vector<double> pre(P + P / L);  // per-row prefix sums with a leading zero
  for (std::size_t i = 0; i < U.slices.size(); ++i) {
    const double t = U.ladder.nodes[i];
    const double wgt = U.ladder.weights[i] * std::pow(t, -n) * hn;
    auto mag = pointwise_norm(U.slices[i]);
    const std::size_t rows = P / L;
    for (std::size_t r = 0; r < rows; ++r) {
      double* p = pre.data() + r * (L + 1);
      p[0] = 0.0;
      for (int k = 0; k < L; ++k) p[k + 1] = p[k] + mag[r * L + k] * mag[r * L + k];
    }
    const double R = t / g.h;
    const double R2 = R * R;
    const int Ri = static_cast<int>(std::ceil(R));
    const int r0 = N[0] > 1 ? Ri : 0;
    const int r1 = N[1] > 1 ? Ri : 0;
    // Chord half-widths along the last axis for each cross-section offset.
    std::vector<std::array<int, 3>> chords;
    for (int d0 = -r0; d0 <= r0; ++d0)
      for (int d1 = -r1; d1 <= r1; ++d1) {
        const double s = R2 - double(d0) * d0 - double(d1) * d1;
        if (s <= 0.0) continue;
        int m = static_cast<int>(std::floor(std::sqrt(s)));
        while (m >= 0 && double(m) * m >= s) --m;
        if (m >= 0) chords.push_back({d0, d1, m});
      }
    parallel_for(static_cast<std::size_t>(N[0]), [&](std::size_t x0) {
      for (int x1 = 0; x1 < N[1]; ++x1)
        for (int x2 = 0; x2 < L; ++x2) {
          double acc = 0.0;
          for (const auto& c : chords) {
            const int y0 = static_cast<int>(x0) + c[0], y1 = x1 + c[1];
            if (y0 < 0 || y0 >= N[0] || y1 < 0 || y1 >= N[1]) continue;
            const int lo = std::max(0, x2 - c[2]), hi = std::min(L - 1, x2 + c[2]);
            const double* p = pre.data() + (static_cast<std::size_t>(y0) * N[1] + y1) * (L + 1);
            acc += p[hi + 1] - p[lo];
          }
          S[(x0 * N[1] + x1) * L + x2] += wgt * acc;
        }
    });
  }
  for (double& v : S) v = std::sqrt(std::max(0.0, v));
  return S;
}

double tent_norm(const TentFunction& U, double p) {
  require(p > 0.0, ErrorCode::kInvalidArgument, "tent norm needs p > 0");
  auto S = area_integral(U);
  double acc = 0.0;
  for (double v : S) acc += std::pow(v, p);
  return std::pow(acc * U.grid().cell_volume(), 1.0 / p);
}

CalderonReport calderon_residual(const TentOperators& ops, const FormField& u, ConvolutionMode mode) {
  const GridSpec& g = ops.grid();
  require(u.grid() == g, ErrorCode::kDimensionMismatch, "field grid differs from the operators");
  require(u.degree() >= 1, ErrorCode::kDegreeOutOfRange, "reproducing formula needs degree at least 1");
  CalderonReport rep;
  rep.norm_u = l2_norm(u);
  require(rep.norm_u > 0.0, ErrorCode::kInvalidArgument, "degenerate norm: field is zero");
  if (u.degree() < g.n) {
    const double du = l2_norm(exterior_derivative(u));
    require(du * g.h <= 1e-12 * rep.norm_u, ErrorCode::kPreconditionViolated, "field is not closed");
  }
  FormField lhs = ops.pi(ops.q(u, mode), mode);
  FormField ta = convolve(u, ops.theta(ops.ladder().t_min), mode);
  FormField tb = convolve(u, ops.theta(ops.ladder().t_max), mode);
  rep.truncation_a = l2_norm(ta) / rep.norm_u;
  rep.truncation_b = l2_norm(tb) / rep.norm_u;
  rep.residual = l2_norm(lhs - (ta - tb)) / rep.norm_u;
  return rep;
}

}  // namespace conewise
