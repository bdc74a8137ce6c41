#include "conewise/grid_field.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "conewise/error.hpp"
#include "fft.hpp"

namespace conewise {

namespace {

using A3 = std::array<int, 3>;

// Pad an n-axis vector to three axes by prepending `fill`.
A3 pad3(const IVec& v, int n, int fill) {
  A3 r{fill, fill, fill};
  for (int a = 0; a < n; ++a) r[3 - n + a] = v[a];
  return r;
}

inline int wrap(int i, int N) {
  i %= N;
  return i < 0 ? i + N : i;
}

}  // namespace

// ---------------------------------------------------------------- GridSpec

GridSpec GridSpec::make(int n, const IVec& sizes, double h, const RVec& origin) {
  GridSpec g;
  g.n = n;
  g.h = h;
  for (int a = 0; a < kMaxGridDim; ++a) {
    g.sizes[a] = a < n ? sizes[a] : 1;
    g.origin[a] = a < n ? origin[a] : 0.0;
  }
  g.validate();
  return g;
}

void GridSpec::validate() const {
  require(n >= 1 && n <= kMaxGridDim, ErrorCode::kInvalidArgument, "grid dimension must be in 1..3");
  require(h > 0.0 && std::isfinite(h), ErrorCode::kInvalidArgument, "grid spacing must be positive");
  for (int a = 0; a < n; ++a)
    require(sizes[a] >= 8, ErrorCode::kInvalidArgument, "grid sizes must be at least 8");
  for (int a = n; a < kMaxGridDim; ++a)
    require(sizes[a] == 1, ErrorCode::kInvalidArgument, "unused grid axes must have size 1");
}

std::size_t GridSpec::points() const {
  std::size_t p = 1;
  for (int a = 0; a < n; ++a) p *= static_cast<std::size_t>(sizes[a]);
  return p;
}

std::size_t GridSpec::stride(int axis) const {
  std::size_t s = 1;
  for (int b = axis + 1; b < n; ++b) s *= static_cast<std::size_t>(sizes[b]);
  return s;
}

double GridSpec::cell_volume() const { return std::pow(h, n); }

std::size_t GridSpec::flat(const IVec& idx) const {
  std::size_t k = 0;
  for (int a = 0; a < n; ++a) k = k * sizes[a] + idx[a];
  return k;
}

IVec GridSpec::unflat(std::size_t k) const {
  IVec idx{0, 0, 0};
  for (int a = n - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(k % sizes[a]);
    k /= sizes[a];
  }
  return idx;
}

bool GridSpec::operator==(const GridSpec& o) const {
  return n == o.n && sizes == o.sizes && h == o.h && origin == o.origin;
}

std::size_t Window::points(int n) const {
  std::size_t p = 1;
  for (int a = 0; a < n; ++a) p *= static_cast<std::size_t>(std::max(shape[a], 0));
  return p;
}

bool Window::empty(int n) const { return points(n) == 0; }

Window Window::whole(const GridSpec& g) {
  Window w;
  for (int a = 0; a < kMaxGridDim; ++a) {
    w.lo[a] = 0;
    w.shape[a] = g.sizes[a];
  }
  return w;
}

// ---------------------------------------------------------------- FormField

FormField::FormField(const GridSpec& grid, int degree) : grid_(grid), degree_(degree) {
  grid_.validate();
  require(degree >= 0 && degree <= grid.n + 1, ErrorCode::kDegreeOutOfRange, "form degree out of range");
  comps_.assign(basis(grid.n, degree).size(), std::vector<double>(grid.points(), 0.0));
}

int FormField::component_of(MultiIndex I) const {
  const auto& b = components();
  for (std::size_t c = 0; c < b.size(); ++c)
    if (b[c] == I) return static_cast<int>(c);
  return -1;
}

static void check_compatible(const FormField& a, const FormField& b) {
  require(a.grid() == b.grid(), ErrorCode::kDimensionMismatch, "fields live on different grids");
  require(a.degree() == b.degree(), ErrorCode::kDegreeOutOfRange, "fields have different degrees");
}

FormField& FormField::operator+=(const FormField& o) {
  axpy(1.0, o);
  return *this;
}

FormField& FormField::operator-=(const FormField& o) {
  check_compatible(*this, o);
  for (int c = 0; c < ncomp(); ++c)
    for (std::size_t k = 0; k < comps_[c].size(); ++k) comps_[c][k] -= o.comps_[c][k];
  return *this;
}

FormField& FormField::operator*=(double s) {
  for (auto& v : comps_)
    for (double& x : v) x *= s;
  return *this;
}

void FormField::axpy(double a, const FormField& x) {
  check_compatible(*this, x);
  for (int c = 0; c < ncomp(); ++c)
    for (std::size_t k = 0; k < comps_[c].size(); ++k) comps_[c][k] += a * x.comps_[c][k];
}

bool FormField::bitwise_equal(const FormField& o) const {
  if (!(grid_ == o.grid_) || degree_ != o.degree_) return false;
  for (int c = 0; c < ncomp(); ++c)
    if (std::memcmp(comps_[c].data(), o.comps_[c].data(), comps_[c].size() * sizeof(double)) != 0)
      return false;
  return true;
}

FormField operator+(FormField a, const FormField& b) { return a += b; }
FormField operator-(FormField a, const FormField& b) { return a -= b; }
FormField operator*(double s, FormField a) { return a *= s; }

// ---------------------------------------------------------------- calculus

std::vector<double> forward_difference(const GridSpec& g, const std::vector<double>& f, int axis) {
  require(axis >= 0 && axis < g.n, ErrorCode::kInvalidArgument, "axis out of range");
  const A3 N = pad3(g.sizes, g.n, 1);
  const int ax = 3 - g.n + axis;
  std::vector<double> out(f.size());
  const double inv_h = 1.0 / g.h;
  for (int i0 = 0; i0 < N[0]; ++i0)
    for (int i1 = 0; i1 < N[1]; ++i1)
      for (int i2 = 0; i2 < N[2]; ++i2) {
        A3 i{i0, i1, i2};
        A3 j = i;
        j[ax] = (j[ax] + 1 == N[ax]) ? 0 : j[ax] + 1;
        const std::size_t p = (static_cast<std::size_t>(i[0]) * N[1] + i[1]) * N[2] + i[2];
        const std::size_t q = (static_cast<std::size_t>(j[0]) * N[1] + j[1]) * N[2] + j[2];
        out[p] = (f[q] - f[p]) * inv_h;
      }
  return out;
}

FormField exterior_derivative(const FormField& u) {
  const GridSpec& g = u.grid();
  require(u.degree() <= g.n, ErrorCode::kDegreeOutOfRange, "cannot differentiate a form of degree n+1");
  FormField du(g, u.degree() + 1);
  const auto& out_basis = du.components();
  for (int c = 0; c < du.ncomp(); ++c) {
    MultiIndex J = out_basis[c];
    auto& dst = du.comp(c);
    for (int j : J.axes()) {
      MultiIndex I = J.without(j);
      const int s = insertion_sign(j, I);
      auto dj = forward_difference(g, u.comp(u.component_of(I)), j);
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += s * dj[k];
    }
  }
  return du;
}

// ---------------------------------------------------------------- norms

std::vector<double> pointwise_norm(const FormField& u) {
  std::vector<double> r(u.grid().points(), 0.0);
  for (int c = 0; c < u.ncomp(); ++c)
    for (std::size_t k = 0; k < r.size(); ++k) r[k] += u.comp(c)[k] * u.comp(c)[k];
  for (double& x : r) x = std::sqrt(x);
  return r;
}

double lp_norm(const FormField& u, double p) {
  require(p > 0.0, ErrorCode::kInvalidArgument, "p must be positive");
  auto r = pointwise_norm(u);
  double s = 0.0;
  if (p == 2.0) {
    for (double x : r) s += x * x;
  } else {
    for (double x : r) s += std::pow(x, p);
  }
  return std::pow(s * u.grid().cell_volume(), 1.0 / p);
}

double l2_norm(const FormField& u) { return lp_norm(u, 2.0); }

double max_norm(const FormField& u) {
  double m = 0.0;
  for (double x : pointwise_norm(u)) m = std::max(m, x);
  return m;
}

std::vector<char> support_mask(const FormField& u, double tau) {
  auto r = pointwise_norm(u);
  double m = 0.0;
  for (double x : r) m = std::max(m, x);
  std::vector<char> mask(r.size(), 0);
  const double thr = tau * m;
  for (std::size_t k = 0; k < r.size(); ++k) mask[k] = r[k] > thr ? 1 : 0;
  return mask;
}

Window nonzero_window(const GridSpec& g, const std::vector<const std::vector<double>*>& comps) {
  IVec lo{0, 0, 0}, hi{-1, -1, -1};
  for (int a = 0; a < g.n; ++a) {
    lo[a] = g.sizes[a];
    hi[a] = -1;
  }
  for (const auto* f : comps) {
    for (std::size_t k = 0; k < f->size(); ++k) {
      if ((*f)[k] == 0.0) continue;
      IVec i = g.unflat(k);
      for (int a = 0; a < g.n; ++a) {
        lo[a] = std::min(lo[a], i[a]);
        hi[a] = std::max(hi[a], i[a]);
      }
    }
  }
  Window w;
  for (int a = 0; a < g.n; ++a) {
    if (hi[a] < lo[a]) {
      w.lo = {0, 0, 0};
      w.shape = {0, 0, 0};
      return w;
    }
    w.lo[a] = lo[a];
    w.shape[a] = hi[a] - lo[a] + 1;
  }
  return w;
}

// ---------------------------------------------------------------- kernels

std::size_t SampledKernel::box_points() const {
  std::size_t p = 1;
  for (int a = 0; a < n; ++a) p *= static_cast<std::size_t>(shape[a]);
  return p;
}

std::size_t SampledKernel::flat(const IVec& off) const {
  std::size_t k = 0;
  for (int a = 0; a < n; ++a) k = k * shape[a] + (off[a] - lo[a]);
  return k;
}

IVec SampledKernel::offset_at(std::size_t k) const {
  IVec off{0, 0, 0};
  for (int a = n - 1; a >= 0; --a) {
    off[a] = lo[a] + static_cast<int>(k % shape[a]);
    k /= shape[a];
  }
  return off;
}

double SampledKernel::coord(int axis, std::size_t k) const { return offset_at(k)[axis] * h; }

double SampledKernel::value(int c, const IVec& off) const {
  for (int a = 0; a < n; ++a)
    if (off[a] < lo[a] || off[a] >= lo[a] + shape[a]) return 0.0;
  return values[c][flat(off)];
}

void SampledKernel::validate() const {
  require(n >= 1 && n <= kMaxGridDim, ErrorCode::kInvalidArgument, "kernel dimension must be in 1..3");
  require(ncomp() == 1 || ncomp() == n, ErrorCode::kInvalidArgument, "kernel must be scalar or vector");
  for (const auto& v : values)
    require(v.size() == box_points(), ErrorCode::kInvalidArgument, "kernel storage size mismatch");
}

SampledKernel make_kernel(int n, double h, const IVec& lo, const IVec& shape, int ncomp) {
  SampledKernel k;
  k.n = n;
  k.h = h;
  for (int a = 0; a < kMaxGridDim; ++a) {
    k.lo[a] = a < n ? lo[a] : 0;
    k.shape[a] = a < n ? shape[a] : 1;
    if (a < n) require(shape[a] >= 1, ErrorCode::kInvalidArgument, "kernel box must be nonempty");
  }
  k.values.assign(ncomp, std::vector<double>(k.box_points(), 0.0));
  return k;
}

std::vector<double> kernel_integral(const SampledKernel& k) {
  std::vector<double> r(k.ncomp(), 0.0);
  const double vol = std::pow(k.h, k.n);
  for (int c = 0; c < k.ncomp(); ++c) {
    double s = 0.0;
    for (double v : k.values[c]) s += v;
    r[c] = s * vol;
  }
  return r;
}

std::vector<double> kernel_first_moments(const SampledKernel& k) {
  require(k.ncomp() == 1, ErrorCode::kInvalidArgument, "first moments need a scalar kernel");
  std::vector<double> m(k.n, 0.0);
  const double vol = std::pow(k.h, k.n);
  for (std::size_t p = 0; p < k.box_points(); ++p) {
    const double v = k.values[0][p];
    if (v == 0.0) continue;
    IVec off = k.offset_at(p);
    for (int a = 0; a < k.n; ++a) m[a] += v * (off[a] * k.h);
  }
  for (double& x : m) x *= vol;
  return m;
}

SampledKernel kernel_trim(const SampledKernel& k) {
  IVec lo{0, 0, 0}, hi{0, 0, 0};
  bool any = false;
  for (std::size_t p = 0; p < k.box_points(); ++p) {
    bool nz = false;
    for (int c = 0; c < k.ncomp(); ++c) nz = nz || k.values[c][p] != 0.0;
    if (!nz) continue;
    IVec off = k.offset_at(p);
    if (!any) {
      lo = hi = off;
      any = true;
    }
    for (int a = 0; a < k.n; ++a) {
      lo[a] = std::min(lo[a], off[a]);
      hi[a] = std::max(hi[a], off[a]);
    }
  }
  if (!any) {
    SampledKernel z = make_kernel(k.n, k.h, IVec{0, 0, 0}, IVec{1, 1, 1}, k.ncomp());
    z.t = k.t;
    z.provenance = k.provenance;
    z.sigma = k.sigma;
    z.shell_lo = k.shell_lo;
    z.shell_hi = k.shell_hi;
    return z;
  }
  IVec shape{1, 1, 1};
  for (int a = 0; a < k.n; ++a) shape[a] = hi[a] - lo[a] + 1;
  SampledKernel r = make_kernel(k.n, k.h, lo, shape, k.ncomp());
  r.t = k.t;
  r.provenance = k.provenance;
  r.sigma = k.sigma;
  r.shell_lo = k.shell_lo;
  r.shell_hi = k.shell_hi;
  for (std::size_t p = 0; p < r.box_points(); ++p) {
    IVec off = r.offset_at(p);
    for (int c = 0; c < k.ncomp(); ++c) r.values[c][p] = k.values[c][k.flat(off)];
  }
  return r;
}

static void copy_meta(SampledKernel& dst, const SampledKernel& src) {
  dst.t = src.t;
  dst.provenance = src.provenance;
  dst.sigma = src.sigma;
  dst.shell_lo = src.shell_lo;
  dst.shell_hi = src.shell_hi;
}

SampledKernel kernel_times_coordinate(const SampledKernel& k, double scale) {
  require(k.ncomp() == 1, ErrorCode::kInvalidArgument, "coordinate product needs a scalar kernel");
  SampledKernel r = make_kernel(k.n, k.h, k.lo, k.shape, k.n);
  copy_meta(r, k);
  for (std::size_t p = 0; p < k.box_points(); ++p) {
    IVec off = k.offset_at(p);
    for (int a = 0; a < k.n; ++a) r.values[a][p] = k.values[0][p] * (off[a] * k.h * scale);
  }
  return r;
}

SampledKernel kernel_gradient(const SampledKernel& k) {
  require(k.ncomp() == 1, ErrorCode::kInvalidArgument, "gradient needs a scalar kernel");
  IVec lo = k.lo, shape = k.shape;
  for (int a = 0; a < k.n; ++a) {
    lo[a] -= 1;
    shape[a] += 1;
  }
  SampledKernel r = make_kernel(k.n, k.h, lo, shape, k.n);
  copy_meta(r, k);
  const double inv_h = 1.0 / k.h;
  for (std::size_t p = 0; p < r.box_points(); ++p) {
    IVec off = r.offset_at(p);
    const double here = k.value(0, off);
    for (int a = 0; a < k.n; ++a) {
      IVec nb = off;
      nb[a] += 1;
      r.values[a][p] = (k.value(0, nb) - here) * inv_h;
    }
  }
  return r;
}

SampledKernel kernel_divergence(const SampledKernel& K) {
  require(K.ncomp() == K.n, ErrorCode::kInvalidArgument, "divergence needs a vector kernel");
  IVec lo = K.lo, shape = K.shape;
  for (int a = 0; a < K.n; ++a) {
    lo[a] -= 1;
    shape[a] += 1;
  }
  SampledKernel r = make_kernel(K.n, K.h, lo, shape, 1);
  copy_meta(r, K);
  const double inv_h = 1.0 / K.h;
  for (std::size_t p = 0; p < r.box_points(); ++p) {
    IVec off = r.offset_at(p);
    double s = 0.0;
    for (int a = 0; a < K.n; ++a) {
      IVec nb = off;
      nb[a] += 1;
      s += (K.value(a, nb) - K.value(a, off)) * inv_h;
    }
    r.values[0][p] = s;
  }
  return r;
}

SampledKernel kernel_reflect(const SampledKernel& k) {
  IVec lo{0, 0, 0};
  for (int a = 0; a < k.n; ++a) lo[a] = -(k.lo[a] + k.shape[a] - 1);
  SampledKernel r = make_kernel(k.n, k.h, lo, k.shape, k.ncomp());
  copy_meta(r, k);
  for (std::size_t p = 0; p < r.box_points(); ++p) {
    IVec off = r.offset_at(p);
    IVec neg{0, 0, 0};
    for (int a = 0; a < k.n; ++a) neg[a] = -off[a];
    for (int c = 0; c < k.ncomp(); ++c) r.values[c][p] = k.values[c][k.flat(neg)];
  }
  return r;
}

SampledKernel kernel_combine(double a, const SampledKernel& x, double b, const SampledKernel& y) {
  require(x.n == y.n && x.h == y.h && x.ncomp() == y.ncomp(), ErrorCode::kDimensionMismatch,
          "kernels are not compatible");
  IVec lo{0, 0, 0}, shape{1, 1, 1};
  for (int d = 0; d < x.n; ++d) {
    lo[d] = std::min(x.lo[d], y.lo[d]);
    const int hi = std::max(x.lo[d] + x.shape[d], y.lo[d] + y.shape[d]);
    shape[d] = hi - lo[d];
  }
  SampledKernel r = make_kernel(x.n, x.h, lo, shape, x.ncomp());
  copy_meta(r, x);
  for (std::size_t p = 0; p < r.box_points(); ++p) {
    IVec off = r.offset_at(p);
    for (int c = 0; c < x.ncomp(); ++c) r.values[c][p] = a * x.value(c, off) + b * y.value(c, off);
  }
  return r;
}

SampledKernel convolve_kernels(const SampledKernel& a, const SampledKernel& b) {
  require(a.n == b.n && a.h == b.h, ErrorCode::kDimensionMismatch, "kernels are not compatible");
  require(a.ncomp() == 1, ErrorCode::kInvalidArgument, "left kernel must be scalar");
  IVec lo{0, 0, 0}, shape{1, 1, 1};
  for (int d = 0; d < a.n; ++d) {
    lo[d] = a.lo[d] + b.lo[d];
    shape[d] = a.shape[d] + b.shape[d] - 1;
  }
  SampledKernel r = make_kernel(a.n, a.h, lo, shape, b.ncomp());
  copy_meta(r, b);
  const double vol = std::pow(a.h, a.n);
  const A3 rs = pad3(r.shape, a.n, 1);
  const A3 as = pad3(a.shape, a.n, 1);
  for (int c = 0; c < b.ncomp(); ++c) {
    auto& out = r.values[c];
    for (std::size_t q = 0; q < b.box_points(); ++q) {
      const double w = b.values[c][q] * vol;
      if (w == 0.0) continue;
      // Offset of the a-box inside the result box.
      IVec ob = b.offset_at(q);
      IVec shift{0, 0, 0};
      for (int d = 0; d < a.n; ++d) shift[d] = ob[d] - b.lo[d];
      const A3 s3 = pad3(shift, a.n, 0);
      for (int i0 = 0; i0 < as[0]; ++i0)
        for (int i1 = 0; i1 < as[1]; ++i1) {
          const double* src = a.values[0].data() + (static_cast<std::size_t>(i0) * as[1] + i1) * as[2];
          double* dst = out.data() +
                        (static_cast<std::size_t>(i0 + s3[0]) * rs[1] + (i1 + s3[1])) * rs[2] + s3[2];
          for (int i2 = 0; i2 < as[2]; ++i2) dst[i2] += w * src[i2];
        }
    }
  }
  return r;
}

// ---------------------------------------------------------------- convolution

void check_no_wrap(const GridSpec& g, const SampledKernel& k) {
  require(g.n == k.n, ErrorCode::kDimensionMismatch, "kernel and grid dimensions differ");
  require(g.h == k.h, ErrorCode::kDimensionMismatch, "kernel and grid spacings differ");
  for (int a = 0; a < g.n; ++a)
    require(2 * k.shape[a] <= g.sizes[a], ErrorCode::kKernelWrap,
            "kernel box wider than half the grid along axis " + std::to_string(a + 1));
}

KernelTaps kernel_taps(const SampledKernel& k, int comp, double scale) {
  KernelTaps t;
  for (std::size_t p = 0; p < k.box_points(); ++p) {
    const double v = k.values[comp][p];
    if (v == 0.0) continue;
    t.offsets.push_back(k.offset_at(p));
    t.weights.push_back(v * scale);
  }
  return t;
}

void scatter_accumulate(const GridSpec& g, const double* src, const std::array<std::size_t, kMaxGridDim>& src_strides,
                        const Window& w, const KernelTaps& taps, double* out, double scale) {
  if (w.empty(g.n)) return;
  const A3 N = pad3(g.sizes, g.n, 1);
  const A3 wl = pad3(w.lo, g.n, 0);
  const A3 ws = pad3(w.shape, g.n, 1);
  std::array<std::size_t, 3> ss{0, 0, 0};
  for (int a = 0; a < g.n; ++a) ss[3 - g.n + a] = src_strides[a];
  require(ss[2] == 1, ErrorCode::kInternal, "source must be contiguous along the last axis");
  for (std::size_t e = 0; e < taps.weights.size(); ++e) {
    const A3 o = pad3(taps.offsets[e], g.n, 0);
    const double wt = taps.weights[e] * scale;
    const int start = wrap(wl[2] + o[2], N[2]);
    const int len = ws[2];
    const int first = std::min(len, N[2] - start);
    for (int i0 = 0; i0 < ws[0]; ++i0) {
      const int t0 = wrap(wl[0] + i0 + o[0], N[0]);
      for (int i1 = 0; i1 < ws[1]; ++i1) {
        const int t1 = wrap(wl[1] + i1 + o[1], N[1]);
        const double* s = src + i0 * ss[0] + i1 * ss[1];
        double* row = out + (static_cast<std::size_t>(t0) * N[1] + t1) * N[2];
        double* r1 = row + start;
        for (int k = 0; k < first; ++k) r1[k] += wt * s[k];
        for (int k = first; k < len; ++k) row[k - first] += wt * s[k];
      }
    }
  }
}

namespace {

std::array<std::size_t, kMaxGridDim> grid_strides(const GridSpec& g) {
  std::array<std::size_t, kMaxGridDim> s{1, 1, 1};
  for (int a = 0; a < g.n; ++a) s[a] = g.stride(a);
  return s;
}

// Accumulate sign * K_kc * src into out, direct mode.
void accumulate_direct(const GridSpec& g, const std::vector<double>& src, const SampledKernel& K, int kc,
                       double sign, std::vector<double>& out) {
  Window w = nonzero_window(g, {&src});
  if (w.empty(g.n)) return;
  KernelTaps taps = kernel_taps(K, kc, sign * g.cell_volume());
  scatter_accumulate(g, src.data() + g.flat(w.lo), grid_strides(g), w, taps, out.data());
}

detail::cvec kernel_spectrum(const GridSpec& g, const SampledKernel& K, int kc) {
  std::vector<double> emb(g.points(), 0.0);
  for (std::size_t p = 0; p < K.box_points(); ++p) {
    const double v = K.values[kc][p];
    if (v == 0.0) continue;
    IVec off = K.offset_at(p);
    IVec idx{0, 0, 0};
    for (int a = 0; a < g.n; ++a) idx[a] = wrap(off[a], g.sizes[a]);
    emb[g.flat(idx)] += v * g.cell_volume();
  }
  return detail::fft_forward(g, emb);
}

// Generic driver: out_c = sum over (src component, kernel component, sign).
struct Term {
  int src;
  int kc;
  int sign;
};

FormField run_terms(const FormField& u, const SampledKernel& K, int out_degree,
                    const std::vector<std::vector<Term>>& terms, ConvolutionMode mode) {
  const GridSpec& g = u.grid();
  check_no_wrap(g, K);
  FormField out(g, out_degree);
  if (mode == ConvolutionMode::kDirect) {
    for (int c = 0; c < out.ncomp(); ++c)
      for (const Term& t : terms[c]) accumulate_direct(g, u.comp(t.src), K, t.kc, t.sign, out.comp(c));
    return out;
  }
  std::vector<detail::cvec> us(u.ncomp()), ks(K.ncomp());
  for (int c = 0; c < out.ncomp(); ++c) {
    if (terms[c].empty()) continue;
    detail::cvec acc(g.points(), {0.0, 0.0});
    for (const Term& t : terms[c]) {
      if (us[t.src].empty()) us[t.src] = detail::fft_forward(g, u.comp(t.src));
      if (ks[t.kc].empty()) ks[t.kc] = kernel_spectrum(g, K, t.kc);
      for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += static_cast<double>(t.sign) * ks[t.kc][k] * us[t.src][k];
    }
    out.comp(c) = detail::fft_inverse_real(g, acc);
  }
  return out;
}

}  // namespace

FormField convolve(const FormField& u, const SampledKernel& k, ConvolutionMode mode) {
  require(k.ncomp() == 1, ErrorCode::kInvalidArgument, "convolve needs a scalar kernel");
  std::vector<std::vector<Term>> terms(u.ncomp());
  for (int c = 0; c < u.ncomp(); ++c) terms[c].push_back({c, 0, 1});
  return run_terms(u, k, u.degree(), terms, mode);
}

FormField contract_convolve(const SampledKernel& K, const FormField& u, ConvolutionMode mode) {
  require(K.ncomp() == K.n, ErrorCode::kInvalidArgument, "contraction needs a vector kernel");
  require(u.degree() >= 1, ErrorCode::kDegreeOutOfRange, "cannot contract a 0-form");
  const int n = u.grid().n;
  const auto& ob = basis(n, u.degree() - 1);
  std::vector<std::vector<Term>> terms(ob.size());
  for (std::size_t c = 0; c < ob.size(); ++c) {
    for (int j = 0; j < n; ++j) {
      if (ob[c].contains(j)) continue;
      const int src = u.component_of(ob[c].with(j));
      if (src >= 0) terms[c].push_back({src, j, insertion_sign(j, ob[c])});
    }
  }
  return run_terms(u, K, u.degree() - 1, terms, mode);
}

FormField wedge_convolve(const SampledKernel& K, const FormField& u, ConvolutionMode mode) {
  require(K.ncomp() == K.n, ErrorCode::kInvalidArgument, "wedge needs a vector kernel");
  const int n = u.grid().n;
  require(u.degree() <= n, ErrorCode::kDegreeOutOfRange, "form degree out of range");
  const auto& ob = basis(n, u.degree() + 1);
  std::vector<std::vector<Term>> terms(ob.size());
  for (std::size_t c = 0; c < ob.size(); ++c) {
    for (int j : ob[c].axes()) {
      MultiIndex I = ob[c].without(j);
      terms[c].push_back({u.component_of(I), j, insertion_sign(j, I)});
    }
  }
  return run_terms(u, K, u.degree() + 1, terms, mode);
}

}  // namespace conewise
