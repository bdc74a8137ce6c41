#pragma once

// Periodic lattices, discrete differential forms, sampled kernels and the
// convolution variants used by the operators.

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "conewise/exterior_algebra.hpp"

namespace conewise {

inline constexpr int kMaxGridDim = 3;
using IVec = std::array<int, kMaxGridDim>;
using RVec = std::array<double, kMaxGridDim>;

struct GridSpec {
  int n = 0;
  IVec sizes{1, 1, 1};
  double h = 1.0;
  RVec origin{0.0, 0.0, 0.0};

  static GridSpec make(int n, const IVec& sizes, double h, const RVec& origin);
  void validate() const;

  std::size_t points() const;
  std::size_t stride(int axis) const;
  double coord(int axis, int i) const { return origin[axis] + i * h; }
  double cell_volume() const;
  std::size_t flat(const IVec& idx) const;
  IVec unflat(std::size_t k) const;
  bool operator==(const GridSpec& o) const;
};

// Axis-aligned index box inside a grid, no wrap.
struct Window {
  IVec lo{0, 0, 0};
  IVec shape{1, 1, 1};

  std::size_t points(int n) const;
  bool empty(int n) const;
  static Window whole(const GridSpec& g);
};

class FormField {
 public:
  FormField() = default;
  // Degree n+1 is allowed and has no components.
  FormField(const GridSpec& grid, int degree);

  const GridSpec& grid() const { return grid_; }
  int degree() const { return degree_; }
  int ncomp() const { return static_cast<int>(comps_.size()); }
  const std::vector<MultiIndex>& components() const { return basis(grid_.n, degree_); }
  int component_of(MultiIndex I) const;

  std::vector<double>& comp(int c) { return comps_[c]; }
  const std::vector<double>& comp(int c) const { return comps_[c]; }

  FormField& operator+=(const FormField& o);
  FormField& operator-=(const FormField& o);
  FormField& operator*=(double s);
  void axpy(double a, const FormField& x);
  bool bitwise_equal(const FormField& o) const;

 private:
  GridSpec grid_;
  int degree_ = 0;
  std::vector<std::vector<double>> comps_;
};

FormField operator+(FormField a, const FormField& b);
FormField operator-(FormField a, const FormField& b);
FormField operator*(double s, FormField a);

// Forward difference (f(x + h e_axis) - f(x)) / h on the periodic lattice.
std::vector<double> forward_difference(const GridSpec& g, const std::vector<double>& f, int axis);
FormField exterior_derivative(const FormField& u);

// Euclidean norm of the component vector at every lattice point.
std::vector<double> pointwise_norm(const FormField& u);
double lp_norm(const FormField& u, double p);
double l2_norm(const FormField& u);
double max_norm(const FormField& u);
// Points where |u| > tau * max|u|; tau = 0 gives the exact nonzero set.
std::vector<char> support_mask(const FormField& u, double tau = 0.0);
// Smallest window containing every nonzero of the listed components.
Window nonzero_window(const GridSpec& g, const std::vector<const std::vector<double>*>& comps);

// Dense kernel on the offset box lo .. lo + shape - 1 (offsets in lattice
// units). Scalar kernels have one component, vector kernels n.
struct SampledKernel {
  int n = 0;
  double h = 1.0;
  IVec lo{0, 0, 0};
  IVec shape{1, 1, 1};
  std::vector<std::vector<double>> values;
  double t = 1.0;
  std::string provenance;
  double sigma = 0.0;
  double shell_lo = 0.0;
  double shell_hi = 0.0;

  int ncomp() const { return static_cast<int>(values.size()); }
  std::size_t box_points() const;
  std::size_t flat(const IVec& off) const;
  IVec offset_at(std::size_t k) const;
  double coord(int axis, std::size_t k) const;
  double value(int c, const IVec& off) const;
  void validate() const;
};

SampledKernel make_kernel(int n, double h, const IVec& lo, const IVec& shape, int ncomp);
// Sum over the lattice of each component, times h^n.
std::vector<double> kernel_integral(const SampledKernel& k);
std::vector<double> kernel_first_moments(const SampledKernel& k);
// Shrink the box to the nonzero support (all components).
SampledKernel kernel_trim(const SampledKernel& k);
// k(x) * x_j * scale, one component per axis; k must be scalar.
SampledKernel kernel_times_coordinate(const SampledKernel& k, double scale);
// Forward differences of a scalar kernel, box grown by one cell downward.
SampledKernel kernel_gradient(const SampledKernel& k);
// Sum_j forward difference of component j along axis j.
SampledKernel kernel_divergence(const SampledKernel& K);
// k(-x).
SampledKernel kernel_reflect(const SampledKernel& k);
// a*x + b*y on the union box.
SampledKernel kernel_combine(double a, const SampledKernel& x, double b, const SampledKernel& y);
// Full lattice convolution a * b; a scalar, b scalar or vector.
SampledKernel convolve_kernels(const SampledKernel& a, const SampledKernel& b);

enum class ConvolutionMode { kDirect, kTransform };

// Throws kKernelWrap when a kernel box is wider than half the grid on any axis.
void check_no_wrap(const GridSpec& g, const SampledKernel& k);

// k * u componentwise (scalar kernel).
FormField convolve(const FormField& u, const SampledKernel& k,
                   ConvolutionMode mode = ConvolutionMode::kDirect);
// sum_j K_j * (e_j _| u), degree l -> l-1.
FormField contract_convolve(const SampledKernel& K, const FormField& u,
                            ConvolutionMode mode = ConvolutionMode::kDirect);
// sum_j K_j * (dx_j ^ u), degree l -> l+1.
FormField wedge_convolve(const SampledKernel& K, const FormField& u,
                         ConvolutionMode mode = ConvolutionMode::kDirect);

// Nonzero taps of one kernel component, offsets relative to the lattice origin.
struct KernelTaps {
  std::vector<IVec> offsets;
  std::vector<double> weights;
};
KernelTaps kernel_taps(const SampledKernel& k, int comp, double scale = 1.0);

// out[y + o] += w * src[y] for every tap (o, w) and every y in the window,
// periodic in the target. src points at the window's lo corner and is laid
// out with the given strides.
void scatter_accumulate(const GridSpec& g, const double* src, const std::array<std::size_t, kMaxGridDim>& src_strides,
                        const Window& w, const KernelTaps& taps, double* out, double scale = 1.0);

}  // namespace conewise
