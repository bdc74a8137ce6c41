#pragma once

// Tent-space functions U(x, t) sampled on a logarithmic t-ladder, the
// operators Q u = Psi_t *_| u and pi U = int (d phi)_t *^ U dt/t, the Lusin
// area integral and T^p norms.

#include <cstdint>
#include <vector>

#include "conewise/grid_field.hpp"
#include "conewise/mollifiers.hpp"
#include "conewise/potential_op.hpp"

namespace conewise {

// Midpoint rule in log t; weights are dt/t weights.
struct TLadder {
  double t_min = 0.0;
  double t_max = 0.0;
  int per_octave = 32;
  std::vector<double> nodes;
  std::vector<double> weights;

  static TLadder make(double t_min, double t_max, int per_octave = 32);
  std::size_t size() const { return nodes.size(); }
  // Same nodes with dt weights.
  TruncationWindow as_window() const;
};

struct TentFunction {
  TLadder ladder;
  std::vector<FormField> slices;

  const GridSpec& grid() const { return slices.front().grid(); }
  int degree() const { return slices.front().degree(); }
  void validate() const;
};

TentFunction zero_tent(const GridSpec& g, int degree, const TLadder& ladder);

// Sparse piece of a tent function: dense values on a window for a range of
// slices [slice_lo, slice_hi).
struct TentPatch {
  Window window;
  int slice_lo = 0;
  int slice_hi = 0;
  int degree = 0;
  std::vector<std::vector<std::vector<double>>> data;  // [slice - slice_lo][component][window point]

  std::size_t window_points(int n) const { return window.points(n); }
  bool empty() const { return slice_hi <= slice_lo; }
};

// sum_i w_i h^n sum_y |A_i(y)|^2, the discrete dy dt/t energy.
double patch_energy(const GridSpec& g, const TLadder& ladder, const TentPatch& A);
double tent_energy(const TentFunction& U);
// Add coefficient * A into U.
void add_patch(TentFunction& U, const TentPatch& A, double coefficient);

// Kernels phi_t, Psi_t, (d phi)_t precomputed on a ladder.
class TentOperators {
 public:
  TentOperators(const GridSpec& grid, double sigma, const TLadder& ladder, std::uint64_t seed = 1);

  const GridSpec& grid() const { return grid_; }
  const TLadder& ladder() const { return ladder_; }
  const ConeBumpSpec& spec() const { return spec_; }
  const SampledKernel& phi(std::size_t i) const { return phi_[i]; }
  const SampledKernel& psi(std::size_t i) const { return psi_[i]; }
  const SampledKernel& dphi(std::size_t i) const { return dphi_[i]; }
  // phi_t * phi_t.
  SampledKernel theta(double t) const;
  // The potential operator with the same kernels and quadrature nodes.
  PotentialConfig potential_config() const;

  TentFunction q(const FormField& u, ConvolutionMode mode = ConvolutionMode::kDirect) const;
  FormField pi(const TentFunction& U, ConvolutionMode mode = ConvolutionMode::kDirect) const;
  // pi of a single patch.
  FormField pi(const TentPatch& A) const;
  // sum_i w_i t_i phi_{t_i} * A_i, the primitive with d(b) = pi(A).
  FormField primitive(const TentPatch& A) const;

 private:
  GridSpec grid_;
  double sigma_;
  std::uint64_t seed_;
  TLadder ladder_;
  ConeBumpSpec spec_;
  std::vector<SampledKernel> phi_, psi_, dphi_;
};

// (SU)(x) = (sum_i w_i t_i^-n h^n sum_{|y - x| < t_i} |U_i(y)|^2)^{1/2}.
std::vector<double> area_integral(const TentFunction& U);
double tent_norm(const TentFunction& U, double p);

struct CalderonReport {
  double residual = 0.0;  // ||pi Q u - (theta_a * u - theta_b * u)|| / ||u||
  double norm_u = 0.0;
  double truncation_a = 0.0;  // ||theta_a * u|| / ||u||
  double truncation_b = 0.0;
};
// Refuses fields that are not closed.
CalderonReport calderon_residual(const TentOperators& ops, const FormField& u,
                                 ConvolutionMode mode = ConvolutionMode::kDirect);

}  // namespace conewise
