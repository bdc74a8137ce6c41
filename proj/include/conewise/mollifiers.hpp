#pragma once

// Cone-supported bump kernels theta and phi, their vector companions and
// dilates f_t(x) = t^-n f(x/t). Kernels are sums of separable product bumps
// prod_i exp(-1/(1 - s_i^2)) whose boxes sit inside the admissible shell.

#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "conewise/grid_field.hpp"

namespace conewise {

struct ConeBumpSpec {
  int n = 0;
  double sigma = 1.0;
  double shell_lo = 0.0;  // lower bound on y_n
  double shell_hi = 0.0;  // upper bound on |y|
  std::string provenance;  // "theta" or "phi"
  std::vector<RVec> centers;
  std::vector<RVec> halfs;  // per-axis half widths of each box
  std::vector<double> weights;  // continuous-level weights
  std::uint64_t seed = 0;
  int attempts = 0;

  // Unit-weight bump b at x.
  double bump(std::size_t b, const RVec& x) const;
  double profile(const RVec& x) const;
  // Gradient of the profile.
  RVec profile_gradient(const RVec& x) const;
  // Smallest full width over all boxes and axes.
  double min_extent() const;
  // Largest |coordinate| reached by any box, per axis (low, high).
  void bounds(RVec& lo, RVec& hi) const;
  // Every box corner lies in the shell intersected with the closed cone.
  bool boxes_admissible() const;

  // Transforms with the convention f^(xi) = int f(x) exp(-i x.xi) dx.
  std::complex<double> fourier(const RVec& xi) const;
  // Transform of f(x) x_j.
  std::complex<double> fourier_moment(const RVec& xi, int j) const;
  double integral() const;
};

// Integral of exp(-1/(1-s^2)) over (-1, 1).
double bump_mass();
double bump_profile(double s);
// int_{-1}^{1} beta(s) cos(nu s) ds and its nu-derivative.
void bump_transform(double nu, double& value, double& derivative);

ConeBumpSpec theta_spec(int n, double sigma);
// Re-seeds up to 8 times when the moment system is degenerate.
ConeBumpSpec phi_spec(int n, double sigma, std::uint64_t seed);

// Samples of the dilate at spacing h. theta_t is renormalized to unit
// discrete mass; phi_t has its weights re-solved so that the discrete mass
// is 1 and the discrete first moments vanish. Samples are rounded to a
// dyadic quantum 2^-44 relative to the peak, which keeps lattice
// differences and their sums exact.
SampledKernel sample_kernel(const ConeBumpSpec& spec, double t, double h, const RVec& shift = {0.0, 0.0, 0.0});

// Vector kernel whose component j samples f_t(x) x_j scale / t at the points
// x = lattice - offset h e_j. With offset 1/2 forward differences of
// component j are centred on the lattice.
SampledKernel sample_staggered_vector(const ConeBumpSpec& spec, double t, double h, double scale,
                                      double offset = 0.5);

// t = 1 kernels; the shell must be spanned by at least 16 samples.
SampledKernel build_theta(int n, double sigma, double h);
SampledKernel build_phi(int n, double sigma, double h, std::uint64_t seed);

// Theta_t = theta_t x / t.
SampledKernel make_big_theta(const SampledKernel& theta_t);
// Psi_t = 2 phi_t x / t.
SampledKernel make_psi(const SampledKernel& phi_t);
// (d phi)_t = t D(phi_t), forward differences.
SampledKernel make_dphi(const SampledKernel& phi_t);

struct DerivedKernels {
  SampledKernel big_theta;
  SampledKernel psi;
  SampledKernel dphi;
};
DerivedKernels derive_vector_kernels(const SampledKernel& k);

// Relative sup norm of phi * Psi - (phi * phi) x.
double verify_phi_psi_theta(const SampledKernel& phi, const SampledKernel& psi);

// Samples of -(1/t) (div Theta)_t from the analytic profile, for the
// d/dt theta_t identity.
SampledKernel sample_theta_time_derivative(const ConeBumpSpec& spec, double t, double h);

// Every nonzero sample lies in the spec's shell and closed cone.
bool kernel_in_shell(const SampledKernel& k, double t);

}  // namespace conewise
