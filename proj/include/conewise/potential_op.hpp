#pragma once

// Truncated potential operator T^{a,b} u = K^{a,b} *_| u with
// K^{a,b} = int_a^b Theta_t dt, its reflection, the homotopy identity, support
// preservation and the Fourier symbol.

#include <complex>
#include <cstdint>
#include <vector>

#include "conewise/grid_field.hpp"
#include "conewise/lipschitz_domain.hpp"
#include "conewise/mollifiers.hpp"

namespace conewise {

// Midpoint rule on logarithmic panels; weights are dt weights.
struct TruncationWindow {
  double a = 0.0;
  double b = 0.0;
  int panels_per_octave = 16;
  std::vector<double> nodes;
  std::vector<double> weights;

  static TruncationWindow make(double a, double b, int panels_per_octave = 16);
  double panel_ratio() const;
};

enum class KernelRoute { kTheta, kReproducing };
enum class Orientation { kUpward, kReflected };

struct PotentialConfig {
  int n = 2;
  double h = 1.0 / 64;
  double sigma = 1.0;
  KernelRoute route = KernelRoute::kTheta;
  Orientation orientation = Orientation::kUpward;
  double a = 0.15;
  double b = 0.5;
  int panels_per_octave = 16;
  std::uint64_t phi_seed = 1;
};

class PotentialOperator {
 public:
  explicit PotentialOperator(const PotentialConfig& cfg);

  const PotentialConfig& config() const { return cfg_; }
  const TruncationWindow& window() const { return window_; }
  const ConeBumpSpec& spec() const { return spec_; }
  // K^{a,b}, reflected when the orientation says so.
  const SampledKernel& kernel() const { return K_; }
  // sum_i w_i (div Theta_{t_i}).
  const SampledKernel& delta_kernel() const { return delta_; }
  // theta_t for this route (phi_t * phi_t on the reproducing route), oriented.
  SampledKernel theta_at(double t) const;
  // Theta_t for this route, oriented.
  SampledKernel big_theta_at(double t) const;

  FormField apply(const FormField& u, ConvolutionMode mode = ConvolutionMode::kDirect) const;

 private:
  PotentialConfig cfg_;
  TruncationWindow window_;
  ConeBumpSpec spec_;
  SampledKernel K_;
  SampledKernel delta_;
};

struct HomotopyResiduals {
  double algebraic = 0.0;   // vs sum_i w_i (div Theta_{t_i}) * u
  double quadrature = 0.0;  // vs theta_a * u - theta_b * u
  double norm_u = 0.0;
  double norm_theta_a = 0.0;
  double norm_theta_b = 0.0;
};
// Residual norms relative to ||u||_2.
HomotopyResiduals homotopy_residuals(const PotentialOperator& P, const FormField& u,
                                     ConvolutionMode mode = ConvolutionMode::kDirect);

enum class SupportSide { kUpper, kLower };

struct LeakReport {
  double leak = 0.0;        // max |Tu| beyond 2h of the side's closure / max |Tu|
  double max_value = 0.0;
  long far_points = 0;
};
// With mask_input the data is first restricted to the closure of the side.
LeakReport support_preservation_check(const PotentialOperator& P, const FormField& u,
                                      const LipschitzGraphDomain& omega, SupportSide side, bool mask_input = true);

// m(xi) = int Theta^(t xi) dt over a wide window [a0, b0].
struct SymbolWindow {
  double a0 = 1e-7;
  double b0 = 1e5;
  int panels_per_octave = 32;
};
std::vector<std::complex<double>> symbol(const PotentialOperator& P, const RVec& xi, const SymbolWindow& w = {});
// Partial symbol over [b, b0].
std::vector<std::complex<double>> symbol_tail(const PotentialOperator& P, const RVec& xi, double b,
                                             const SymbolWindow& w = {});
struct HomogeneityReport {
  double max_deviation = 0.0;
  int frequencies = 0;
};
HomogeneityReport homogeneity_check(const PotentialOperator& P, int count, std::uint64_t seed,
                                    const SymbolWindow& w = {});

// ||T u||_{H^{s+1}} / ||u||_{H^s}; T is applied in transform mode, so the
// field is treated as periodic.
double lifting_ratio(const PotentialOperator& P, const FormField& u, double s);

}  // namespace conewise
