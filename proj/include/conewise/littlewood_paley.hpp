#pragma once

// Dyadic frequency decomposition and homogeneous Sobolev norms on the
// periodic lattice. Frequencies are angular: 2 pi k / L.

#include "conewise/grid_field.hpp"

namespace conewise {

class TentOperators;

// chi(r) = 1 for r <= 1/2, 0 for r >= 1, smooth in between.
double lp_cutoff(double r);
// eta^(omega) = chi(|omega| / 2) - chi(|omega|), supported in 1/2 <= |omega| <= 2.
double lp_profile(double r);

struct DyadicSystem {
  GridSpec grid;
  int j_min = 0;
  int j_max = 0;

  static DyadicSystem make(const GridSpec& g);
  // Sum over admissible j of eta^(2^-j omega) at lattice frequency k.
  double partition_at(std::size_t flat_k) const;
  double frequency_norm(std::size_t flat_k) const;
};

FormField delta_j(const DyadicSystem& sys, const FormField& u, int j);

// Fraction of spectral energy on the Nyquist layer (unresolved modes).
double out_of_band_fraction(const FormField& u);

// (h^n / N sum_k |omega_k|^{2s} |u^_k|^2)^{1/2}; s = 0 reproduces l2_norm.
// Throws kOutOfBand when the Nyquist layer carries more than 1e-8 of the
// energy, and kPreconditionViolated for s < 0 with a nonzero mean.
double sobolev_norm(const FormField& u, double s);
// (sum_j 2^{2js} ||Delta_j u||^2)^{1/2}.
double dyadic_sobolev_norm(const DyadicSystem& sys, const FormField& u, double s);

// ||S(Q u)||_{L^p}, the operational H^p norm.
double hardy_proxy_norm(const TentOperators& ops, const FormField& u, double p);

}  // namespace conewise
