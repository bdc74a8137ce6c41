#pragma once

// Synthetic test fields.

#include <cstdint>

#include "conewise/grid_field.hpp"

namespace conewise {

// Random polynomial coefficients times a C-infinity bump of the given radius.
FormField smooth_bump_form(const GridSpec& g, int degree, const RVec& center, double radius, std::uint64_t seed);

// u = d v with v a smooth bump form of degree - 1 rounded to a dyadic quantum,
// so that d u vanishes exactly on a dyadic lattice.
FormField closed_bump_form(const GridSpec& g, int degree, const RVec& center, double radius, std::uint64_t seed);

// Sum of `modes` random cosines per component with angular frequency
// magnitude in [omega_lo, omega_hi]; the Nyquist layer is never used.
FormField band_limited_form(const GridSpec& g, int degree, double omega_lo, double omega_hi, int modes,
                            std::uint64_t seed);
// d of a band-limited form of degree - 1.
FormField band_limited_closed_form(const GridSpec& g, int degree, double omega_lo, double omega_hi, int modes,
                                   std::uint64_t seed);

// Zero the field wherever mask is 0.
void apply_mask(FormField& u, const std::vector<char>& mask);

}  // namespace conewise
