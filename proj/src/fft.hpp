#pragma once

// Thin FFTW wrappers over a GridSpec lattice (unnormalized transforms).

#include <complex>
#include <vector>

#include "conewise/grid_field.hpp"

namespace conewise::detail {

using cvec = std::vector<std::complex<double>>;

cvec fft_forward(const GridSpec& g, const std::vector<double>& f);
cvec fft_forward(const GridSpec& g, const cvec& f);
// Inverse transform divided by the point count; returns the real part.
std::vector<double> fft_inverse_real(const GridSpec& g, const cvec& F);
// Angular frequency 2 pi k / L of the DFT index along an axis.
double angular_frequency(const GridSpec& g, int axis, int k);

}  // namespace conewise::detail
