#include "fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>

namespace conewise::detail {

namespace {

// Planner calls are not thread safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

cvec run(const GridSpec& g, cvec in, int sign) {
  int dims[kMaxGridDim];
  for (int a = 0; a < g.n; ++a) dims[a] = g.sizes[a];
  cvec out(in.size());
  auto* pin = reinterpret_cast<fftw_complex*>(in.data());
  auto* pout = reinterpret_cast<fftw_complex*>(out.data());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan = fftw_plan_dft(g.n, dims, pin, pout, sign, FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan);
  }
  return out;
}

}  // namespace

cvec fft_forward(const GridSpec& g, const std::vector<double>& f) {
  cvec in(f.begin(), f.end());
  return run(g, std::move(in), FFTW_FORWARD);
}

cvec fft_forward(const GridSpec& g, const cvec& f) { return run(g, f, FFTW_FORWARD); }

std::vector<double> fft_inverse_real(const GridSpec& g, const cvec& F) {
  cvec out = run(g, F, FFTW_BACKWARD);
  std::vector<double> r(out.size());
  const double inv = 1.0 / static_cast<double>(out.size());
  for (std::size_t k = 0; k < out.size(); ++k) r[k] = out[k].real() * inv;
  return r;
}

double angular_frequency(const GridSpec& g, int axis, int k) {
  const int N = g.sizes[axis];
  const int kk = (k <= N / 2 - (N % 2 == 0 ? 1 : 0)) ? k : k - N;
  return 2.0 * std::numbers::pi * kk / (N * g.h);
}

}  // namespace conewise::detail
