#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>

namespace conewise {

// Seeded generator with a portable uniform conversion.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}
  std::uint64_t bits() { return eng_(); }
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }
  int uniform_int(int lo, int hi) { return lo + static_cast<int>(eng_() % static_cast<std::uint64_t>(hi - lo + 1)); }
  double normal();

 private:
  std::mt19937_64 eng_;
};

// Worker count: CONEWISE_THREADS if set, else the hardware concurrency.
int thread_count();

// Calls f(i) for i in [0, count). Each index runs exactly once; callers keep
// results in per-index slots so the output does not depend on scheduling.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& f);

}  // namespace conewise
