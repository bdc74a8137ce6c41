#include <gtest/gtest.h>

#include <cmath>

#include "conewise/atomic_decomposition.hpp"
#include "conewise/error.hpp"
#include "conewise/lipschitz_domain.hpp"
#include "conewise/util.hpp"

using namespace conewise;

namespace {

GridSpec square(int N, double h) { return GridSpec::make(2, {N, N, 1}, h, {-N * h / 2, -N * h / 2, 0}); }

std::vector<char> disk(const GridSpec& g, double cx, double cy, double r) {
  std::vector<char> m(g.points(), 0);
  for (std::size_t k = 0; k < m.size(); ++k) {
    IVec i = g.unflat(k);
    const double x = g.coord(0, i[0]) - cx, y = g.coord(1, i[1]) - cy;
    m[k] = x * x + y * y < r * r;
  }
  return m;
}

std::vector<char> upper_half(const GridSpec& g, double level) {
  std::vector<char> m(g.points(), 0);
  for (std::size_t k = 0; k < m.size(); ++k) m[k] = g.coord(1, g.unflat(k)[1]) > level;
  return m;
}

// Brute-force centred maximal function over the same radii.
std::vector<char> brute_density(const GridSpec& g, const std::vector<char>& O, double gamma) {
  const auto radii = maximal_radii(g);
  std::vector<char> out(O.size(), 0);
  for (std::size_t k = 0; k < O.size(); ++k) {
    const IVec x = g.unflat(k);
    for (int r : radii) {
      long in = 0, tot = 0;
      for (int a = -r; a <= r; ++a)
        for (int b = -r; b <= r; ++b) {
          if (a * a + b * b > r * r) continue;
          ++tot;
          const int y0 = x[0] + a, y1 = x[1] + b;
          if (y0 < 0 || y1 < 0 || y0 >= g.sizes[0] || y1 >= g.sizes[1]) continue;
          in += O[g.flat({y0, y1, 0})];
        }
      if (static_cast<double>(in) > (1.0 - gamma) * tot) {
        out[k] = 1;
        break;
      }
    }
  }
  return out;
}

// Smooth random tent function supported in T_beta(Omega) and away from the
// box edges (so its cone shadow stays inside the box).
TentFunction random_tent(const GridSpec& g, const TLadder& lad, const std::vector<char>& omega, double beta,
                         std::uint64_t seed, int blobs = 4) {
  Rng rng(seed);
  const auto DO = distance_to_set(g, [&] {
    std::vector<char> c(omega.size());
    for (std::size_t k = 0; k < c.size(); ++k) c[k] = !omega[k];
    return c;
  }(), true);
  const auto Dbox = distance_to_set(g, std::vector<char>(g.points(), 0), true);
  TentFunction U = zero_tent(g, 1, lad);
  struct Blob {
    double x, y, s, t, a0, a1;
  };
  std::vector<Blob> bl;
  const double L = g.sizes[0] * g.h;
  for (int b = 0; b < blobs; ++b)
    bl.push_back({rng.uniform(-0.25, 0.25) * L, rng.uniform(0.0, 0.3) * L, rng.uniform(0.05, 0.15) * L,
                  std::exp(rng.uniform(std::log(lad.t_min), std::log(lad.t_max))), rng.normal(), rng.normal()});
  for (std::size_t i = 0; i < lad.size(); ++i) {
    const double t = lad.nodes[i];
    for (std::size_t k = 0; k < g.points(); ++k) {
      if (DO[k] < beta * t || Dbox[k] <= t + g.h) continue;
      IVec idx = g.unflat(k);
      const double x = g.coord(0, idx[0]), y = g.coord(1, idx[1]);
      double v0 = 0.0, v1 = 0.0;
      for (const auto& B : bl) {
        const double w = std::exp(-((x - B.x) * (x - B.x) + (y - B.y) * (y - B.y)) / (B.s * B.s)) *
                         std::exp(-std::pow(std::log(t / B.t), 2));
        v0 += B.a0 * w;
        v1 += B.a1 * w;
      }
      U.slices[i].comp(0)[k] = v0;
      U.slices[i].comp(1)[k] = v1;
    }
  }
  return U;
}

struct Fixture {
  GridSpec g = square(64, 1.0 / 32);
  TLadder lad = TLadder::make(1.0 / 16, 0.5, 4);
  std::vector<char> omega = upper_half(g, -0.5);
};

}  // namespace

TEST(LevelSets, ThresholdsAndNesting) {
  GridSpec g = square(32, 1.0 / 16);
  auto ball = disk(g, 0, 0, 0.5);
  std::vector<double> SU(g.points(), 0.0);
  for (std::size_t k = 0; k < SU.size(); ++k) SU[k] = ball[k] ? 3.0 : 0.0;
  auto L = level_sets(g, SU);
  ASSERT_EQ(L.k_lo, 1);
  ASSERT_EQ(L.sets.size(), 2u);
  EXPECT_EQ(L.sets[0], ball);
  EXPECT_EQ(std::count(L.sets[1].begin(), L.sets[1].end(), 1), 0);

  Rng rng(3);
  for (double& v : SU) v = rng.uniform() < 0.3 ? 0.0 : std::exp(rng.uniform(-6, 6));
  L = level_sets(g, SU);
  for (std::size_t i = 0; i < L.sets.size(); ++i) {
    long direct = 0;
    for (double v : SU) direct += v > std::ldexp(1.0, L.k_lo + static_cast<int>(i));
    EXPECT_EQ(std::count(L.sets[i].begin(), L.sets[i].end(), 1), direct);
    if (i + 1 < L.sets.size())
      for (std::size_t k = 0; k < SU.size(); ++k) EXPECT_TRUE(!L.sets[i + 1][k] || L.sets[i][k]);
  }
  EXPECT_TRUE(level_sets(g, std::vector<double>(g.points(), 0.0)).empty());
}

TEST(DensityEnlarge, MatchesBruteForce) {
  GridSpec g = square(48, 1.0 / 16);
  auto none = density_enlarge(g, std::vector<char>(g.points(), 0), 0.5);
  EXPECT_EQ(std::count(none.set.begin(), none.set.end(), 1), 0);
  auto ball = disk(g, 0.1, -0.2, 0.6);
  auto ds = density_enlarge(g, ball, 0.5);
  EXPECT_EQ(ds.set, brute_density(g, ball, 0.5));
  for (std::size_t k = 0; k < ball.size(); ++k) EXPECT_TRUE(!ball[k] || ds.set[k]);
  // Centred balls around points outside a disk are at most half filled, so
  // only a smaller gamma threshold enlarges it, concentrically.
  auto centred = disk(g, 0.0, 0.0, 0.6);
  auto wide = density_enlarge(g, centred, 0.8);
  EXPECT_GT(wide.ratio, 1.0);
  for (std::size_t k = 0; k < centred.size(); ++k) {
    const IVec i = g.unflat(k);
    const int m0 = 48 - i[0], m1 = 48 - i[1];
    if (m0 < 48 && m1 < 48) {
      EXPECT_EQ(wide.set[k], wide.set[g.flat({m0, m1, 0})]);
      EXPECT_EQ(wide.set[k], wide.set[g.flat({i[1], i[0], 0})]);
    }
  }

  Rng rng(5);
  for (int trial = 0; trial < 3; ++trial) {
    std::vector<char> O(g.points(), 0);
    for (int b = 0; b < 4; ++b) {
      auto d = disk(g, rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(0.1, 0.4));
      for (std::size_t k = 0; k < O.size(); ++k) O[k] |= d[k];
    }
    const double gamma = rng.uniform(0.2, 0.8);
    EXPECT_EQ(density_enlarge(g, O, gamma).set, brute_density(g, O, gamma));
  }
}

TEST(DensityEnlarge, WeakTypeBudget) {
  GridSpec g = square(64, 1.0 / 16);
  Rng rng(9);
  double worst = 0.0;
  for (int trial = 0; trial < 16; ++trial) {
    std::vector<char> O(g.points(), 0);
    const int nb = 1 + trial % 5;
    for (int b = 0; b < nb; ++b) {
      auto d = disk(g, rng.uniform(-1.2, 1.2), rng.uniform(-1.2, 1.2), rng.uniform(0.05, 0.5));
      for (std::size_t k = 0; k < O.size(); ++k) O[k] |= d[k];
    }
    auto ds = density_enlarge(g, O, 0.5);
    worst = std::max(worst, ds.ratio);
    // Monotone in O: a subset gives a subset.
    auto sub = disk(g, 0, 0, 0.3);
    for (std::size_t k = 0; k < O.size(); ++k) sub[k] = sub[k] && O[k];
    auto ds2 = density_enlarge(g, sub, 0.5);
    for (std::size_t k = 0; k < O.size(); ++k) EXPECT_TRUE(!ds2.set[k] || ds.set[k]);
  }
  EXPECT_LE(worst, 36.0);
  RecordProperty("max_density_ratio", std::to_string(worst));
}

TEST(Whitney, SlabRadiiCoverAndPartition) {
  GridSpec g = square(96, 1.0 / 32);
  auto O = upper_half(g, 0.0);
  auto W = whitney_cover(g, O);
  ASSERT_FALSE(W.centers.empty());
  // Away from the box edges d(x, O^c) is the height above the slab boundary.
  const int N = g.sizes[0];
  int checked = 0;
  for (std::size_t j = 0; j < W.centers.size(); ++j) {
    const IVec c = W.centers[j];
    const double y = g.coord(1, c[1]);
    const double to_edge = std::min({c[0] + 1, N - c[0], N - c[1]}) * g.h;
    if (to_edge <= y + 2 * g.h) continue;
    EXPECT_NEAR(10.0 * W.radii[j], y, 2 * g.h);
    ++checked;
  }
  EXPECT_GT(checked, 5);
  std::vector<double> sum(g.points(), 0.0);
  std::vector<char> covered(g.points(), 0), in2B(g.points(), 0);
  for (std::size_t j = 0; j < W.centers.size(); ++j) {
    for (std::size_t k = 0; k < g.points(); ++k) {
      IVec i = g.unflat(k);
      const double d = std::hypot(i[0] - W.centers[j][0], i[1] - W.centers[j][1]) * g.h;
      if (d < W.radii[j]) covered[k] = 1;
      if (d < 2 * W.radii[j]) in2B[k] = 1;
    }
    const auto& F = W.partition[j];
    std::size_t q = 0;
    for (int a = 0; a < F.window.shape[0]; ++a)
      for (int b = 0; b < F.window.shape[1]; ++b, ++q) {
        const IVec y{F.window.lo[0] + a, F.window.lo[1] + b, 0};
        const double d = std::hypot(y[0] - W.centers[j][0], y[1] - W.centers[j][1]) * g.h;
        EXPECT_GE(F.values[q], 0.0);
        if (F.values[q] > 0.0) EXPECT_LT(d, 2 * W.radii[j]);
        sum[g.flat(y)] += F.values[q];
      }
  }
  for (std::size_t k = 0; k < g.points(); ++k) {
    if (O[k]) {
      EXPECT_TRUE(covered[k]);
      EXPECT_NEAR(sum[k], 1.0, 1e-10);
    } else {
      EXPECT_EQ(sum[k], 0.0);
    }
    if (!in2B[k]) EXPECT_EQ(sum[k], 0.0);
  }
  EXPECT_GE(W.max_overlap, 1);
  RecordProperty("max_overlap", W.max_overlap);
  EXPECT_THROW(whitney_cover(g, std::vector<char>(g.points(), 0)), Error);
  EXPECT_THROW(whitney_cover(g, std::vector<char>(g.points(), 1)), Error);
}

TEST(Params, DerivedConstants) {
  DecompositionParams p;
  EXPECT_DOUBLE_EQ(p.C(), 26.0);
  EXPECT_DOUBLE_EQ(p.c_beta(), 1.0 / 13.0);
  p.beta = 0.25;
  EXPECT_DOUBLE_EQ(p.C(), 50.0);
  p.p = 0.6;
  EXPECT_THROW(p.validate(2), Error);
  p.p = 0.7;
  EXPECT_NO_THROW(p.validate(2));
  EXPECT_NEAR(unit_ball_volume(2), M_PI, 1e-15);
  EXPECT_NEAR(unit_ball_volume(3), 4 * M_PI / 3, 1e-14);
}

TEST(Decompose, BoundaryAwareAuditsAndReconstruction) {
  Fixture s;
  for (std::uint64_t seed : {1, 2}) {
    TentFunction U = random_tent(s.g, s.lad, s.omega, 0.5, seed);
    DecompositionParams prm;
    auto dec = decompose(U, s.omega, prm);
    EXPECT_DOUBLE_EQ(dec.C, 26.0);
    EXPECT_DOUBLE_EQ(dec.c_beta, 1.0 / 13.0);
    ASSERT_FALSE(dec.atoms.empty());
    auto rep = audit(dec, U, s.omega);
    EXPECT_EQ(rep.failed(), 0);
    EXPECT_LE(rep.reconstruction_error, 1e-12);
    EXPECT_LE(rep.max_energy_ratio, 1.0 + 1e-12);
    EXPECT_LE(dec.unassigned_energy, 1e-8 * dec.energy);
    auto un = unit_normalization(dec);
    EXPECT_LE(un.max_deviation, 1e-10);
  }
}

TEST(Decompose, WholeSpaceBranch) {
  Fixture s;
  TentFunction U = random_tent(s.g, s.lad, std::vector<char>(s.g.points(), 1), 0.5, 4);
  DecompositionParams prm;
  prm.p = 0.8;
  auto dec = decompose(U, std::nullopt, prm);
  auto rep = audit(dec, U, std::nullopt);
  EXPECT_EQ(rep.failed_in_tent, 0);
  EXPECT_EQ(rep.failed_normalized, 0);
  EXPECT_LE(rep.reconstruction_error, 1e-12);
  EXPECT_GT(rep.coefficient_ratio, 0.0);
}

TEST(Decompose, SingleAtomInput) {
  Fixture s;
  // A T^1 atom over a ball deep inside Omega.
  const double r = 0.4;
  TentFunction U = zero_tent(s.g, 1, s.lad);
  for (std::size_t i = 0; i < s.lad.size(); ++i)
    for (std::size_t k = 0; k < s.g.points(); ++k) {
      IVec idx = s.g.unflat(k);
      const double x = s.g.coord(0, idx[0]), y = s.g.coord(1, idx[1]) - 0.3;
      const double d = r - std::hypot(x, y);
      if (d >= s.lad.nodes[i]) U.slices[i].comp(0)[k] = 1.0;
    }
  const double e = tent_energy(U);
  const double target = std::pow(ball_volume(2, r), -1.0);
  for (auto& sl : U.slices) sl = std::sqrt(target / e) * sl;
  DecompositionParams prm;
  auto dec = decompose(U, s.omega, prm);
  auto rep = audit(dec, U, s.omega);
  EXPECT_EQ(rep.failed(), 0);
  EXPECT_LE(rep.reconstruction_error, 1e-12);
  double sum = 0.0;
  for (const auto& a : dec.atoms) sum += std::abs(a.lambda);
  EXPECT_GT(sum, 0.2);
  EXPECT_LT(sum, 2000.0);
  RecordProperty("single_atom_sum_lambda", std::to_string(sum));
}

TEST(Decompose, BoxedFlagNegativeControl) {
  Fixture s;
  TentFunction U = random_tent(s.g, s.lad, s.omega, 0.5, 7);
  auto dec = decompose(U, s.omega, DecompositionParams{});
  ASSERT_EQ(audit(dec, U, s.omega).failed(), 0);
  std::size_t big = 0;
  for (std::size_t k = 0; k < dec.atoms.size(); ++k)
    if (dec.atoms[k].whitney_radius > dec.atoms[big].whitney_radius) big = k;
  // Move the support by one cell past the box edge plus the slack.
  auto& a = dec.atoms[big];
  const int shift = static_cast<int>(std::ceil(2 * a.whitney_radius / s.g.h)) + 3;
  a.A.window.lo[0] += shift;
  auto rep = audit(dec, U, s.omega);
  EXPECT_FALSE(dec.atoms[big].flags.boxed);
  EXPECT_GE(rep.failed_boxed, 1);
}

TEST(Decompose, Errors) {
  Fixture s;
  // Support reaching below the tent over Omega.
  TentFunction U = random_tent(s.g, s.lad, std::vector<char>(s.g.points(), 1), 0.5, 3);
  EXPECT_THROW(
      {
        try {
          decompose(U, s.omega, DecompositionParams{});
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::kPreconditionViolated);
          throw;
        }
      },
      Error);
  // Mass whose cone shadow leaves the box.
  TentFunction V = zero_tent(s.g, 1, s.lad);
  V.slices.back().comp(0)[s.g.flat({1, 40, 0})] = 1.0;
  EXPECT_THROW(
      {
        try {
          decompose(V, std::nullopt, DecompositionParams{});
        } catch (const Error& e) {
          EXPECT_EQ(e.code(), ErrorCode::kBudgetExceeded);
          throw;
        }
      },
      Error);
  auto Z = decompose(zero_tent(s.g, 1, s.lad), s.omega, DecompositionParams{});
  EXPECT_TRUE(Z.atoms.empty());
}

TEST(Decompose, Deterministic) {
  Fixture s;
  TentFunction U = random_tent(s.g, s.lad, s.omega, 0.5, 11);
  auto a = decompose(U, s.omega, DecompositionParams{});
  auto b = decompose(U, s.omega, DecompositionParams{});
  ASSERT_EQ(a.atoms.size(), b.atoms.size());
  for (std::size_t k = 0; k < a.atoms.size(); ++k) {
    EXPECT_EQ(a.atoms[k].lambda, b.atoms[k].lambda);
    EXPECT_EQ(a.atoms[k].A.data, b.atoms[k].A.data);
  }
}

TEST(Decompose, CoefficientRatioBoundedAndRefinementStable) {
  // Same continuum input at h and h/2.
  DecompositionParams prm;
  double lo = INFINITY, hi = 0.0;
  std::vector<double> coarse, fine;
  for (int run = 0; run < 32; ++run) {
    for (int level = 0; level < (run < 4 ? 2 : 1); ++level) {
      const int N = level == 0 ? 48 : 96;
      GridSpec g = square(N, 2.0 / N * 0.75);
      TLadder lad = TLadder::make(0.1, 0.4, 4);
      auto omega = upper_half(g, -0.4);
      TentFunction U = random_tent(g, lad, omega, 0.5, 100 + run, 2);
      auto dec = decompose(U, omega, prm);
      auto rep = audit(dec, U, omega);
      ASSERT_EQ(rep.failed(), 0);
      ASSERT_LE(rep.reconstruction_error, 1e-12);
      if (level == 0) {
        lo = std::min(lo, rep.coefficient_ratio);
        hi = std::max(hi, rep.coefficient_ratio);
        if (run < 4) coarse.push_back(rep.coefficient_ratio);
      } else {
        fine.push_back(rep.coefficient_ratio);
      }
    }
  }
  EXPECT_GT(lo, 0.0);
  EXPECT_LT(hi / lo, 50.0);
  for (std::size_t i = 0; i < fine.size(); ++i) EXPECT_NEAR(fine[i] / coarse[i], 1.0, 0.25);
  RecordProperty("coefficient_ratio_range", std::to_string(lo) + " " + std::to_string(hi));
}
