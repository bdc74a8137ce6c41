#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "conewise/error.hpp"
#include "conewise/fields.hpp"
#include "conewise/potential_op.hpp"
#include "conewise/tent_space.hpp"
#include "conewise/util.hpp"

using namespace conewise;

namespace {

double rel(const FormField& a, const FormField& b) { return l2_norm(a - b) / l2_norm(b); }

// Shared 2D set-up: h = 1/64, ladder [0.4, 0.9] resolves phi on a 4 x 4 box.
struct Fixture2D {
  GridSpec g = GridSpec::make(2, {256, 256, 1}, 1.0 / 64, {-2, -2, 0});
  TLadder ladder = TLadder::make(0.4, 0.9, 8);
  TentOperators ops{g, 1.0, ladder};
};

const Fixture2D& fixture() {
  static const Fixture2D f;
  return f;
}

}  // namespace

TEST(TLadder, LogWeights) {
  auto l = TLadder::make(0.25, 4.0, 16);
  EXPECT_EQ(l.size(), 64u);
  double s = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) {
    if (i) EXPECT_GT(l.nodes[i], l.nodes[i - 1]);
    s += l.weights[i];
  }
  EXPECT_NEAR(s, std::log(16.0), 1e-10);
  auto w = l.as_window();
  ASSERT_EQ(w.nodes.size(), l.size());
  for (std::size_t i = 0; i < l.size(); ++i) {
    EXPECT_EQ(w.nodes[i], l.nodes[i]);
    EXPECT_NEAR(w.weights[i], l.nodes[i] * l.weights[i], 1e-15);
  }
}

TEST(TentOperators, ZeroAndLinear) {
  const auto& f = fixture();
  FormField z(f.g, 1);
  TentFunction Qz = f.ops.q(z);
  EXPECT_EQ(tent_energy(Qz), 0.0);
  EXPECT_EQ(max_norm(f.ops.pi(Qz)), 0.0);
  FormField u = smooth_bump_form(f.g, 1, {0.2, 0, 0}, 0.4, 1);
  FormField v = smooth_bump_form(f.g, 1, {0, 0.1, 0}, 0.3, 2);
  FormField s = u;
  s *= 3.0;
  s += v;
  TentFunction a = f.ops.q(s), b = f.ops.q(u), c = f.ops.q(v);
  for (std::size_t i = 0; i < a.slices.size(); ++i) {
    FormField r = b.slices[i];
    r *= 3.0;
    r += c.slices[i];
    EXPECT_LE(l2_norm(a.slices[i] - r), 1e-12 * l2_norm(r));
  }
}

TEST(TentOperators, PiOfQIsDTruncatedPotential) {
  const auto& f = fixture();
  PotentialOperator P(f.ops.potential_config());
  for (std::uint64_t seed : {3, 4}) {
    FormField u = seed == 3 ? closed_bump_form(f.g, 1, {0, 0, 0}, 0.6, seed)
                            : smooth_bump_form(f.g, 1, {0, 0, 0}, 0.6, seed);
    EXPECT_LE(rel(f.ops.pi(f.ops.q(u)), exterior_derivative(P.apply(u))), 1e-11);
  }
}

TEST(TentOperators, PatchRoutesAgree) {
  const auto& f = fixture();
  TentPatch A;
  A.window.lo = {100, 110, 0};
  A.window.shape = {20, 14, 1};
  A.slice_lo = 3;
  A.slice_hi = 9;
  A.degree = 0;
  Rng rng(5);
  const std::size_t np = A.window.points(2);
  for (int s = A.slice_lo; s < A.slice_hi; ++s) {
    std::vector<double> v(np);
    for (double& x : v) x = rng.normal();
    A.data.push_back({v});
  }
  TentFunction U = zero_tent(f.g, 0, f.ladder);
  add_patch(U, A, 1.0);
  EXPECT_NEAR(tent_energy(U), patch_energy(f.g, f.ladder, A), 1e-12 * tent_energy(U));
  FormField direct = f.ops.pi(U), patched = f.ops.pi(A);
  EXPECT_LE(rel(patched, direct), 1e-13);
  EXPECT_LE(rel(exterior_derivative(f.ops.primitive(A)), patched), 1e-11);
}

TEST(TentOperators, SingleSliceInTentStaysInBall) {
  const auto& f = fixture();
  const double r = 1.0;
  const std::size_t i = 4;
  const double t = f.ladder.nodes[i];
  TentFunction U = zero_tent(f.g, 0, f.ladder);
  for (std::size_t p = 0; p < f.g.points(); ++p) {
    IVec x = f.g.unflat(p);
    const double y0 = f.g.coord(0, x[0]), y1 = f.g.coord(1, x[1]);
    if (r - std::hypot(y0, y1) >= t) U.slices[i].comp(0)[p] = 1.0 + y0;
  }
  FormField a = f.ops.pi(U);
  auto mag = pointwise_norm(a);
  double outside = 0.0;
  for (std::size_t p = 0; p < mag.size(); ++p) {
    IVec x = f.g.unflat(p);
    if (std::hypot(f.g.coord(0, x[0]), f.g.coord(1, x[1])) > r + 2 * f.g.h) outside = std::max(outside, mag[p]);
  }
  EXPECT_GT(max_norm(a), 0.0);
  EXPECT_EQ(outside, 0.0);
}

TEST(AreaIntegral, SingleTermOracle) {
  GridSpec g = GridSpec::make(2, {40, 40, 1}, 1.0 / 8, {0, 0, 0});
  TLadder l = TLadder::make(0.5, 1.0, 4);
  TentFunction U = zero_tent(g, 0, l);
  const IVec y{17, 21, 0};
  const std::size_t i = 2;
  U.slices[i].comp(0)[g.flat(y)] = 1.0;
  auto S = area_integral(U);
  const double t = l.nodes[i];
  const double v = std::sqrt(l.weights[i] / (t * t) * g.h * g.h);
  for (std::size_t p = 0; p < g.points(); ++p) {
    IVec x = g.unflat(p);
    const double d = std::hypot(x[0] - y[0], x[1] - y[1]) * g.h;
    EXPECT_DOUBLE_EQ(S[p], d < t ? v : 0.0) << x[0] << "," << x[1];
  }
}

TEST(AreaIntegral, MatchesBruteForce) {
  for (int n = 1; n <= 3; ++n) {
    const int N = n == 3 ? 10 : 24;
    GridSpec g = GridSpec::make(n, {N, N, N}, 0.25, {0, 0, 0});
    TLadder l = TLadder::make(0.3, 1.2, 2);
    TentFunction U = zero_tent(g, 1, l);
    Rng rng(n);
    for (auto& s : U.slices)
      for (int c = 0; c < s.ncomp(); ++c)
        for (double& v : s.comp(c)) v = rng.uniform() < 0.2 ? rng.normal() : 0.0;
    auto S = area_integral(U);
    for (std::size_t p = 0; p < g.points(); ++p) {
      IVec x = g.unflat(p);
      double acc = 0.0;
      for (std::size_t i = 0; i < l.size(); ++i) {
        auto mag = pointwise_norm(U.slices[i]);
        for (std::size_t q = 0; q < g.points(); ++q) {
          IVec y = g.unflat(q);
          double d2 = 0.0;
          for (int a = 0; a < n; ++a) d2 += double(x[a] - y[a]) * (x[a] - y[a]);
          if (std::sqrt(d2) * g.h < l.nodes[i])
            acc += l.weights[i] * std::pow(l.nodes[i], -n) * g.cell_volume() * mag[q] * mag[q];
        }
      }
      EXPECT_NEAR(S[p], std::sqrt(acc), 1e-12 * (1 + std::sqrt(acc)));
    }
  }
}

TEST(TentNorm, ScalingAndAtomBound) {
  GridSpec g = GridSpec::make(2, {64, 64, 1}, 1.0 / 16, {-2, -2, 0});
  TLadder l = TLadder::make(0.1, 1.6, 8);
  // Unit-ball volume: the area integral is not averaged over the cone
  // cross-section, so a T^p atom has norm at most sqrt(|B_1|).
  const double bound = std::sqrt(std::numbers::pi) * 1.1;
  Rng rng(7);
  for (int trial = 0; trial < 8; ++trial) {
    const double r = rng.uniform(0.6, 1.5);
    const double p = trial % 2 ? 1.0 : 0.8;
    TentFunction A = zero_tent(g, 0, l);
    for (std::size_t i = 0; i < l.size(); ++i)
      for (std::size_t q = 0; q < g.points(); ++q) {
        IVec y = g.unflat(q);
        const double d = r - std::hypot(g.coord(0, y[0]), g.coord(1, y[1]));
        if (d >= l.nodes[i]) A.slices[i].comp(0)[q] = rng.normal();
      }
    const double ball = std::numbers::pi * r * r;
    const double e = tent_energy(A);
    ASSERT_GT(e, 0.0);
    const double scale = std::sqrt(std::pow(ball, 1.0 - 2.0 / p) / e);
    for (auto& s : A.slices) s *= scale;
    const double norm = tent_norm(A, p);
    EXPECT_LE(norm, bound) << "r=" << r << " p=" << p;
    TentFunction B = A;
    for (auto& s : B.slices) s *= -2.5;
    EXPECT_NEAR(tent_norm(B, p), 2.5 * norm, 1e-12 * norm);
  }
}

TEST(Calderon, BudgetAndRefusal) {
  GridSpec g = GridSpec::make(2, {512, 512, 1}, 1.0 / 64, {-4, -4, 0});
  TentOperators ops(g, 1.0, TLadder::make(0.4, 0.9));
  FormField u = closed_bump_form(g, 1, {0, 0, 0}, 2.4, 11);
  auto r = calderon_residual(ops, u, ConvolutionMode::kTransform);
  EXPECT_LE(r.residual, 1e-2);
  EXPECT_GT(r.truncation_a, 0.0);
  FormField bad = smooth_bump_form(g, 1, {0, 0, 0}, 0.6, 12);
  try {
    calderon_residual(ops, bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPreconditionViolated);
  }
}

TEST(Calderon, HalvesUnderRefinement) {
  const auto& f = fixture();
  FormField u = closed_bump_form(f.g, 1, {0, 0, 0}, 0.6, 11);
  TentOperators ops(f.g, 1.0, TLadder::make(0.4, 0.9, 16));
  const double coarse = calderon_residual(ops, u, ConvolutionMode::kTransform).residual;
  GridSpec gf = GridSpec::make(2, {512, 512, 1}, f.g.h / 2, {-2, -2, 0});
  TentOperators fine(gf, 1.0, TLadder::make(0.4, 0.9, 32));
  FormField uf = closed_bump_form(gf, 1, {0, 0, 0}, 0.6, 11);
  const double refined = calderon_residual(fine, uf, ConvolutionMode::kTransform).residual;
  EXPECT_LE(refined, 0.5 * coarse);
}
