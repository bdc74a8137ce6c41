#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "conewise/error.hpp"
#include "conewise/fields.hpp"
#include "conewise/lipschitz_domain.hpp"
#include "conewise/littlewood_paley.hpp"
#include "conewise/potential_op.hpp"
#include "conewise/util.hpp"

using namespace conewise;

namespace {

GridSpec centered(int n, int N, double h) {
  RVec o{0, 0, 0};
  for (int a = 0; a < n; ++a) o[a] = -(N / 2) * h;
  return GridSpec::make(n, {N, N, N}, h, o);
}

double rel(const FormField& a, const FormField& b) { return l2_norm(a - b) / l2_norm(b); }

}  // namespace

TEST(TruncationWindow, LogPanels) {
  auto w = TruncationWindow::make(0.15, 0.5, 16);
  EXPECT_EQ(w.nodes.size(), 28u);
  double s = 0.0;
  for (std::size_t i = 0; i < w.nodes.size(); ++i) {
    EXPECT_GT(w.weights[i], 0.0);
    if (i) EXPECT_GT(w.nodes[i], w.nodes[i - 1]);
    s += w.weights[i];
  }
  EXPECT_NEAR(s, 0.35, 1e-4);
  EXPECT_THROW(TruncationWindow::make(0.5, 0.1), Error);
}

// In one dimension T u(x) is the primitive of u from the left.
TEST(PotentialOperator, OneDimensionalPrimitive) {
  const double h = 1.0 / 1024;
  const int N = 32768;
  GridSpec g = GridSpec::make(1, {N, 1, 1}, h, {-2.0, 0, 0});
  PotentialConfig c;
  c.n = 1;
  c.h = h;
  c.a = 1.0 / 64;
  c.b = 8.0;
  PotentialOperator P(c);
  FormField u(g, 1);
  double mass = 0.0;
  for (int i = 0; i < N; ++i) {
    const double x = g.coord(0, i);
    u.comp(0)[i] = (x > 0.0 && x < 1.0) ? bump_profile(std::abs(2 * x - 1)) : 0.0;
    mass += u.comp(0)[i] * h;
  }
  for (double& v : u.comp(0)) v /= mass;
  FormField Tu = P.apply(u);
  ASSERT_EQ(Tu.degree(), 0);
  const int at2 = static_cast<int>(std::lround((2.0 - g.origin[0]) / h));
  EXPECT_NEAR(Tu.comp(0)[at2], 1.0, 2e-3);
  // Continuum: T u = F * theta_a with F the primitive of f, since the
  // upper truncation never reaches the support.
  std::vector<double> F(N, 0.0);
  for (int i = 1; i < N; ++i) F[i] = F[i - 1] + 0.5 * h * (u.comp(0)[i - 1] + u.comp(0)[i]);
  SampledKernel th = P.theta_at(c.a);
  const int at0 = static_cast<int>(std::lround(-g.origin[0] / h));
  for (int i = at0; i <= at0 + 1100; i += 50) {
    double ref = 0.0;
    for (std::size_t p = 0; p < th.box_points(); ++p) ref += th.values[0][p] * F[i - th.offset_at(p)[0]] * h;
    EXPECT_NEAR(Tu.comp(0)[i], ref, 2e-3) << i;
  }
  EXPECT_EQ(Tu.comp(0)[at0 - 64], 0.0);
}

TEST(PotentialOperator, ZeroOnFunctionsAndLinear) {
  GridSpec g = centered(2, 64, 1.0 / 64);
  PotentialConfig c;
  c.b = 0.3;
  PotentialOperator P(c);
  FormField f = smooth_bump_form(g, 0, {0, 0, 0}, 0.3, 1);
  FormField Tf = P.apply(f);
  EXPECT_EQ(Tf.degree(), 0);
  EXPECT_EQ(max_norm(Tf), 0.0);
  FormField u = smooth_bump_form(g, 1, {0.1, 0, 0}, 0.3, 2);
  FormField v = smooth_bump_form(g, 1, {0, -0.1, 0}, 0.2, 3);
  FormField s = u;
  s *= 2.0;
  s += v;
  FormField lhs = P.apply(s), rhs = P.apply(u);
  rhs *= 2.0;
  rhs += P.apply(v);
  EXPECT_LE(rel(lhs, rhs), 1e-12);
}

TEST(PotentialOperator, RejectsUnresolvedWindow) {
  PotentialConfig c;
  c.a = 0.05;
  try {
    PotentialOperator P(c);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnderResolved);
  }
}

TEST(Homotopy, AlgebraicIdentityAllDegrees) {
  for (int n = 1; n <= 3; ++n) {
    const int N = n == 3 ? 64 : 128;
    const double h = 1.0 / 32;
    // Three-dimensional convolutions go through the FFT to keep this quick.
    const ConvolutionMode mode = n == 3 ? ConvolutionMode::kTransform : ConvolutionMode::kDirect;
    GridSpec g = n == 3 ? GridSpec::make(3, {N, N, 2 * N}, h, {-1.0, -1.0, -2.0}) : centered(n, N, h);
    for (KernelRoute route : {KernelRoute::kTheta, KernelRoute::kReproducing}) {
      for (Orientation o : {Orientation::kUpward, Orientation::kReflected}) {
        PotentialConfig c;
        c.n = n;
        c.h = h;
        c.sigma = 0.5;
        c.route = route;
        c.orientation = o;
        PotentialOperator probe_spec(c = [&] {
          PotentialConfig d = c;
          d.a = 1.0;
          d.b = 1.1;
          return d;
        }());
        c.a = 8.0 * h / probe_spec.spec().min_extent() * 1.01;
        c.b = 1.2 * c.a;
        c.panels_per_octave = 4;
        PotentialOperator P(c);
        for (int l = 0; l <= n; ++l) {
          FormField u = smooth_bump_form(g, l, {0, 0, 0}, 0.25 * N * h, 10 + l);
          auto r = homotopy_residuals(P, u, mode);
          EXPECT_LE(r.algebraic, 1e-11) << "n=" << n << " l=" << l;
        }
      }
    }
  }
}

TEST(Homotopy, QuadratureBudgetAndRefinement) {
  PotentialConfig c;  // defaults: n = 2, h = 1/64, [0.15, 0.5], 16 panels
  GridSpec g = centered(2, 128, c.h);
  FormField u = smooth_bump_form(g, 1, {0, 0, 0}, 0.6, 5);
  auto r = homotopy_residuals(PotentialOperator(c), u);
  EXPECT_LE(r.algebraic, 1e-11);
  EXPECT_LE(r.quadrature, 1e-2);
  PotentialConfig fine = c;
  fine.h /= 2;
  fine.panels_per_octave *= 2;
  GridSpec gf = centered(2, 256, fine.h);
  auto rf = homotopy_residuals(PotentialOperator(fine), smooth_bump_form(gf, 1, {0, 0, 0}, 0.6, 5));
  EXPECT_LE(rf.quadrature, 0.5 * r.quadrature);
}

TEST(Homotopy, ClosedInputHasNoTdTerm) {
  PotentialConfig c;
  GridSpec g = centered(2, 128, c.h);
  FormField u = closed_bump_form(g, 1, {0, 0, 0}, 0.6, 7);
  EXPECT_EQ(max_norm(exterior_derivative(u)), 0.0);
  PotentialOperator P(c);
  auto r = homotopy_residuals(P, u);
  FormField rhs = convolve(u, P.theta_at(c.a)) - convolve(u, P.theta_at(c.b));
  EXPECT_NEAR(r.quadrature, rel(exterior_derivative(P.apply(u)), rhs) * l2_norm(rhs) / l2_norm(u), 1e-14);
}

TEST(Homotopy, DTIsIdempotentUpToBudget) {
  PotentialConfig c;
  GridSpec g = centered(2, 128, c.h);
  FormField u = closed_bump_form(g, 1, {0, 0, 0}, 0.6, 8);
  PotentialOperator P(c);
  auto dT = [&](const FormField& f) { return exterior_derivative(P.apply(f)); };
  FormField once = dT(u);
  const double single = l2_norm(once - u);
  EXPECT_LE(l2_norm(dT(once) - once), 3.0 * single);
}

TEST(SupportPreservation, FlatAndWedgeNoLeak) {
  GridSpec g = centered(2, 128, 1.0 / 64);
  for (DomainKind kind : {DomainKind::kFlat, DomainKind::kWedge}) {
    auto omega = make_domain(g, kind, kind == DomainKind::kFlat ? 0.0 : 1.0, 0.5, 1, -0.3);
    PotentialConfig c;
    c.sigma = 0.5;
    c.b = 0.3;
    PotentialOperator up(c);
    FormField u = smooth_bump_form(g, 1, {0, -0.3, 0}, 0.5, 3);
    auto rep = support_preservation_check(up, u, omega, SupportSide::kUpper);
    EXPECT_GT(rep.max_value, 0.0);
    EXPECT_GT(rep.far_points, 0);
    EXPECT_EQ(rep.leak, 0.0) << domain_kind_name(kind);
    // Mirror image of the same set-up so nothing wraps through the periodic box.
    auto lower = make_domain(g, kind, kind == DomainKind::kFlat ? 0.0 : 1.0, 0.5, 1, 0.3);
    c.orientation = Orientation::kReflected;
    PotentialOperator down(c);
    FormField w = smooth_bump_form(g, 1, {0, 0.3, 0}, 0.5, 3);
    auto rd = support_preservation_check(down, w, lower, SupportSide::kLower);
    EXPECT_GT(rd.max_value, 0.0);
    EXPECT_EQ(rd.leak, 0.0) << domain_kind_name(kind);
    EXPECT_THROW(support_preservation_check(up, u, omega, SupportSide::kLower), Error);
  }
}

TEST(SupportPreservation, StraddlingDataLeaks) {
  GridSpec g = centered(2, 128, 1.0 / 64);
  auto omega = make_domain(g, DomainKind::kFlat, 0.0, 0.5, 1, 0.0);
  PotentialConfig c;
  c.sigma = 0.5;
  c.b = 0.3;
  c.orientation = Orientation::kReflected;
  PotentialOperator P(c);
  FormField u = smooth_bump_form(g, 1, {0, 0, 0}, 0.5, 3);
  auto rep = support_preservation_check(P, u, omega, SupportSide::kLower, false);
  EXPECT_GT(rep.leak, 0.0);
}

TEST(Symbol, HomogeneousOfDegreeMinusOne) {
  for (KernelRoute route : {KernelRoute::kTheta, KernelRoute::kReproducing}) {
    PotentialConfig c;
    c.route = route;
    c.a = 0.75;
    c.b = 1.0;
    auto rep = homogeneity_check(PotentialOperator(c), 20, 42);
    EXPECT_EQ(rep.frequencies, 20);
    EXPECT_LE(rep.max_deviation, 1e-3);
  }
}

TEST(Symbol, ConjugateSymmetryAndZeroFrequency) {
  PotentialOperator P(PotentialConfig{});
  RVec xi{1.3, -0.7, 0}, mxi{-1.3, 0.7, 0};
  auto m = symbol(P, xi), mm = symbol(P, mxi);
  for (int j = 0; j < 2; ++j) {
    EXPECT_NEAR(m[j].real(), mm[j].real(), 1e-12 * std::abs(m[j]) + 1e-15);
    EXPECT_NEAR(m[j].imag(), -mm[j].imag(), 1e-12 * std::abs(m[j]) + 1e-15);
  }
  EXPECT_THROW(symbol(P, {0, 0, 0}), Error);
}

TEST(Symbol, TailDecaysLikeInverseB) {
  PotentialOperator P(PotentialConfig{});
  RVec xi{2.0, 1.0, 0};
  double prev = 0.0;
  for (double b : {4.0, 8.0, 16.0, 32.0}) {
    auto tail = symbol_tail(P, xi, b);
    const double v = std::hypot(std::abs(tail[0]), std::abs(tail[1]));
    if (prev > 0.0) EXPECT_LE(v, 0.6 * prev) << b;
    prev = v;
  }
}

TEST(Lifting, StableUnderRefinementAndScale) {
  PotentialConfig c;
  c.b = 1.0;
  GridSpec g = GridSpec::make(2, {256, 256, 1}, c.h, {0, 0, 0});
  PotentialOperator P(c);
  PotentialConfig cf = c;
  cf.h /= 2;
  GridSpec gf = GridSpec::make(2, {512, 512, 1}, cf.h, {0, 0, 0});
  PotentialOperator Pf(cf);
  for (double s : {-1.0, 0.0, 1.0}) {
    for (std::uint64_t seed = 1; seed <= 2; ++seed) {
      const double r = lifting_ratio(P, band_limited_form(g, 1, 2.0, 12.0, 6, seed), s);
      const double rf = lifting_ratio(Pf, band_limited_form(gf, 1, 2.0, 12.0, 6, seed), s);
      EXPECT_TRUE(std::isfinite(r));
      EXPECT_NEAR(rf / r, 1.0, 0.1) << "s=" << s;
    }
  }
  // Scale covariance: window [a, b] at frequency 2 xi matches [2a, 2b] at xi.
  PotentialConfig c2 = c;
  c2.a = 2 * c.a;
  c2.b = 1.0;
  c.b = 0.5;
  PotentialOperator Pa(c), Pb(c2);
  auto mode = [&](int j) {
    FormField u(g, 1);
    const int k0 = 1 << j, k1 = 2 << j;
    for (std::size_t p = 0; p < g.points(); ++p) {
      IVec i = g.unflat(p);
      const double arg = 2 * std::numbers::pi * (k0 * i[0] + k1 * i[1]) / 256.0;
      u.comp(0)[p] = std::cos(arg);
      u.comp(1)[p] = 0.5 * std::sin(arg);
    }
    return u;
  };
  for (int j = 0; j < 3; ++j) EXPECT_NEAR(lifting_ratio(Pa, mode(j + 1), 0.0) / lifting_ratio(Pb, mode(j), 0.0), 1.0, 0.03);
}
