#include <gtest/gtest.h>

#include <cmath>

#include "conewise/error.hpp"
#include "conewise/lipschitz_domain.hpp"
#include "conewise/util.hpp"

using namespace conewise;

namespace {

GridSpec centered(int n, int N, double h) {
  RVec o{0, 0, 0};
  for (int a = 0; a < n; ++a) o[a] = -(N / 2) * h;
  return GridSpec::make(n, {N, N, N}, h, o);
}

}  // namespace

TEST(DistanceTransform, MatchesBruteForce) {
  Rng rng(1);
  for (int n = 1; n <= 3; ++n) {
    const int N = n == 3 ? 10 : 20;
    GridSpec g = GridSpec::make(n, {N, N, N}, 0.5, {0, 0, 0});
    std::vector<char> target(g.points());
    for (auto& c : target) c = rng.uniform() < 0.05;
    for (bool outside : {false, true}) {
      auto d = distance_to_set(g, target, outside);
      for (std::size_t p = 0; p < g.points(); ++p) {
        IVec x = g.unflat(p);
        double best = INFINITY;
        for (std::size_t q = 0; q < g.points(); ++q) {
          if (!target[q]) continue;
          IVec y = g.unflat(q);
          double s = 0;
          for (int a = 0; a < n; ++a) s += double(x[a] - y[a]) * (x[a] - y[a]);
          best = std::min(best, std::sqrt(s) * g.h);
        }
        if (outside)
          for (int a = 0; a < n; ++a) best = std::min(best, std::min(x[a] + 1, N - x[a]) * g.h);
        EXPECT_NEAR(d[p], best, 1e-12);
      }
    }
  }
}

TEST(Domain, FlatDistanceIsHeight) {
  GridSpec g = centered(2, 32, 1.0 / 16);
  auto d = make_domain(g, DomainKind::kFlat, 0.0, 1.0, 0);
  for (std::size_t p = 0; p < g.points(); ++p) {
    IVec i = g.unflat(p);
    const double xn = d.height(i);
    EXPECT_EQ(d.contains(i), xn > 0.0);
    if (xn > 0)
      EXPECT_NEAR(d.dist_complement[p], xn, g.h);
    else
      EXPECT_EQ(d.dist_complement[p], 0.0);
  }
}

TEST(Domain, WedgeApexDistance) {
  GridSpec g = centered(2, 64, 1.0 / 32);
  auto d = make_domain(g, DomainKind::kWedge, 1.0, 0.9, 0);
  EXPECT_NEAR(d.A_certified, 1.0, 1e-12);
  for (int k = 4; k < 24; k += 3) {
    IVec i{32, 32 + k, 0};
    const double t = d.height(i);
    EXPECT_NEAR(d.dist_to_complement(i), t / std::sqrt(2.0), g.h);
  }
}

TEST(Domain, RandomIsDeterministicAndCertified) {
  for (int n = 2; n <= 3; ++n) {
    GridSpec g = centered(n, n == 2 ? 64 : 16, 1.0 / 16);
    auto a = make_domain(g, DomainKind::kRandom, 0.5, 1.0, 7);
    auto b = make_domain(g, DomainKind::kRandom, 0.5, 1.0, 7);
    EXPECT_EQ(a.lambda, b.lambda);
    EXPECT_LE(a.A_certified, 0.5);
    EXPECT_LE(a.max_adjacent_slope, a.A_certified);
  }
}

TEST(Domain, RejectsSigmaTimesAAtLeastOne) {
  GridSpec g = centered(2, 32, 1.0 / 16);
  EXPECT_THROW(make_domain(g, DomainKind::kWedge, 1.0, 1.0, 0), Error);
}

TEST(Domain, InterpolantGradientBoundedByCertificate) {
  // Finite differences of the bilinear interpolant inside random cells.
  GridSpec g = centered(3, 16, 1.0 / 8);
  auto d = make_domain(g, DomainKind::kRandom, 0.8, 1.0, 3);
  const int N = g.sizes[0];
  auto lam = [&](int i, int j) { return d.lambda[static_cast<std::size_t>(i) * N + j]; };
  auto interp = [&](int i, int j, double u, double v) {
    return (1 - u) * (1 - v) * lam(i, j) + u * (1 - v) * lam(i + 1, j) + (1 - u) * v * lam(i, j + 1) +
           u * v * lam(i + 1, j + 1);
  };
  Rng rng(9);
  const double e = 1e-6;
  for (int s = 0; s < 2000; ++s) {
    const int i = rng.uniform_int(0, N - 2), j = rng.uniform_int(0, N - 2);
    const double u = rng.uniform(e, 1 - e), v = rng.uniform(e, 1 - e);
    const double gx = (interp(i, j, u + e, v) - interp(i, j, u - e, v)) / (2 * e * g.h);
    const double gy = (interp(i, j, u, v + e) - interp(i, j, u, v - e)) / (2 * e * g.h);
    EXPECT_LE(std::hypot(gx, gy), d.A_certified * (1 + 1e-6));
  }
  // The adjacent-pair maximum alone does not bound the interpolant: lambda = x + y.
  LipschitzGraphDomain p = d;
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < N; ++j) p.lambda[i * N + j] = (i + j) * g.h * 0.5;
  double adj, grad;
  certify_lipschitz(p, adj, grad);
  EXPECT_NEAR(adj, 0.5, 1e-12);
  EXPECT_NEAR(grad, 0.5 * std::sqrt(2.0), 1e-12);
}

TEST(ConeCheck, FlatWedgeRandom) {
  GridSpec g = centered(2, 64, 1.0 / 32);
  auto flat = make_domain(g, DomainKind::kFlat, 0.0, 3.0, 0);
  auto c = cone_containment_check(flat, 4000, 1);
  EXPECT_GT(c.samples, 100);
  EXPECT_EQ(c.violations, 0);
  EXPECT_EQ(c.mirrored_violations, 0);
  auto wedge = make_domain(g, DomainKind::kWedge, 1.0, 0.9, 0);
  c = cone_containment_check(wedge, 4000, 2);
  EXPECT_EQ(c.violations + c.mirrored_violations, 0);
  c = cone_containment_check(wedge, 20000, 3, 1.2);
  EXPECT_GT(c.violations + c.mirrored_violations, 0);
  auto rnd = make_domain(g, DomainKind::kRandom, 1.0, 0.5, 5);
  c = cone_containment_check(rnd, 4000, 4);
  EXPECT_EQ(c.violations + c.mirrored_violations, 0);
}

TEST(Tent, FlatMembershipAndScaling) {
  GridSpec g = centered(2, 32, 1.0 / 16);
  auto d = make_domain(g, DomainKind::kFlat, 0.0, 1.0, 0);
  TentRegion T1 = TentRegion::make(g, d.mask(), 1.0);
  TentRegion T2 = TentRegion::make(g, d.mask(), 2.0);
  for (std::size_t p = 0; p < g.points(); ++p) {
    IVec i = g.unflat(p);
    if (i[0] < 12 || i[0] > 20 || i[1] > 24) continue;
    const double xn = d.height(i);
    for (double t : {0.1, 0.3, 0.5}) {
      if (std::abs(xn - t) > g.h) EXPECT_EQ(T1.contains(p, t), xn >= t);
      EXPECT_EQ(T2.contains(p, t / 2), T1.contains(p, t));
    }
    EXPECT_EQ(T1.contains(p, 1e-9), static_cast<bool>(d.mask()[p]));
  }
}
