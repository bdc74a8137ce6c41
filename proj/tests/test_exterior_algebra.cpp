#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

#include "conewise/exterior_algebra.hpp"
#include "conewise/util.hpp"

using namespace conewise;

namespace {

// Sign of the permutation sorting `v`, by bubble sort; 0 on a repeat.
int sort_sign(std::vector<int> v) {
  int sign = 1;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j + 1 < v.size() - i; ++j) {
      if (v[j] == v[j + 1]) return 0;
      if (v[j] > v[j + 1]) {
        std::swap(v[j], v[j + 1]);
        sign = -sign;
      }
    }
  return sign;
}

Multivector random_form(int n, Rng& rng) {
  Multivector u(n);
  for (int l = 0; l <= n; ++l)
    for (MultiIndex I : basis(n, l)) u.add(I, rng.uniform_int(-5, 5));
  return u;
}

}  // namespace

TEST(Basis, CountsAndLexOrder) {
  EXPECT_EQ(basis(4, 2).size(), 6u);
  EXPECT_EQ(basis(3, 4).size(), 0u);
  std::vector<std::string> labels;
  for (auto I : basis(4, 2)) labels.push_back(I.label());
  EXPECT_EQ(labels, (std::vector<std::string>{"12", "13", "14", "23", "24", "34"}));
  EXPECT_EQ(basis_position(4, MultiIndex::from_axes({1, 3})), 4);
}

TEST(Wedge, MatchesPermutationSign) {
  for (int n = 1; n <= 4; ++n)
    for (unsigned a = 0; a < (1u << n); ++a)
      for (unsigned b = 0; b < (1u << n); ++b) {
        MultiIndex I{static_cast<std::uint8_t>(a)}, J{static_cast<std::uint8_t>(b)};
        auto w = wedge(Multivector::basis_form(n, I), Multivector::basis_form(n, J));
        std::vector<int> cat = I.axes();
        for (int j : J.axes()) cat.push_back(j);
        const int s = sort_sign(cat);
        MultiIndex U{static_cast<std::uint8_t>(a | b)};
        EXPECT_EQ(w.coeff(U), static_cast<double>(s));
      }
}

TEST(Contraction, ZeroFormGivesZero) {
  auto r = contract({1.0, 2.0}, Multivector::basis_form(2, MultiIndex{}, 3.0));
  EXPECT_TRUE(r.terms().empty());
}

TEST(Contraction, AlternatingSignOracle) {
  // e_j _| dx_I = sum_k (-1)^(k-1) [j_k = j] dx_{I without j_k}.
  for (int n = 1; n <= 4; ++n)
    for (MultiIndex I : basis(n, 3 <= n ? 3 : n)) {
      auto axes = I.axes();
      for (int j = 0; j < n; ++j) {
        std::vector<double> e(n, 0.0);
        e[j] = 1.0;
        auto r = contract(e, Multivector::basis_form(n, I));
        for (std::size_t k = 0; k < axes.size(); ++k)
          if (axes[k] == j) EXPECT_EQ(r.coeff(I.without(j)), (k % 2 == 0) ? 1.0 : -1.0);
        if (!I.contains(j)) EXPECT_TRUE(r == Multivector(n));
      }
    }
}

TEST(ContractionIdentity, BasisBruteForceExact) {
  for (int n = 1; n <= 4; ++n)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (unsigned m = 0; m < (1u << n); ++m) {
          std::vector<double> a(n, 0.0), b(n, 0.0);
          a[i] = 1.0;
          b[j] = 1.0;
          auto u = Multivector::basis_form(n, MultiIndex{static_cast<std::uint8_t>(m)});
          EXPECT_EQ(contraction_identity_max_residual(a, b, u), 0.0);
        }
}

TEST(ContractionIdentity, RandomIntegerCoefficientsExact) {
  Rng rng(7);
  for (int n = 1; n <= 4; ++n)
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> a(n), b(n);
      for (int k = 0; k < n; ++k) {
        a[k] = rng.uniform_int(-4, 4);
        b[k] = rng.uniform_int(-4, 4);
      }
      EXPECT_EQ(contraction_identity_max_residual(a, b, random_form(n, rng)), 0.0);
    }
}

TEST(Wedge, Associative) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    auto u = random_form(4, rng), v = random_form(4, rng), w = random_form(4, rng);
    EXPECT_TRUE(wedge(wedge(u, v), w) == wedge(u, wedge(v, w)));
  }
}
