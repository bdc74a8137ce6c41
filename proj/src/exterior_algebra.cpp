#include "conewise/exterior_algebra.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "conewise/error.hpp"

namespace conewise {

int MultiIndex::degree() const { return std::popcount(static_cast<unsigned>(bits)); }

std::vector<int> MultiIndex::axes() const {
  std::vector<int> out;
  for (int j = 0; j < 8; ++j)
    if (contains(j)) out.push_back(j);
  return out;
}

std::string MultiIndex::label() const {
  std::string s;
  for (int j : axes()) s += std::to_string(j + 1);
  return s.empty() ? "0" : s;
}

MultiIndex MultiIndex::from_axes(const std::vector<int>& axes) {
  MultiIndex I;
  for (int j : axes) {
    require(j >= 0 && j < kMaxAlgebraDim, ErrorCode::kInvalidArgument, "axis out of range");
    require(!I.contains(j), ErrorCode::kInvalidArgument, "repeated axis in multi-index");
    I = I.with(j);
  }
  return I;
}

bool lex_less(MultiIndex a, MultiIndex b) {
  if (a.degree() != b.degree()) return a.degree() < b.degree();
  auto x = a.axes(), y = b.axes();
  return x < y;
}

namespace {

std::vector<std::vector<std::vector<MultiIndex>>> build_tables() {
  std::vector<std::vector<std::vector<MultiIndex>>> t(kMaxAlgebraDim + 1);
  for (int n = 0; n <= kMaxAlgebraDim; ++n) {
    t[n].resize(n + 2);
    for (unsigned m = 0; m < (1u << n); ++m) {
      MultiIndex I{static_cast<std::uint8_t>(m)};
      t[n][I.degree()].push_back(I);
    }
    for (auto& level : t[n]) std::sort(level.begin(), level.end(), lex_less);
  }
  return t;
}

const auto& tables() {
  static const auto t = build_tables();
  return t;
}

}  // namespace

const std::vector<MultiIndex>& basis(int n, int degree) {
  require(n >= 1 && n <= kMaxAlgebraDim, ErrorCode::kInvalidArgument, "dimension must be in 1..4");
  require(degree >= 0 && degree <= n + 1, ErrorCode::kDegreeOutOfRange, "form degree out of range");
  return tables()[n][degree];
}

int basis_position(int n, MultiIndex I) {
  const auto& b = basis(n, I.degree() <= n ? I.degree() : n + 1);
  for (std::size_t k = 0; k < b.size(); ++k)
    if (b[k] == I) return static_cast<int>(k);
  return -1;
}

int insertion_sign(int axis, MultiIndex I) {
  unsigned below = I.bits & ((1u << axis) - 1u);
  return (std::popcount(below) & 1) ? -1 : 1;
}

Multivector::Multivector(int n) : n_(n) {}

Multivector Multivector::vector(const std::vector<double>& a) {
  Multivector v(static_cast<int>(a.size()));
  for (std::size_t j = 0; j < a.size(); ++j) v.add(MultiIndex{}.with(static_cast<int>(j)), a[j]);
  return v;
}

Multivector Multivector::basis_form(int n, MultiIndex I, double c) {
  Multivector v(n);
  v.add(I, c);
  return v;
}

double Multivector::coeff(MultiIndex I) const {
  auto it = terms_.find(I);
  return it == terms_.end() ? 0.0 : it->second;
}

void Multivector::add(MultiIndex I, double c) {
  require(n_ >= 1 && n_ <= kMaxAlgebraDim, ErrorCode::kInvalidArgument, "dimension must be in 1..4");
  require((I.bits >> n_) == 0, ErrorCode::kDimensionMismatch, "multi-index exceeds dimension");
  terms_[I] += c;
}

void Multivector::drop_zeros() {
  for (auto it = terms_.begin(); it != terms_.end();)
    it = (it->second == 0.0) ? terms_.erase(it) : std::next(it);
}

Multivector Multivector::operator+(const Multivector& o) const {
  require(n_ == o.n_, ErrorCode::kDimensionMismatch, "dimension mismatch");
  Multivector r = *this;
  for (auto [I, c] : o.terms_) r.terms_[I] += c;
  return r;
}

Multivector Multivector::operator-(const Multivector& o) const { return *this + o * -1.0; }

Multivector Multivector::operator*(double s) const {
  Multivector r = *this;
  for (auto& [I, c] : r.terms_) c *= s;
  return r;
}

bool Multivector::operator==(const Multivector& o) const {
  if (n_ != o.n_) return false;
  Multivector a = *this, b = o;
  a.drop_zeros();
  b.drop_zeros();
  return a.terms_ == b.terms_;
}

Multivector wedge(const Multivector& u, const Multivector& v) {
  require(u.dim() == v.dim(), ErrorCode::kDimensionMismatch, "dimension mismatch in wedge");
  Multivector r(u.dim());
  for (auto [I, a] : u.terms()) {
    for (auto [J, b] : v.terms()) {
      if (I.bits & J.bits) continue;
      int sign = 1;
      for (int j : J.axes()) {
        unsigned above = I.bits & ~((2u << j) - 1u);
        if (std::popcount(above) & 1) sign = -sign;
      }
      r.add(MultiIndex{static_cast<std::uint8_t>(I.bits | J.bits)}, sign * a * b);
    }
  }
  return r;
}

Multivector contract(const std::vector<double>& a, const Multivector& u) {
  require(static_cast<int>(a.size()) == u.dim(), ErrorCode::kDimensionMismatch,
          "dimension mismatch in contraction");
  Multivector r(u.dim());
  for (auto [I, c] : u.terms()) {
    for (int j : I.axes()) {
      MultiIndex rest = I.without(j);
      r.add(rest, insertion_sign(j, rest) * a[j] * c);
    }
  }
  return r;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size(), ErrorCode::kDimensionMismatch, "dimension mismatch in dot");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

Multivector contraction_identity_residual(const std::vector<double>& a,
                                          const std::vector<double>& b,
                                          const Multivector& u) {
  Multivector bv = Multivector::vector(b);
  return contract(a, wedge(bv, u)) + wedge(bv, contract(a, u)) - u * dot(a, b);
}

double contraction_identity_max_residual(const std::vector<double>& a,
                                         const std::vector<double>& b,
                                         const Multivector& u) {
  double m = 0.0;
  const Multivector r = contraction_identity_residual(a, b, u);
  for (auto [I, c] : r.terms()) m = std::max(m, std::abs(c));
  return m;
}

}  // namespace conewise
