#pragma once

// Exterior algebra of R^n for n <= 4. Basis covectors dx_I are indexed by
// increasing multi-indices, stored as bitmasks (bit j-1 set for axis j).

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace conewise {

inline constexpr int kMaxAlgebraDim = 4;

struct MultiIndex {
  std::uint8_t bits = 0;

  int degree() const;
  bool contains(int axis) const { return (bits >> axis) & 1u; }
  // Axes in increasing order, zero-based.
  std::vector<int> axes() const;
  MultiIndex with(int axis) const { return {static_cast<std::uint8_t>(bits | (1u << axis))}; }
  MultiIndex without(int axis) const { return {static_cast<std::uint8_t>(bits & ~(1u << axis))}; }
  // One-based label such as "13".
  std::string label() const;

  static MultiIndex from_axes(const std::vector<int>& axes);

  bool operator==(const MultiIndex& o) const { return bits == o.bits; }
  bool operator!=(const MultiIndex& o) const { return bits != o.bits; }
};

// Lexicographic order among multi-indices of equal degree, degree first otherwise.
bool lex_less(MultiIndex a, MultiIndex b);

// Increasing multi-indices of the given degree in lexicographic order.
// Degree n+1 yields an empty basis.
const std::vector<MultiIndex>& basis(int n, int degree);
// Position of I within basis(n, I.degree()), or -1.
int basis_position(int n, MultiIndex I);

// (-1)^{#{i in I : i < axis}}; sign of dx_axis ^ dx_I relative to dx_{I+axis}
// and of e_axis _| dx_{I+axis} relative to dx_I.
int insertion_sign(int axis, MultiIndex I);

struct LexLess {
  bool operator()(MultiIndex a, MultiIndex b) const { return lex_less(a, b); }
};

// Element of Lambda(R^n), possibly of mixed degree.
class Multivector {
 public:
  explicit Multivector(int n = 0);
  static Multivector vector(const std::vector<double>& a);
  static Multivector basis_form(int n, MultiIndex I, double coeff = 1.0);

  int dim() const { return n_; }
  double coeff(MultiIndex I) const;
  void add(MultiIndex I, double c);
  const std::map<MultiIndex, double, LexLess>& terms() const { return terms_; }
  void drop_zeros();

  Multivector operator+(const Multivector& o) const;
  Multivector operator-(const Multivector& o) const;
  Multivector operator*(double s) const;
  bool operator==(const Multivector& o) const;

 private:
  int n_;
  std::map<MultiIndex, double, LexLess> terms_;
};

Multivector wedge(const Multivector& u, const Multivector& v);
// Interior product of the 1-vector a with u. Contraction of 0-forms is zero.
Multivector contract(const std::vector<double>& a, const Multivector& u);
double dot(const std::vector<double>& a, const std::vector<double>& b);

// a _| (b ^ u) + b ^ (a _| u) - (a . b) u, as a multivector.
Multivector contraction_identity_residual(const std::vector<double>& a,
                                          const std::vector<double>& b,
                                          const Multivector& u);
// Max absolute coefficient of the residual.
double contraction_identity_max_residual(const std::vector<double>& a,
                                         const std::vector<double>& b,
                                         const Multivector& u);

}  // namespace conewise
