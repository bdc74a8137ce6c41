#pragma once

// Special Lipschitz domains Omega = {x_n > lambda(x')} on a lattice, tents
// over lattice open sets, and Euclidean distance transforms.

#include <cstdint>
#include <string>
#include <vector>

#include "conewise/grid_field.hpp"

namespace conewise {

// Global slack for geometric assertions, in units of h.
inline constexpr double kGeometricSlackCells = 2.0;

// Distance from every lattice point to the nearest point of `target`
// (exact Euclidean distance transform, lattice units times h). With
// `outside_is_target` the lattice points just beyond the box count as targets.
std::vector<double> distance_to_set(const GridSpec& g, const std::vector<char>& target, bool outside_is_target);

enum class DomainKind { kFlat, kWedge, kRandom };

const char* domain_kind_name(DomainKind k);
DomainKind domain_kind_from_name(const std::string& s);

struct LipschitzGraphDomain {
  GridSpec grid;
  DomainKind kind = DomainKind::kFlat;
  double A = 0.0;           // requested constant
  double A_certified = 0.0; // bound on the gradient of the multilinear interpolant
  double max_adjacent_slope = 0.0;
  double sigma = 1.0;
  std::uint64_t seed = 0;
  std::vector<double> lambda;  // over the first n-1 axes, row-major; one entry for n = 1
  std::vector<double> dist_complement;  // d(x, complement of Omega) on the lattice

  double lambda_at(const IVec& idx) const;
  double height(const IVec& idx) const { return grid.coord(grid.n - 1, idx[grid.n - 1]); }
  bool contains(const IVec& idx) const { return height(idx) > lambda_at(idx); }
  bool in_closure(const IVec& idx) const { return height(idx) >= lambda_at(idx); }
  bool in_lower(const IVec& idx) const { return height(idx) < lambda_at(idx); }
  bool in_lower_closure(const IVec& idx) const { return height(idx) <= lambda_at(idx); }

  std::vector<char> mask() const;
  std::vector<char> closure_mask() const;
  std::vector<char> lower_mask() const;
  std::vector<char> lower_closure_mask() const;
  double dist_to_complement(const IVec& idx) const { return dist_complement[grid.flat(idx)]; }
};

// level shifts the graph vertically (flat: lambda = level; wedge apex height).
LipschitzGraphDomain make_domain(const GridSpec& grid, DomainKind kind, double A, double sigma, std::uint64_t seed,
                                 double level = 0.0);
// Rebuild derived data after lambda was set externally.
void finalize_domain(LipschitzGraphDomain& d);
// Max adjacent-pair slope and the cell-corner gradient bound of lambda.
void certify_lipschitz(const LipschitzGraphDomain& d, double& adjacent, double& gradient_bound);

struct ConeCheck {
  long samples = 0;
  long violations = 0;
  long mirrored_samples = 0;
  long mirrored_violations = 0;
};
// Samples x in the closure of Omega and lattice y in the open cone above x
// (and the mirrored configuration below the graph) and counts escapes.
ConeCheck cone_containment_check(const LipschitzGraphDomain& d, int samples, std::uint64_t seed,
                                 double sigma_override = 0.0);

struct TentRegion {
  GridSpec grid;
  std::vector<char> base;  // O
  double beta = 1.0;
  std::vector<double> dist;  // d(x, O^c), points beyond the box count as O^c

  static TentRegion make(const GridSpec& g, std::vector<char> base, double beta);
  bool contains(std::size_t flat_index, double t) const { return dist[flat_index] >= beta * t; }
};

}  // namespace conewise
