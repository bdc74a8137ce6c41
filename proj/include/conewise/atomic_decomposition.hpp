#pragma once

// Tent-space atomic decomposition over level sets of the area integral,
// classical (whole box) and boundary-aware (supp U inside a tent over Omega).

#include <optional>
#include <vector>

#include "conewise/grid_field.hpp"
#include "conewise/tent_space.hpp"

namespace conewise {

struct DecompositionParams {
  double p = 1.0;
  double gamma = 0.5;
  double nu = 0.5;
  double beta = 0.5;  // tent aperture of supp U over Omega

  void validate(int n) const;
  // The support argument only controls d(y, (O* cap Omega)^c) from below by
  // min(beta, nu) t, so that is the aperture the constants use.
  double beta_used() const;
  double C() const { return 2.0 + 12.0 / beta_used(); }
  double c_beta() const { return 2.0 / C(); }
};

// Volume of the unit ball in R^n.
double unit_ball_volume(int n);
double ball_volume(int n, double r);

struct LevelSets {
  int k_lo = 0;  // sets[i] is {SU > 2^(k_lo + i)}
  std::vector<std::vector<char>> sets;
  bool empty() const { return sets.empty(); }
};
LevelSets level_sets(const GridSpec& g, const std::vector<double>& SU);

struct DensitySet {
  std::vector<char> set;
  double ratio = 0.0;  // |O*| / |O|
};
// {x : M 1_O (x) > 1 - gamma}, M the centred lattice maximal function over
// closed balls (points beyond the box count as outside O).
DensitySet density_enlarge(const GridSpec& g, const std::vector<char>& O, double gamma);
// Radii (in cells) used by the maximal function on this grid.
std::vector<int> maximal_radii(const GridSpec& g);

// Dense values on a window (no wrap).
struct WindowField {
  Window window;
  std::vector<double> values;
};

struct WhitneyCover {
  std::vector<IVec> centers;
  std::vector<double> radii;       // r_j = d(x_j, O^c) / 10
  std::vector<double> dist;        // d(x_j, O^c)
  std::vector<WindowField> partition;  // phi_j, supported in 2B_j, sum = 1 on O
  int max_overlap = 0;             // max_x #{j : x in 2B_j}
  bool quarter_disjoint = false;   // (1/4)B_i pairwise disjoint
};
// Greedy cover of O (must be nonempty and proper) by balls B(x_j, d(x_j, O^c)/10).
WhitneyCover whitney_cover(const GridSpec& g, const std::vector<char>& O);

struct AtomFlags {
  bool in_tent = false;     // supp A in T(B)
  bool boxed = false;       // supp A in c_beta B x (0, 6 c_beta r(B) / beta)
  bool interior5x = false;  // 5 c_beta B in Omega (always true without Omega)
  bool normalized = false;  // int |A|^2 dy dt/t <= |B|^(1 - 2/p) (1 + slack)
  bool all() const { return in_tent && boxed && interior5x && normalized; }
};

struct TentAtom {
  TentPatch A;
  RVec center{0, 0, 0};
  IVec center_index{0, 0, 0};
  double radius = 0.0;          // r(B) after enlargement by C
  double whitney_radius = 0.0;  // r_j before enlargement
  double lambda = 0.0;
  int level = 0;
  int index = 0;
  AtomFlags flags;
};

struct TentDecomposition {
  GridSpec grid;
  TLadder ladder;
  int degree = 0;
  DecompositionParams params;
  bool boundary_aware = false;
  double C = 0.0;
  double c_beta = 0.0;
  std::vector<int> levels;            // k values that produced atoms
  std::vector<double> density_ratios; // |O*_k| / |O_k| per level used
  int max_overlap = 0;
  double energy = 0.0;                // int |U|^2 dy dt/t
  double unassigned_energy = 0.0;
  std::vector<TentAtom> atoms;
};

// Omega: lattice mask of the domain, or nullopt for the whole box.
TentDecomposition decompose(const TentFunction& U, const std::optional<std::vector<char>>& omega,
                            const DecompositionParams& params);

struct AuditReport {
  int atoms = 0;
  int failed_in_tent = 0;
  int failed_boxed = 0;
  int failed_interior = 0;
  int failed_normalized = 0;
  double reconstruction_error = 0.0;  // ||sum lambda A - U|| / ||U|| in L^2(dy dt/t)
  double sum_lambda_p = 0.0;
  double tent_norm_p = 0.0;  // ||U||_{T^p}^p
  double coefficient_ratio = 0.0;
  double max_energy_ratio = 0.0;  // max_k energy(A_k) / |B_k|^(1 - 2/p)
  int failed() const { return failed_in_tent + failed_boxed + failed_interior + failed_normalized; }
};
// Sets the per-atom flags and returns aggregate checks. Geometric slack is
// kGeometricSlackCells * h, normalization slack 10%.
AuditReport audit(TentDecomposition& dec, const TentFunction& U, const std::optional<std::vector<char>>& omega);

// Rescaling (B, lambda, A) -> (c_beta B, c_beta^(n/2) lambda, c_beta^(-n/2) A)
// for p = 1: returns max_k |vol(B_k) int |A_k|^2 dy dt/t - 1| and sum |lambda_k|.
struct UnitNormalization {
  double max_deviation = 0.0;
  double sum_lambda = 0.0;
};
UnitNormalization unit_normalization(const TentDecomposition& dec);

// Reassembles sum_k lambda_k A_k.
TentFunction reconstruct(const TentDecomposition& dec);

}  // namespace conewise
