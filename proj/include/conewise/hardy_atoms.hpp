#pragma once

// Hardy-space atoms a = db from tent atoms (a = pi A, b = int phi_t * A dt),
// the interior splitting into atoms with 4B inside Omega, and the pipeline
// u -> Q u -> tent atoms -> Hardy atoms.

#include <optional>
#include <vector>

#include "conewise/atomic_decomposition.hpp"
#include "conewise/lipschitz_domain.hpp"
#include "conewise/tent_space.hpp"

namespace conewise {

// A form stored on a window of the grid (no wrap).
struct WindowForm {
  Window window;
  int degree = 0;
  std::vector<std::vector<double>> comps;
};
WindowForm crop(const FormField& u, const Window& w);
FormField expand(const GridSpec& g, const WindowForm& w);
// Adds s * w into u.
void accumulate(FormField& u, const WindowForm& w, double s);

enum class HardyKind { kHd, kHzd };
const char* hardy_kind_name(HardyKind k);

struct HardyAtom {
  WindowForm a;
  WindowForm b;
  HardyKind kind = HardyKind::kHd;
  RVec center{0, 0, 0};
  IVec center_index{0, 0, 0};
  double radius = 0.0;
  double coefficient = 0.0;
  int parent = -1;  // tent atom (kHd) or Hardy atom (kHzd)

  double exactness = 0.0;   // ||a - db|| / ||a||
  double size_ratio = 0.0;  // ||a|| / |B|^(1/2 - 1/p)
  double b_constant = 0.0;  // ||b|| / (r(B) |B|^(1/2 - 1/p))
  bool support_ok = false;  // supp a in B, within the geometric slack
  bool b_support_ok = false;
  bool size_ok = false;
  bool b_size_ok = false;  // ||b|| within the Young bound sum_i w_i t_i ||phi_i||_1 ||A_i||

  bool exact_ok = false;
  bool interior_ok = false;  // 4B in Omega (kHzd only; true for kHd)
  bool passed() const { return support_ok && b_support_ok && size_ok && b_size_ok && exact_ok && interior_ok; }
};

// kappa with ||pi U||_2 <= kappa ||U||_{L^2(dy dt/t)} on this lattice:
// kappa^2 = max_xi sum_i w_i |(d phi)_{t_i}^(xi)|^2.
double pi_bound(const TentOperators& ops);

// a_k = pi(A_k) / kappa, b_k = primitive(A_k) / kappa, coefficient lambda_k kappa.
std::vector<HardyAtom> atoms_from_tent(const TentOperators& ops, const TentDecomposition& dec, double kappa);

struct BetaReport {
  double a = 0.5;
  double beta = 0.0;              // a (1 - sigma A) / sqrt(1 + A^2)
  std::vector<double> margins;    // min over supp (Q u)(., t_i) of d(y, Omega^c) / t_i
  double min_margin = 0.0;
  bool support_in_closure = false;  // supp u in the closure of Omega
  bool pass = false;              // margin_i >= beta - 2h / t_i for all i
};
BetaReport beta_support_check(const TentOperators& ops, const FormField& u, const LipschitzGraphDomain& dom,
                              double a = 0.5);

struct InteriorSplit {
  int parent = -1;
  std::vector<HardyAtom> atoms;
  int M = 0;                    // balls covering G
  double grad_constant = 0.0;   // max_j ||grad eta_j||_inf * r(B_parent)
  double max_mu = 0.0;          // max_j mu_j
  double partition_error = 0.0; // ||sum_j mu_j a_j - d b|| / ||d b||
  double parent_error = 0.0;    // ||sum_j mu_j a_j - a|| / ||a||
};
// Splits an H^p_d atom produced from tent atom `dec.atoms[atom.parent]`;
// dist_omega is d(x, complement of Omega) on the lattice.
InteriorSplit interior_split(const TentOperators& ops, const HardyAtom& atom, const TentDecomposition& dec,
                             const std::vector<double>& dist_omega);

struct HardyResult {
  TentDecomposition tent;
  AuditReport tent_audit;
  double kappa = 0.0;
  double beta_measured = 0.0;
  std::vector<HardyAtom> atoms;  // final atoms: kHd on the whole box, kHzd with a domain
  bool fields_kept = true;
  int parents = 0;
  int failed_atoms = 0;
  int M_min = 0;
  int M_max = 0;
  double grad_constant = 0.0;
  double max_mu = 0.0;
  double primitive_constant = 0.0;  // max ||b_k|| / (r_k |B_k|^(1/2 - 1/p)) over parents
  double max_exactness = 0.0;
  double split_error = 0.0;       // worst partition identity error
  double synthesis_error = 0.0;   // ||sum c a - pi Q u|| / ||pi Q u||
  double reconstruction = 0.0;    // ||sum c a - (theta_a - theta_b) * u|| / ||u||
  double truncation_a = 0.0;
  double truncation_b = 0.0;
  double sum_coefficients_p = 0.0;
  double proxy_norm_p = 0.0;
  double coefficient_ratio = 0.0;
};
struct HardyOptions {
  // false: final atoms keep metadata and audit flags but drop a and b once
  // they have been added to the synthesis.
  bool keep_fields = true;
};

// u closed; with a domain, supp u in the closure of Omega. params.beta is
// replaced by the measured tent aperture of supp Q u.
HardyResult hardy_decompose(const TentOperators& ops, const FormField& u, DecompositionParams params,
                            const LipschitzGraphDomain* domain, const HardyOptions& opts = {});

}  // namespace conewise
