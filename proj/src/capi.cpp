#include "conewise/conewise.h"

#include <cmath>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "conewise/error.hpp"
#include "conewise/fields.hpp"
#include "conewise/hardy_atoms.hpp"
#include "conewise/io.hpp"
#include "conewise/lipschitz_domain.hpp"
#include "conewise/littlewood_paley.hpp"
#include "conewise/potential_op.hpp"
#include "conewise/tent_space.hpp"

using namespace conewise;

struct cw_field {
  FormField u;
};
struct cw_domain {
  LipschitzGraphDomain d;
};
struct cw_potential {
  std::unique_ptr<PotentialOperator> P;
};
struct cw_tent_ops {
  std::unique_ptr<TentOperators> ops;
};
struct cw_tent {
  TentFunction U;
};

namespace {

thread_local std::string last_error;

template <class F>
cw_status guard(F&& f) {
  try {
    f();
    last_error.clear();
    return CW_OK;
  } catch (const Error& e) {
    last_error = e.what();
    return static_cast<cw_status>(e.code());
  } catch (const Json::exception& e) {
    last_error = e.what();
    return CW_IO;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return CW_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return CW_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  require(p != nullptr, ErrorCode::kInvalidArgument, std::string(what) + " is null");
}

GridSpec grid_of(const cw_grid_spec* g) {
  need(g, "grid");
  return GridSpec::make(g->n, {g->sizes[0], g->sizes[1], g->sizes[2]}, g->h, {g->origin[0], g->origin[1], g->origin[2]});
}

char* dup(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

// Versioned report: free-form metrics plus a list of budget checks.
struct Report {
  Json j;
  explicit Report(const char* kind) {
    j["schema"] = "conewise.report";
    j["schema_version"] = 1;
    j["kind"] = kind;
    j["metrics"] = Json::object();
    j["checks"] = Json::array();
  }
  void metric(const char* name, const Json& v) { j["metrics"][name] = v; }
  // value <= budget.
  void at_most(const std::string& name, double value, double budget) { add(name, value, budget, "<=", value <= budget); }
  // value >= budget.
  void at_least(const std::string& name, double value, double budget) { add(name, value, budget, ">=", value >= budget); }
  void add(const std::string& name, double value, double budget, const char* op, bool pass) {
    // NaN compares false and so fails every check.
    j["checks"].push_back(Json{{"name", name}, {"value", value}, {"budget", budget}, {"op", op}, {"pass", pass}});
  }
  char* finish() {
    bool pass = true;
    for (const auto& c : j["checks"]) pass = pass && c["pass"].get<bool>();
    j["pass"] = pass;
    return dup(j.dump(2));
  }
};

Json grid_json(const GridSpec& g) { return grid_to_json(g); }

DecompositionParams decomposition_params(const cw_decomposition_params* p) {
  DecompositionParams d;
  if (p) {
    d.p = p->p;
    d.gamma = p->gamma;
    d.nu = p->nu;
    d.beta = p->beta;
  }
  return d;
}

Json audit_json(const AuditReport& a) {
  return Json{{"atoms", a.atoms},
              {"failed_in_tent", a.failed_in_tent},
              {"failed_boxed", a.failed_boxed},
              {"failed_interior", a.failed_interior},
              {"failed_normalized", a.failed_normalized},
              {"reconstruction_error", a.reconstruction_error},
              {"sum_lambda_p", a.sum_lambda_p},
              {"tent_norm_p", a.tent_norm_p},
              {"coefficient_ratio", a.coefficient_ratio},
              {"max_energy_ratio", a.max_energy_ratio}};
}

}  // namespace

extern "C" {

const char* cw_version(void) { return "1.0.0"; }

const char* cw_status_name(cw_status s) { return error_code_name(static_cast<ErrorCode>(s)); }

const char* cw_last_error(void) { return last_error.c_str(); }

void cw_string_free(char* s) { std::free(s); }

cw_status cw_field_generate(const cw_grid_spec* grid, const cw_field_params* p, cw_field** out) {
  return guard([&] {
    need(p, "params");
    need(out, "out");
    const GridSpec g = grid_of(grid);
    const RVec c{p->center[0], p->center[1], p->center[2]};
    auto f = std::make_unique<cw_field>();
    switch (p->kind) {
      case CW_FIELD_ZERO:
        f->u = FormField(g, p->degree);
        break;
      case CW_FIELD_BUMP:
        f->u = smooth_bump_form(g, p->degree, c, p->radius, p->seed);
        break;
      case CW_FIELD_CLOSED_BUMP:
        f->u = closed_bump_form(g, p->degree, c, p->radius, p->seed);
        break;
      case CW_FIELD_BAND:
        f->u = band_limited_form(g, p->degree, p->radius, p->omega_hi, p->modes, p->seed);
        break;
      case CW_FIELD_CLOSED_BAND:
        f->u = band_limited_closed_form(g, p->degree, p->radius, p->omega_hi, p->modes, p->seed);
        break;
      default:
        fail(ErrorCode::kInvalidArgument, "unknown field kind");
    }
    *out = f.release();
  });
}

cw_status cw_field_load(const char* prefix, cw_field** out) {
  return guard([&] {
    need(prefix, "prefix");
    need(out, "out");
    *out = new cw_field{load_field(prefix)};
  });
}

cw_status cw_field_save(const cw_field* u, const char* prefix) {
  return guard([&] {
    need(u, "field");
    need(prefix, "prefix");
    save_field(prefix, u->u);
  });
}

cw_status cw_field_info(const cw_field* u, cw_grid_spec* grid, int* degree, int* ncomp) {
  return guard([&] {
    need(u, "field");
    const GridSpec& g = u->u.grid();
    if (grid) {
      grid->n = g.n;
      grid->h = g.h;
      for (int a = 0; a < 3; ++a) {
        grid->sizes[a] = g.sizes[a];
        grid->origin[a] = g.origin[a];
      }
    }
    if (degree) *degree = u->u.degree();
    if (ncomp) *ncomp = u->u.ncomp();
  });
}

cw_status cw_field_component(const cw_field* u, int c, const double** data, size_t* count) {
  return guard([&] {
    need(u, "field");
    need(data, "data");
    require(c >= 0 && c < u->u.ncomp(), ErrorCode::kInvalidArgument, "component out of range");
    *data = u->u.comp(c).data();
    if (count) *count = u->u.comp(c).size();
  });
}

cw_status cw_field_l2_norm(const cw_field* u, double* out) {
  return guard([&] {
    need(u, "field");
    need(out, "out");
    *out = l2_norm(u->u);
  });
}

cw_status cw_field_derivative(const cw_field* u, cw_field** out) {
  return guard([&] {
    need(u, "field");
    need(out, "out");
    *out = new cw_field{exterior_derivative(u->u)};
  });
}

cw_status cw_field_restrict(cw_field* u, const cw_domain* d, int side) {
  return guard([&] {
    need(u, "field");
    need(d, "domain");
    require(u->u.grid() == d->d.grid, ErrorCode::kDimensionMismatch, "field and domain grids differ");
    require(side == 0 || side == 1, ErrorCode::kInvalidArgument, "side must be 0 (upper) or 1 (lower)");
    apply_mask(u->u, side == 0 ? d->d.closure_mask() : d->d.lower_closure_mask());
  });
}

void cw_field_free(cw_field* u) { delete u; }

cw_status cw_domain_create(const cw_grid_spec* grid, const cw_domain_params* p, cw_domain** out) {
  return guard([&] {
    need(p, "params");
    need(p->kind, "kind");
    need(out, "out");
    *out = new cw_domain{make_domain(grid_of(grid), domain_kind_from_name(p->kind), p->A, p->sigma, p->seed, p->level)};
  });
}

cw_status cw_domain_load(const char* prefix, cw_domain** out) {
  return guard([&] {
    need(prefix, "prefix");
    need(out, "out");
    *out = new cw_domain{load_domain(prefix)};
  });
}

cw_status cw_domain_save(const cw_domain* d, const char* prefix) {
  return guard([&] {
    need(d, "domain");
    need(prefix, "prefix");
    save_domain(prefix, d->d);
  });
}

cw_status cw_domain_report(const cw_domain* d, int cone_samples, uint64_t seed, char** json) {
  return guard([&] {
    need(d, "domain");
    need(json, "json");
    Report r("domain");
    r.metric("grid", grid_json(d->d.grid));
    r.metric("kind", domain_kind_name(d->d.kind));
    r.metric("A", d->d.A);
    r.metric("A_certified", d->d.A_certified);
    r.metric("max_adjacent_slope", d->d.max_adjacent_slope);
    r.metric("sigma", d->d.sigma);
    r.at_most("sigma_A_certified", d->d.sigma * d->d.A_certified, 1.0);
    if (cone_samples > 0) {
      const ConeCheck c = cone_containment_check(d->d, cone_samples, seed);
      r.metric("cone_samples", c.samples);
      r.metric("cone_mirrored_samples", c.mirrored_samples);
      r.at_most("cone_violations", static_cast<double>(c.violations), 0.0);
      r.at_most("cone_mirrored_violations", static_cast<double>(c.mirrored_violations), 0.0);
    }
    *json = r.finish();
  });
}

void cw_domain_free(cw_domain* d) { delete d; }

cw_status cw_kernel_save(const char* kind, int n, double sigma, double t, double h, uint64_t seed, const char* prefix) {
  return guard([&] {
    need(kind, "kind");
    need(prefix, "prefix");
    const std::string k = kind;
    require(k == "theta" || k == "phi", ErrorCode::kInvalidArgument, "kernel kind must be theta or phi");
    require(n >= 1 && n <= 3, ErrorCode::kInvalidArgument, "n must be 1, 2 or 3");
    const ConeBumpSpec spec = k == "theta" ? theta_spec(n, sigma) : phi_spec(n, sigma, seed);
    save_kernel(prefix, sample_kernel(spec, t, h));
  });
}

cw_status cw_potential_create(const cw_potential_params* p, cw_potential** out) {
  return guard([&] {
    need(p, "params");
    need(out, "out");
    PotentialConfig c;
    c.n = p->n;
    c.h = p->h;
    c.sigma = p->sigma;
    const std::string route = p->route ? p->route : "theta";
    const std::string orient = p->orientation ? p->orientation : "upward";
    require(route == "theta" || route == "reproducing", ErrorCode::kInvalidArgument, "route must be theta or reproducing");
    require(orient == "upward" || orient == "reflected", ErrorCode::kInvalidArgument,
            "orientation must be upward or reflected");
    c.route = route == "theta" ? KernelRoute::kTheta : KernelRoute::kReproducing;
    c.orientation = orient == "upward" ? Orientation::kUpward : Orientation::kReflected;
    c.a = p->a;
    c.b = p->b;
    c.panels_per_octave = p->panels_per_octave;
    c.phi_seed = p->seed;
    *out = new cw_potential{std::make_unique<PotentialOperator>(c)};
  });
}

cw_status cw_potential_apply(const cw_potential* P, const cw_field* u, int transform, cw_field** out) {
  return guard([&] {
    need(P, "operator");
    need(u, "field");
    need(out, "out");
    *out = new cw_field{P->P->apply(u->u, transform ? ConvolutionMode::kTransform : ConvolutionMode::kDirect)};
  });
}

cw_status cw_potential_verify(const cw_potential* P, const cw_field* u, const cw_domain* d, int frequencies,
                              uint64_t seed, char** json) {
  return guard([&] {
    need(P, "operator");
    need(u, "field");
    need(json, "json");
    const PotentialConfig& c = P->P->config();
    Report r("potential_verify");
    r.metric("grid", grid_json(u->u.grid()));
    r.metric("degree", u->u.degree());
    r.metric("window", {c.a, c.b});
    r.metric("panels_per_octave", c.panels_per_octave);
    const HomotopyResiduals h = homotopy_residuals(*P->P, u->u);
    r.metric("norm_u", h.norm_u);
    r.metric("norm_theta_a", h.norm_theta_a);
    r.metric("norm_theta_b", h.norm_theta_b);
    r.at_most("homotopy_algebraic", h.algebraic, 1e-11);
    r.at_most("homotopy_quadrature", h.quadrature, 1e-2);
    if (d) {
      const SupportSide side = c.orientation == Orientation::kUpward ? SupportSide::kUpper : SupportSide::kLower;
      const LeakReport leak = support_preservation_check(*P->P, u->u, d->d, side);
      r.metric("support_far_points", leak.far_points);
      r.metric("support_max_value", leak.max_value);
      r.at_most("support_leak", leak.leak, 0.0);
    }
    if (frequencies > 0) {
      const HomogeneityReport hm = homogeneity_check(*P->P, frequencies, seed);
      r.metric("symbol_frequencies", hm.frequencies);
      r.at_most("symbol_homogeneity", hm.max_deviation, 1e-3);
    }
    *json = r.finish();
  });
}

void cw_potential_free(cw_potential* P) { delete P; }

cw_status cw_tent_ops_create(const cw_grid_spec* grid, const cw_tent_params* p, cw_tent_ops** out) {
  return guard([&] {
    need(p, "params");
    need(out, "out");
    const GridSpec g = grid_of(grid);
    *out = new cw_tent_ops{
        std::make_unique<TentOperators>(g, p->sigma, TLadder::make(p->t_min, p->t_max, p->per_octave), p->seed)};
  });
}

void cw_tent_ops_free(cw_tent_ops* ops) { delete ops; }

cw_status cw_tent_q(const cw_tent_ops* ops, const cw_field* u, int transform, cw_tent** out) {
  return guard([&] {
    need(ops, "operators");
    need(u, "field");
    need(out, "out");
    *out = new cw_tent{ops->ops->q(u->u, transform ? ConvolutionMode::kTransform : ConvolutionMode::kDirect)};
  });
}

cw_status cw_tent_pi(const cw_tent_ops* ops, const cw_tent* U, int transform, cw_field** out) {
  return guard([&] {
    need(ops, "operators");
    need(U, "tent function");
    need(out, "out");
    require(U->U.grid() == ops->ops->grid() && U->U.ladder.nodes == ops->ops->ladder().nodes,
            ErrorCode::kDimensionMismatch, "tent function does not match the operators' grid and ladder");
    *out = new cw_field{ops->ops->pi(U->U, transform ? ConvolutionMode::kTransform : ConvolutionMode::kDirect)};
  });
}

cw_status cw_tent_norm(const cw_tent* U, double p, double* out) {
  return guard([&] {
    need(U, "tent function");
    need(out, "out");
    *out = tent_norm(U->U, p);
  });
}

cw_status cw_tent_save(const cw_tent* U, const char* prefix) {
  return guard([&] {
    need(U, "tent function");
    need(prefix, "prefix");
    save_tent(prefix, U->U);
  });
}

cw_status cw_tent_load(const char* prefix, cw_tent** out) {
  return guard([&] {
    need(prefix, "prefix");
    need(out, "out");
    *out = new cw_tent{load_tent(prefix)};
  });
}

void cw_tent_free(cw_tent* U) { delete U; }

cw_status cw_tent_decompose(const cw_tent* U, const cw_domain* d, const cw_decomposition_params* params,
                            const char* dump_dir, char** json) {
  return guard([&] {
    need(U, "tent function");
    need(json, "json");
    const DecompositionParams P = decomposition_params(params);
    std::optional<std::vector<char>> omega;
    if (d) {
      require(d->d.grid == U->U.grid(), ErrorCode::kDimensionMismatch, "domain and tent grids differ");
      omega = d->d.mask();
    }
    TentDecomposition dec = decompose(U->U, omega, P);
    const AuditReport a = audit(dec, U->U, omega);
    Report r("tent_decompose");
    r.metric("grid", grid_json(U->U.grid()));
    r.metric("params", {{"p", P.p}, {"gamma", P.gamma}, {"nu", P.nu}, {"beta", P.beta}});
    r.metric("boundary_aware", dec.boundary_aware);
    r.metric("C", dec.C);
    r.metric("c_beta", dec.c_beta);
    r.metric("levels", dec.levels);
    r.metric("max_overlap", dec.max_overlap);
    r.metric("audit", audit_json(a));
    r.at_most("reconstruction", a.reconstruction_error, 1e-12);
    r.at_most("failed_in_tent", a.failed_in_tent, 0);
    r.at_most("failed_boxed", a.failed_boxed, 0);
    r.at_most("failed_interior", a.failed_interior, 0);
    r.at_most("failed_normalized", a.failed_normalized, 0);
    if (dump_dir) save_decomposition(dump_dir, dec);
    *json = r.finish();
  });
}

cw_status cw_hardy_decompose(const cw_tent_ops* ops, const cw_field* u, const cw_domain* d,
                             const cw_decomposition_params* params, int keep_fields, const char* dump_dir,
                             char** json) {
  return guard([&] {
    need(ops, "operators");
    need(u, "field");
    need(json, "json");
    HardyOptions opts;
    opts.keep_fields = keep_fields != 0;
    const HardyResult h = hardy_decompose(*ops->ops, u->u, decomposition_params(params), d ? &d->d : nullptr, opts);
    Report r("hardy_decompose");
    r.metric("grid", grid_json(u->u.grid()));
    r.metric("p", h.tent.params.p);
    r.metric("domain", d ? domain_kind_name(d->d.kind) : "none");
    r.metric("atoms", h.atoms.size());
    r.metric("parents", h.parents);
    r.metric("kappa", h.kappa);
    r.metric("beta_measured", h.beta_measured);
    r.metric("tent_audit", audit_json(h.tent_audit));
    r.metric("M_min", h.M_min);
    r.metric("M_max", h.M_max);
    r.metric("grad_constant", h.grad_constant);
    r.metric("max_mu", h.max_mu);
    r.metric("primitive_constant", h.primitive_constant);
    r.metric("truncation_a", h.truncation_a);
    r.metric("truncation_b", h.truncation_b);
    r.metric("sum_coefficients_p", h.sum_coefficients_p);
    r.metric("proxy_norm_p", h.proxy_norm_p);
    r.metric("coefficient_ratio", h.coefficient_ratio);
    r.at_most("failed_atoms", h.failed_atoms, 0);
    r.at_most("tent_failed_atoms", h.tent_audit.failed(), 0);
    r.at_most("exactness", h.max_exactness, 1e-11);
    if (d) r.at_most("partition_identity", h.split_error, 1e-12);
    r.at_most("synthesis", h.synthesis_error, 1e-12);
    r.at_most("reconstruction", h.reconstruction, 2e-2);
    if (dump_dir) save_hardy_atoms(dump_dir, h);
    *json = r.finish();
  });
}

cw_status cw_hardy_beta_check(const cw_tent_ops* ops, const cw_field* u, const cw_domain* d, double a, char** json) {
  return guard([&] {
    need(ops, "operators");
    need(u, "field");
    need(d, "domain");
    need(json, "json");
    const BetaReport b = beta_support_check(*ops->ops, u->u, d->d, a);
    Report r("hardy_beta_check");
    r.metric("a", b.a);
    r.metric("beta", b.beta);
    r.metric("margins", b.margins);
    r.metric("min_margin", b.min_margin);
    r.metric("support_in_closure", b.support_in_closure);
    // Worst slack of margin_i >= beta - 2h / t_i over the ladder.
    const TLadder& L = ops->ops->ladder();
    double worst = b.margins.empty() ? 0.0 : INFINITY;
    for (std::size_t i = 0; i < b.margins.size(); ++i)
      worst = std::min(worst, b.margins[i] - (b.beta - kGeometricSlackCells * u->u.grid().h / L.nodes[i]));
    r.add("support_in_closure", b.support_in_closure ? 1.0 : 0.0, 1.0, ">=", b.support_in_closure);
    r.add("beta_margin", worst, 0.0, ">=", b.pass);
    *json = r.finish();
  });
}

}  // extern "C"
