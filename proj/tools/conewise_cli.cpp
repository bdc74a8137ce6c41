// Command-line driver over the C interface.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "conewise/conewise.h"

namespace {

using Json = nlohmann::json;
namespace fs = std::filesystem;

constexpr int kExitUsage = 2;

// Library failure carrying the status for the exit code.
struct Failure {
  cw_status status;
  std::string message;
};

void check(cw_status s) {
  if (s != CW_OK) throw Failure{s, cw_last_error()};
}

void usage_error(const std::string& msg) { throw Failure{CW_INVALID_ARGUMENT, msg}; }

template <class T, void (*Free)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() {
    if (p) Free(p);
  }
  T** out() { return &p; }
  T* get() const { return p; }
};
using Field = Handle<cw_field, cw_field_free>;
using Domain = Handle<cw_domain, cw_domain_free>;
using Potential = Handle<cw_potential, cw_potential_free>;
using TentOps = Handle<cw_tent_ops, cw_tent_ops_free>;
using Tent = Handle<cw_tent, cw_tent_free>;

Json take_report(char* s) {
  Json j = Json::parse(s);
  cw_string_free(s);
  return j;
}

void write_atomic(const std::string& path, const std::string& text) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Failure{CW_IO, "cannot open " + tmp};
    f << text;
    if (!f) throw Failure{CW_IO, "write failed: " + tmp};
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    throw Failure{CW_IO, "cannot rename into " + path};
  }
}

Json read_json_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Failure{CW_IO, "cannot open " + path};
  try {
    return Json::parse(f);
  } catch (const Json::exception& e) {
    throw Failure{CW_IO, path + ": " + e.what()};
  }
}

// ---------------------------------------------------------------------------
// Run configuration

struct RunConfig {
  int n = 2;
  std::vector<int> sizes{256, 256};
  double h = 1.0 / 64;
  std::vector<double> origin;  // empty: centred box
  double sigma = 1.0;
  double A = 0.0;
  std::string domain = "none";  // none, flat, wedge, random
  double level = -1.0;
  std::uint64_t seed = 1;
  std::vector<double> window{0.15, 0.5};
  int panels_per_octave = 16;
  std::string route = "theta";
  std::string orientation = "upward";
  std::vector<double> ladder{0.4, 0.9};
  int ladder_per_octave = 32;
  double p = 1.0;
  double gamma = 0.5;
  double nu = 0.5;
  double beta = 0.5;
  double beta_a = 0.5;
  int frequencies = 20;
  int cone_samples = 2000;
  // Input field.
  std::string field = "closed_bump";  // zero, bump, closed_bump, band, closed_band
  int degree = 1;
  std::vector<double> center{0.0, 0.0};
  double radius = 0.5;
  double omega_hi = 8.0;
  int modes = 4;
  std::map<std::string, double> tolerances;
};

Json to_json(const RunConfig& c) {
  return Json{{"n", c.n},
              {"sizes", c.sizes},
              {"h", c.h},
              {"origin", c.origin},
              {"sigma", c.sigma},
              {"A", c.A},
              {"domain", c.domain},
              {"level", c.level},
              {"seed", c.seed},
              {"window", c.window},
              {"panels_per_octave", c.panels_per_octave},
              {"route", c.route},
              {"orientation", c.orientation},
              {"ladder", c.ladder},
              {"ladder_per_octave", c.ladder_per_octave},
              {"p", c.p},
              {"gamma", c.gamma},
              {"nu", c.nu},
              {"beta", c.beta},
              {"beta_a", c.beta_a},
              {"frequencies", c.frequencies},
              {"cone_samples", c.cone_samples},
              {"field", c.field},
              {"degree", c.degree},
              {"center", c.center},
              {"radius", c.radius},
              {"omega_hi", c.omega_hi},
              {"modes", c.modes},
              {"tolerances", c.tolerances}};
}

// Overlays the keys present in j; unknown keys are rejected.
void merge(RunConfig& c, const Json& j) {
  if (!j.is_object()) usage_error("config must be a JSON object");
  const Json known = to_json(c);
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.contains(it.key())) usage_error("unknown config key: " + it.key());
  try {
    auto get = [&](const char* k, auto& v) {
      if (j.contains(k)) j.at(k).get_to(v);
    };
    get("n", c.n);
    get("sizes", c.sizes);
    get("h", c.h);
    get("origin", c.origin);
    get("sigma", c.sigma);
    get("A", c.A);
    get("domain", c.domain);
    get("level", c.level);
    get("seed", c.seed);
    get("window", c.window);
    get("panels_per_octave", c.panels_per_octave);
    get("route", c.route);
    get("orientation", c.orientation);
    get("ladder", c.ladder);
    get("ladder_per_octave", c.ladder_per_octave);
    get("p", c.p);
    get("gamma", c.gamma);
    get("nu", c.nu);
    get("beta", c.beta);
    get("beta_a", c.beta_a);
    get("frequencies", c.frequencies);
    get("cone_samples", c.cone_samples);
    get("field", c.field);
    get("degree", c.degree);
    get("center", c.center);
    get("radius", c.radius);
    get("omega_hi", c.omega_hi);
    get("modes", c.modes);
    if (j.contains("tolerances"))
      for (auto it = j["tolerances"].begin(); it != j["tolerances"].end(); ++it)
        c.tolerances[it.key()] = it.value().get<double>();
  } catch (const Json::exception& e) {
    usage_error(std::string("bad config value: ") + e.what());
  }
}

void validate(const RunConfig& c) {
  if (c.n < 1 || c.n > 3) usage_error("n must be 1, 2 or 3");
  if (static_cast<int>(c.sizes.size()) != c.n) usage_error("sizes needs n entries");
  if (!c.origin.empty() && static_cast<int>(c.origin.size()) != c.n) usage_error("origin needs n entries");
  if (static_cast<int>(c.center.size()) != c.n) usage_error("center needs n entries");
  if (c.window.size() != 2 || !(c.window[0] > 0 && c.window[0] < c.window[1])) usage_error("window must be 0 < a < b");
  if (c.ladder.size() != 2 || !(c.ladder[0] > 0 && c.ladder[0] < c.ladder[1])) usage_error("ladder must be 0 < t_min < t_max");
  if (!(c.h > 0)) usage_error("h must be positive");
  if (!(c.sigma > 0) || !(c.A >= 0) || !(c.sigma * c.A < 1)) usage_error("need sigma > 0, A >= 0 and sigma * A < 1");
  static const char* domains[] = {"none", "flat", "wedge", "random"};
  if (std::find(std::begin(domains), std::end(domains), c.domain) == std::end(domains))
    usage_error("domain must be none, flat, wedge or random");
}

cw_grid_spec grid_of(const RunConfig& c) {
  cw_grid_spec g{};
  g.n = c.n;
  g.h = c.h;
  for (int a = 0; a < 3; ++a) {
    g.sizes[a] = a < c.n ? c.sizes[a] : 1;
    g.origin[a] = a < c.n ? (c.origin.empty() ? -0.5 * c.sizes[a] * c.h : c.origin[a]) : 0.0;
  }
  return g;
}

cw_decomposition_params decomposition_of(const RunConfig& c) { return {c.p, c.gamma, c.nu, c.beta}; }

// ---------------------------------------------------------------------------
// Shared options

struct Inputs {
  std::string config;
  std::string domain;  // artifact sidecar or config fragment
  std::string input;   // field artifact prefix
  std::string tent;    // tent artifact prefix
  std::string out;
  std::string report;
  std::string dump;
  std::string kernel = "theta";
  double kernel_t = 1.0;
  bool transform = false;
  bool lean = false;
  std::vector<std::string> tol;

  // Flag overrides, applied after the config file.
  std::optional<int> n, panels, ladder_per_octave, degree, frequencies;
  std::optional<std::vector<int>> sizes;
  std::optional<double> h, sigma, A, level, p, gamma, nu, beta, radius;
  std::optional<std::uint64_t> seed;
  std::optional<std::vector<double>> window, ladder, center, origin;
  std::optional<std::string> domain_kind, field, route, orientation;
};

void add_run_options(CLI::App* app, Inputs& in) {
  app->add_option("--config", in.config, "JSON run configuration");
  app->add_option("--domain", in.domain, "domain artifact (.json sidecar) or JSON config fragment");
  app->add_option("--input", in.input, "field artifact prefix (default: generated from the config)");
  app->add_option("--report", in.report, "write the report here instead of stdout");
  app->add_option("--tol", in.tol, "budget override name=value");
  app->add_option("--n", in.n);
  app->add_option("--sizes", in.sizes);
  app->add_option("--h", in.h);
  app->add_option("--origin", in.origin);
  app->add_option("--sigma", in.sigma);
  app->add_option("--A", in.A);
  app->add_option("--domain-kind", in.domain_kind);
  app->add_option("--level", in.level);
  app->add_option("--seed", in.seed);
  app->add_option("--window", in.window)->expected(2);
  app->add_option("--panels", in.panels);
  app->add_option("--route", in.route);
  app->add_option("--orientation", in.orientation);
  app->add_option("--ladder", in.ladder)->expected(2);
  app->add_option("--ladder-per-octave", in.ladder_per_octave);
  app->add_option("--p", in.p);
  app->add_option("--gamma", in.gamma);
  app->add_option("--nu", in.nu);
  app->add_option("--beta", in.beta);
  app->add_option("--field", in.field);
  app->add_option("--degree", in.degree);
  app->add_option("--center", in.center);
  app->add_option("--radius", in.radius);
  app->add_option("--frequencies", in.frequencies);
}

// Config file, then a domain config fragment, then flags.
RunConfig resolve(const Inputs& in, bool& domain_is_artifact) {
  RunConfig c;
  if (!in.config.empty()) merge(c, read_json_file(in.config));
  domain_is_artifact = false;
  if (!in.domain.empty()) {
    const Json d = read_json_file(in.domain);
    if (d.value("format", std::string()) == "domain") {
      domain_is_artifact = true;
      c.domain = d.at("kind").get<std::string>();
    } else {
      merge(c, d);
      if (c.domain == "none") usage_error("--domain fragment does not name a domain kind");
    }
  }
  auto set = [](auto& dst, const auto& src) {
    if (src) dst = *src;
  };
  set(c.n, in.n);
  set(c.sizes, in.sizes);
  set(c.h, in.h);
  set(c.origin, in.origin);
  set(c.sigma, in.sigma);
  set(c.A, in.A);
  set(c.domain, in.domain_kind);
  set(c.level, in.level);
  set(c.seed, in.seed);
  set(c.window, in.window);
  set(c.panels_per_octave, in.panels);
  set(c.route, in.route);
  set(c.orientation, in.orientation);
  set(c.ladder, in.ladder);
  set(c.ladder_per_octave, in.ladder_per_octave);
  set(c.p, in.p);
  set(c.gamma, in.gamma);
  set(c.nu, in.nu);
  set(c.beta, in.beta);
  set(c.field, in.field);
  set(c.degree, in.degree);
  set(c.center, in.center);
  set(c.radius, in.radius);
  set(c.frequencies, in.frequencies);
  if (c.center.size() != static_cast<std::size_t>(c.n) && !in.center) c.center.assign(c.n, 0.0);
  for (const std::string& t : in.tol) {
    const auto eq = t.find('=');
    if (eq == std::string::npos) usage_error("--tol expects name=value");
    try {
      c.tolerances[t.substr(0, eq)] = std::stod(t.substr(eq + 1));
    } catch (const std::exception&) {
      usage_error("--tol value is not a number: " + t);
    }
  }
  validate(c);
  return c;
}

struct Run {
  Inputs in;
  RunConfig cfg;
  bool domain_artifact = false;

  void load() { cfg = resolve(in, domain_artifact); }

  void field(Field& u) const {
    if (!in.input.empty()) {
      check(cw_field_load(in.input.c_str(), u.out()));
      return;
    }
    static const std::map<std::string, cw_field_kind> kinds{{"zero", CW_FIELD_ZERO},
                                                            {"bump", CW_FIELD_BUMP},
                                                            {"closed_bump", CW_FIELD_CLOSED_BUMP},
                                                            {"band", CW_FIELD_BAND},
                                                            {"closed_band", CW_FIELD_CLOSED_BAND}};
    const auto k = kinds.find(cfg.field);
    if (k == kinds.end()) usage_error("unknown field kind: " + cfg.field);
    cw_field_params p{};
    p.kind = k->second;
    p.degree = cfg.degree;
    for (int a = 0; a < cfg.n; ++a) p.center[a] = cfg.center[a];
    p.radius = cfg.radius;
    p.omega_hi = cfg.omega_hi;
    p.modes = cfg.modes;
    p.seed = cfg.seed;
    const cw_grid_spec g = grid_of(cfg);
    check(cw_field_generate(&g, &p, u.out()));
  }

  // False when the run has no domain.
  bool domain(Domain& d) const {
    if (domain_artifact) {
      std::string prefix = in.domain;
      if (prefix.size() > 5 && prefix.substr(prefix.size() - 5) == ".json") prefix.resize(prefix.size() - 5);
      check(cw_domain_load(prefix.c_str(), d.out()));
      return true;
    }
    if (cfg.domain == "none") return false;
    const cw_grid_spec g = grid_of(cfg);
    cw_domain_params p{cfg.domain.c_str(), cfg.A, cfg.sigma, cfg.seed, cfg.level};
    check(cw_domain_create(&g, &p, d.out()));
    return true;
  }

  void tent_ops(TentOps& ops) const {
    const cw_grid_spec g = grid_of(cfg);
    cw_tent_params p{cfg.sigma, cfg.ladder[0], cfg.ladder[1], cfg.ladder_per_octave, cfg.seed};
    check(cw_tent_ops_create(&g, &p, ops.out()));
  }

  void potential(Potential& P) const {
    cw_potential_params p{cfg.n,
                          cfg.h,
                          cfg.sigma,
                          cfg.route.c_str(),
                          cfg.orientation.c_str(),
                          cfg.window[0],
                          cfg.window[1],
                          cfg.panels_per_octave,
                          cfg.seed};
    check(cw_potential_create(&p, P.out()));
  }

  void need_out() const {
    if (in.out.empty()) usage_error("--out is required");
  }
};

// A report for commands that only produce artifacts or numbers.
Json plain_report(const char* kind) {
  return Json{{"schema", "conewise.report"}, {"schema_version", 1}, {"kind", kind}, {"metrics", Json::object()},
              {"checks", Json::array()}, {"pass", true}};
}

// Applies budget overrides and recomputes pass flags.
void apply_tolerances(Json& r, const std::map<std::string, double>& tol) {
  bool pass = true;
  for (Json& c : r["checks"]) {
    const auto it = tol.find(c["name"].get<std::string>());
    if (it != tol.end()) {
      c["budget"] = it->second;
      const double v = c["value"].is_number() ? c["value"].get<double>() : NAN;
      c["pass"] = c["op"] == ">=" ? v >= it->second : v <= it->second;
    }
    pass = pass && c["pass"].get<bool>();
  }
  r["pass"] = pass;
}

// Emits the report and returns the exit code.
int finish(const Run& run, Json r) {
  apply_tolerances(r, run.cfg.tolerances);
  r["config"] = to_json(run.cfg);
  r["library_version"] = cw_version();
  const std::string text = r.dump(2) + "\n";
  if (run.in.report.empty())
    std::cout << text;
  else
    write_atomic(run.in.report, text);
  if (r["pass"].get<bool>()) return 0;
  Json failed = Json::array();
  for (const Json& c : r["checks"])
    if (!c["pass"].get<bool>()) failed.push_back(c);
  std::cerr << Json{{"schema", "conewise.error"},
                    {"schema_version", 1},
                    {"status", cw_status_name(CW_BUDGET_EXCEEDED)},
                    {"code", CW_BUDGET_EXCEEDED},
                    {"message", "budget exceeded"},
                    {"failed_checks", failed}}
                   .dump()
            << "\n";
  return CW_BUDGET_EXCEEDED;
}

// ---------------------------------------------------------------------------
// Commands

int gen_domain(Run& run) {
  run.load();
  run.need_out();
  Domain d;
  if (!run.domain(d)) usage_error("gen domain needs a domain kind");
  check(cw_domain_save(d.get(), run.in.out.c_str()));
  char* s = nullptr;
  check(cw_domain_report(d.get(), run.cfg.cone_samples, run.cfg.seed, &s));
  return finish(run, take_report(s));
}

int gen_form(Run& run) {
  run.load();
  run.need_out();
  Field u;
  run.field(u);
  check(cw_field_save(u.get(), run.in.out.c_str()));
  double norm = 0.0;
  check(cw_field_l2_norm(u.get(), &norm));
  Json r = plain_report("gen_form");
  r["metrics"]["l2_norm"] = norm;
  return finish(run, r);
}

int gen_kernel(Run& run) {
  run.load();
  run.need_out();
  check(cw_kernel_save(run.in.kernel.c_str(), run.cfg.n, run.cfg.sigma, run.in.kernel_t, run.cfg.h, run.cfg.seed,
                       run.in.out.c_str()));
  Json r = plain_report("gen_kernel");
  r["metrics"]["kind"] = run.in.kernel;
  r["metrics"]["t"] = run.in.kernel_t;
  return finish(run, r);
}

int potential_apply(Run& run) {
  run.load();
  run.need_out();
  Potential P;
  run.potential(P);
  Field u, Tu;
  run.field(u);
  check(cw_potential_apply(P.get(), u.get(), run.in.transform, Tu.out()));
  check(cw_field_save(Tu.get(), run.in.out.c_str()));
  double norm = 0.0;
  check(cw_field_l2_norm(Tu.get(), &norm));
  Json r = plain_report("potential_apply");
  r["metrics"]["l2_norm"] = norm;
  return finish(run, r);
}

int potential_verify(Run& run) {
  run.load();
  Potential P;
  run.potential(P);
  Field u;
  run.field(u);
  Domain d;
  const bool has = run.domain(d);
  char* s = nullptr;
  check(cw_potential_verify(P.get(), u.get(), has ? d.get() : nullptr, run.cfg.frequencies, run.cfg.seed, &s));
  return finish(run, take_report(s));
}

void tent_input(const Run& run, const TentOps& ops, Tent& U) {
  if (!run.in.tent.empty()) {
    check(cw_tent_load(run.in.tent.c_str(), U.out()));
    return;
  }
  Field u;
  run.field(u);
  check(cw_tent_q(ops.get(), u.get(), run.in.transform, U.out()));
}

int tent_q(Run& run) {
  run.load();
  run.need_out();
  TentOps ops;
  run.tent_ops(ops);
  Tent U;
  tent_input(run, ops, U);
  check(cw_tent_save(U.get(), run.in.out.c_str()));
  double norm = 0.0;
  check(cw_tent_norm(U.get(), run.cfg.p, &norm));
  Json r = plain_report("tent_q");
  r["metrics"]["tent_norm"] = norm;
  return finish(run, r);
}

int tent_pi(Run& run) {
  run.load();
  run.need_out();
  TentOps ops;
  run.tent_ops(ops);
  Tent U;
  tent_input(run, ops, U);
  Field f;
  check(cw_tent_pi(ops.get(), U.get(), run.in.transform, f.out()));
  check(cw_field_save(f.get(), run.in.out.c_str()));
  double norm = 0.0;
  check(cw_field_l2_norm(f.get(), &norm));
  Json r = plain_report("tent_pi");
  r["metrics"]["l2_norm"] = norm;
  return finish(run, r);
}

int tent_norm(Run& run) {
  run.load();
  TentOps ops;
  run.tent_ops(ops);
  Tent U;
  tent_input(run, ops, U);
  double norm = 0.0;
  check(cw_tent_norm(U.get(), run.cfg.p, &norm));
  Json r = plain_report("tent_norm");
  r["metrics"]["p"] = run.cfg.p;
  r["metrics"]["tent_norm"] = norm;
  return finish(run, r);
}

int tent_decompose(Run& run, bool dump) {
  run.load();
  TentOps ops;
  run.tent_ops(ops);
  Tent U;
  tent_input(run, ops, U);
  Domain d;
  const bool has = run.domain(d);
  const cw_decomposition_params p = decomposition_of(run.cfg);
  char* s = nullptr;
  check(cw_tent_decompose(U.get(), has ? d.get() : nullptr, &p,
                          dump && !run.in.dump.empty() ? run.in.dump.c_str() : nullptr, &s));
  return finish(run, take_report(s));
}

int hardy_decompose(Run& run, bool dump) {
  run.load();
  TentOps ops;
  run.tent_ops(ops);
  Field u;
  run.field(u);
  Domain d;
  const bool has = run.domain(d);
  const cw_decomposition_params p = decomposition_of(run.cfg);
  const bool keep = dump && !run.in.lean && !run.in.dump.empty();
  char* s = nullptr;
  check(cw_hardy_decompose(ops.get(), u.get(), has ? d.get() : nullptr, &p, keep,
                           dump && !run.in.dump.empty() ? run.in.dump.c_str() : nullptr, &s));
  return finish(run, take_report(s));
}

int hardy_beta(Run& run) {
  run.load();
  TentOps ops;
  run.tent_ops(ops);
  Field u;
  run.field(u);
  Domain d;
  if (!run.domain(d)) usage_error("beta-check needs a domain");
  char* s = nullptr;
  check(cw_hardy_beta_check(ops.get(), u.get(), d.get(), run.cfg.beta_a, &s));
  return finish(run, take_report(s));
}

std::string csv_number(const Json& v) {
  if (!v.is_number()) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v.get<double>());
  return buf;
}

int report(const std::vector<std::string>& files, const std::string& out) {
  std::ostringstream csv;
  csv << "name,value,budget,pass\n";
  for (const std::string& f : files) {
    const Json r = read_json_file(f);
    if (r.value("schema", std::string()) != "conewise.report") throw Failure{CW_IO, f + " is not a conewise report"};
    if (r.value("schema_version", 0) != 1) throw Failure{CW_IO, f + ": unsupported report version"};
    const std::string kind = r.value("kind", std::string());
    for (const Json& c : r.at("checks"))
      csv << kind << "." << c.at("name").get<std::string>() << "," << csv_number(c.at("value")) << ","
          << csv_number(c.at("budget")) << "," << (c.at("pass").get<bool>() ? "true" : "false") << "\n";
  }
  if (out.empty())
    std::cout << csv.str();
  else
    write_atomic(out, csv.str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"conewise: cone-supported potentials, tent spaces and Hardy atoms"};
  app.set_help_flag("--help", "print help");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(cw_version()));

  Run run;
  int code = 0;
  std::vector<std::pair<CLI::App*, std::function<int()>>> leaves;
  auto leaf = [&](CLI::App* parent, const char* name, const char* help, std::function<int()> f) {
    CLI::App* c = parent->add_subcommand(name, help);
    add_run_options(c, run.in);
    leaves.emplace_back(c, std::move(f));
    return c;
  };

  CLI::App* gen = app.add_subcommand("gen", "write domain, form and kernel artifacts")->require_subcommand(1);
  leaf(gen, "domain", "Lipschitz graph domain", [&] { return gen_domain(run); })
      ->add_option("--out", run.in.out, "artifact prefix");
  leaf(gen, "form", "synthetic differential form", [&] { return gen_form(run); })
      ->add_option("--out", run.in.out, "artifact prefix");
  CLI::App* gk = leaf(gen, "kernel", "sampled theta_t or phi_t", [&] { return gen_kernel(run); });
  gk->add_option("--out", run.in.out, "artifact prefix");
  gk->add_option("--kind", run.in.kernel, "theta or phi");
  gk->add_option("--t", run.in.kernel_t, "dilation");

  CLI::App* pot = app.add_subcommand("potential", "truncated potential operator")->require_subcommand(1);
  CLI::App* pa = leaf(pot, "apply", "T u", [&] { return potential_apply(run); });
  pa->add_option("--out", run.in.out, "artifact prefix");
  pa->add_flag("--transform", run.in.transform, "FFT convolution");
  leaf(pot, "verify", "homotopy, support and symbol checks", [&] { return potential_verify(run); });

  CLI::App* tent = app.add_subcommand("tent", "tent-space operators and decomposition")->require_subcommand(1);
  for (auto [name, help] : {std::pair{"q", "Q u"}, std::pair{"pi", "pi U"}, std::pair{"norm", "T^p norm of U"},
                            std::pair{"decompose", "atomic decomposition with dump"},
                            std::pair{"audit", "atomic decomposition audit"}}) {
    const std::string n = name;
    CLI::App* c = leaf(tent, name, help, [&, n]() -> int {
      if (n == "q") return tent_q(run);
      if (n == "pi") return tent_pi(run);
      if (n == "norm") return tent_norm(run);
      return tent_decompose(run, n == "decompose");
    });
    c->add_option("--tent", run.in.tent, "tent function artifact prefix (default: Q of the input field)");
    c->add_flag("--transform", run.in.transform, "FFT convolution");
    if (n == "q" || n == "pi") c->add_option("--out", run.in.out, "artifact prefix");
    if (n == "decompose") c->add_option("--dump", run.in.dump, "atom dump directory");
  }

  CLI::App* hardy = app.add_subcommand("hardy", "Hardy-space atoms")->require_subcommand(1);
  CLI::App* hd = leaf(hardy, "decompose", "full pipeline with atom dump", [&] { return hardy_decompose(run, true); });
  hd->add_option("--dump", run.in.dump, "atom dump directory");
  hd->add_flag("--lean", run.in.lean, "dump atom metadata only");
  leaf(hardy, "audit", "full pipeline, audits only", [&] { return hardy_decompose(run, false); });
  leaf(hardy, "beta-check", "support margin of Q u over the domain", [&] { return hardy_beta(run); });

  std::vector<std::string> report_files;
  std::string report_out;
  CLI::App* rep = app.add_subcommand("report", "aggregate JSON reports into a CSV table");
  rep->add_option("files", report_files, "report files");
  rep->add_option("--out", report_out, "CSV path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (rep->parsed()) return report(report_files, report_out);
    for (auto& [c, f] : leaves)
      if (c->parsed()) code = f();
  } catch (const Failure& f) {
    std::cerr << Json{{"schema", "conewise.error"},
                      {"schema_version", 1},
                      {"status", cw_status_name(f.status)},
                      {"code", static_cast<int>(f.status)},
                      {"message", f.message}}
                     .dump()
              << "\n";
    return f.status == CW_INVALID_ARGUMENT ? kExitUsage : static_cast<int>(f.status);
  } catch (const std::exception& e) {
    std::cerr << Json{{"schema", "conewise.error"},
                      {"schema_version", 1},
                      {"status", cw_status_name(CW_INTERNAL)},
                      {"code", static_cast<int>(CW_INTERNAL)},
                      {"message", e.what()}}
                     .dump()
              << "\n";
    return CW_INTERNAL;
  }
  return code;
}
