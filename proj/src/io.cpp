#include "conewise/io.hpp"

#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "conewise/error.hpp"

namespace conewise {

namespace {

namespace fs = std::filesystem;

void append_doubles(std::string& out, const double* p, std::size_t count) {
  const std::size_t at = out.size();
  out.resize(at + count * sizeof(double));
  std::memcpy(out.data() + at, p, count * sizeof(double));
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t k = 0; k < count; ++k) {
      char* b = out.data() + at + k * sizeof(double);
      for (std::size_t i = 0; i < sizeof(double) / 2; ++i) std::swap(b[i], b[sizeof(double) - 1 - i]);
    }
  }
}
void append_doubles(std::string& out, const std::vector<double>& v) { append_doubles(out, v.data(), v.size()); }

// Reads `count` doubles at byte offset `at`.
std::vector<double> take_doubles(const std::string& raw, std::size_t at, std::size_t count) {
  require(at + count * sizeof(double) <= raw.size(), ErrorCode::kIo, "raw block shorter than its sidecar says");
  std::vector<double> v(count);
  std::memcpy(v.data(), raw.data() + at, count * sizeof(double));
  if constexpr (std::endian::native == std::endian::big) {
    for (double& d : v) {
      char* b = reinterpret_cast<char*>(&d);
      for (std::size_t i = 0; i < sizeof(double) / 2; ++i) std::swap(b[i], b[sizeof(double) - 1 - i]);
    }
  }
  return v;
}

void check_format(const Json& j, const char* kind) {
  require(j.value("format", std::string()) == kind, ErrorCode::kIo, std::string("expected a ") + kind + " sidecar");
  require(j.value("version", 0) == kFormatVersion, ErrorCode::kIo, "unsupported artifact version");
}

Json header(const char* kind) { return Json{{"format", kind}, {"version", kFormatVersion}}; }

Json ivec(const IVec& v, int n) { return Json(std::vector<int>(v.begin(), v.begin() + n)); }
Json rvec(const RVec& v, int n) { return Json(std::vector<double>(v.begin(), v.begin() + n)); }
IVec to_ivec(const Json& j) {
  IVec v{1, 1, 1};
  for (std::size_t a = 0; a < j.size() && a < 3; ++a) v[a] = j[a].get<int>();
  return v;
}
IVec to_offset(const Json& j) {
  IVec v{0, 0, 0};
  for (std::size_t a = 0; a < j.size() && a < 3; ++a) v[a] = j[a].get<int>();
  return v;
}
RVec to_rvec(const Json& j) {
  RVec v{0, 0, 0};
  for (std::size_t a = 0; a < j.size() && a < 3; ++a) v[a] = j[a].get<double>();
  return v;
}

Json window_json(const Window& w, int n) { return Json{{"lo", ivec(w.lo, n)}, {"shape", ivec(w.shape, n)}}; }

Json components_json(int n, int degree) {
  Json c = Json::array();
  for (MultiIndex I : basis(n, degree)) {
    std::vector<int> axes;
    for (int a : I.axes()) axes.push_back(a + 1);
    c.push_back(axes);
  }
  return c;
}

}  // namespace

void write_atomic(const std::string& path, const std::string& bytes) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp." + std::to_string(::getpid());
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(f), ErrorCode::kIo, "cannot open " + tmp.string());
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    f.flush();
    require(static_cast<bool>(f), ErrorCode::kIo, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target, ec);
  if (ec) {
    fs::remove(tmp);
    fail(ErrorCode::kIo, "cannot rename into " + path + ": " + ec.message());
  }
}

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  require(static_cast<bool>(f), ErrorCode::kIo, "cannot open " + path);
  std::ostringstream s;
  s << f.rdbuf();
  return s.str();
}

void write_json(const std::string& path, const Json& j) { write_atomic(path, j.dump(2) + "\n"); }

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_file(path));
  } catch (const Json::exception& e) {
    fail(ErrorCode::kIo, path + ": " + e.what());
  }
}

Json grid_to_json(const GridSpec& g) {
  return Json{{"n", g.n}, {"sizes", ivec(g.sizes, g.n)}, {"h", g.h}, {"origin", rvec(g.origin, g.n)}};
}

GridSpec grid_from_json(const Json& j) {
  try {
    return GridSpec::make(j.at("n").get<int>(), to_ivec(j.at("sizes")), j.at("h").get<double>(),
                          to_rvec(j.at("origin")));
  } catch (const Json::exception& e) {
    fail(ErrorCode::kIo, std::string("bad grid header: ") + e.what());
  }
}

Json ladder_to_json(const TLadder& l) {
  return Json{{"t_min", l.t_min}, {"t_max", l.t_max}, {"per_octave", l.per_octave}, {"nodes", l.nodes},
              {"weights", l.weights}};
}

TLadder ladder_from_json(const Json& j) {
  TLadder l = TLadder::make(j.at("t_min").get<double>(), j.at("t_max").get<double>(), j.at("per_octave").get<int>());
  require(l.nodes == j.at("nodes").get<std::vector<double>>(), ErrorCode::kIo,
          "ladder nodes do not match the recorded window");
  return l;
}

void save_field(const std::string& prefix, const FormField& u) {
  Json j = header("field");
  j["grid"] = grid_to_json(u.grid());
  j["degree"] = u.degree();
  j["components"] = components_json(u.grid().n, u.degree());
  std::string raw;
  for (int c = 0; c < u.ncomp(); ++c) append_doubles(raw, u.comp(c));
  write_atomic(prefix + ".raw", raw);
  write_json(prefix + ".json", j);
}

FormField load_field(const std::string& prefix) {
  const Json j = read_json(prefix + ".json");
  check_format(j, "field");
  FormField u(grid_from_json(j.at("grid")), j.at("degree").get<int>());
  const std::string raw = read_file(prefix + ".raw");
  const std::size_t P = u.grid().points();
  require(raw.size() == P * u.ncomp() * sizeof(double), ErrorCode::kIo, "raw size does not match " + prefix);
  for (int c = 0; c < u.ncomp(); ++c) u.comp(c) = take_doubles(raw, c * P * sizeof(double), P);
  return u;
}

void save_kernel(const std::string& prefix, const SampledKernel& k) {
  Json j = header("kernel");
  j["n"] = k.n;
  j["h"] = k.h;
  j["lo"] = ivec(k.lo, k.n);
  j["shape"] = ivec(k.shape, k.n);
  j["ncomp"] = k.ncomp();
  j["t"] = k.t;
  j["provenance"] = k.provenance;
  j["sigma"] = k.sigma;
  j["shell"] = {k.shell_lo, k.shell_hi};
  std::string raw;
  for (const auto& c : k.values) append_doubles(raw, c);
  write_atomic(prefix + ".raw", raw);
  write_json(prefix + ".json", j);
}

SampledKernel load_kernel(const std::string& prefix) {
  const Json j = read_json(prefix + ".json");
  check_format(j, "kernel");
  const int n = j.at("n").get<int>();
  SampledKernel k = make_kernel(n, j.at("h").get<double>(), to_offset(j.at("lo")), to_ivec(j.at("shape")),
                                j.at("ncomp").get<int>());
  k.t = j.at("t").get<double>();
  k.provenance = j.at("provenance").get<std::string>();
  k.sigma = j.at("sigma").get<double>();
  k.shell_lo = j.at("shell")[0].get<double>();
  k.shell_hi = j.at("shell")[1].get<double>();
  const std::string raw = read_file(prefix + ".raw");
  const std::size_t P = k.box_points();
  require(raw.size() == P * k.ncomp() * sizeof(double), ErrorCode::kIo, "raw size does not match " + prefix);
  for (int c = 0; c < k.ncomp(); ++c) k.values[c] = take_doubles(raw, c * P * sizeof(double), P);
  return k;
}

void save_domain(const std::string& prefix, const LipschitzGraphDomain& d) {
  Json j = header("domain");
  j["grid"] = grid_to_json(d.grid);
  j["kind"] = domain_kind_name(d.kind);
  j["A"] = d.A;
  j["A_certified"] = d.A_certified;
  j["sigma"] = d.sigma;
  j["seed"] = d.seed;
  j["lambda_points"] = d.lambda.size();
  std::string raw;
  append_doubles(raw, d.lambda);
  write_atomic(prefix + ".raw", raw);
  write_json(prefix + ".json", j);
}

LipschitzGraphDomain load_domain(const std::string& prefix) {
  const Json j = read_json(prefix + ".json");
  check_format(j, "domain");
  LipschitzGraphDomain d;
  d.grid = grid_from_json(j.at("grid"));
  d.kind = domain_kind_from_name(j.at("kind").get<std::string>());
  d.A = j.at("A").get<double>();
  d.sigma = j.at("sigma").get<double>();
  d.seed = j.at("seed").get<std::uint64_t>();
  const std::string raw = read_file(prefix + ".raw");
  const std::size_t L = j.at("lambda_points").get<std::size_t>();
  require(raw.size() == L * sizeof(double), ErrorCode::kIo, "raw size does not match " + prefix);
  d.lambda = take_doubles(raw, 0, L);
  finalize_domain(d);
  return d;
}

void save_tent(const std::string& prefix, const TentFunction& U) {
  U.validate();
  Json j = header("tent");
  j["grid"] = grid_to_json(U.grid());
  j["degree"] = U.degree();
  j["components"] = components_json(U.grid().n, U.degree());
  j["ladder"] = ladder_to_json(U.ladder);
  std::string raw;
  for (const auto& s : U.slices)
    for (int c = 0; c < s.ncomp(); ++c) append_doubles(raw, s.comp(c));
  write_atomic(prefix + ".raw", raw);
  write_json(prefix + ".json", j);
}

TentFunction load_tent(const std::string& prefix) {
  const Json j = read_json(prefix + ".json");
  check_format(j, "tent");
  const GridSpec g = grid_from_json(j.at("grid"));
  TentFunction U = zero_tent(g, j.at("degree").get<int>(), ladder_from_json(j.at("ladder")));
  const std::string raw = read_file(prefix + ".raw");
  const std::size_t P = g.points();
  const std::size_t nc = U.slices.front().ncomp();
  require(raw.size() == U.slices.size() * nc * P * sizeof(double), ErrorCode::kIo,
          "raw size does not match " + prefix);
  std::size_t at = 0;
  for (auto& s : U.slices)
    for (int c = 0; c < s.ncomp(); ++c, at += P * sizeof(double)) s.comp(c) = take_doubles(raw, at, P);
  return U;
}

void save_decomposition(const std::string& dir, const TentDecomposition& dec) {
  const int n = dec.grid.n;
  Json j = header("tent_decomposition");
  j["grid"] = grid_to_json(dec.grid);
  j["ladder"] = ladder_to_json(dec.ladder);
  j["degree"] = dec.degree;
  j["params"] = {{"p", dec.params.p}, {"gamma", dec.params.gamma}, {"nu", dec.params.nu}, {"beta", dec.params.beta}};
  j["boundary_aware"] = dec.boundary_aware;
  j["C"] = dec.C;
  j["c_beta"] = dec.c_beta;
  j["levels"] = dec.levels;
  j["max_overlap"] = dec.max_overlap;
  std::string raw;
  Json atoms = Json::array();
  for (const TentAtom& T : dec.atoms) {
    Json a{{"index", T.index},
           {"level", T.level},
           {"center", rvec(T.center, n)},
           {"center_index", ivec(T.center_index, n)},
           {"radius", T.radius},
           {"whitney_radius", T.whitney_radius},
           {"lambda", T.lambda},
           {"flags",
            {{"in_tent", T.flags.in_tent},
             {"boxed", T.flags.boxed},
             {"interior5x", T.flags.interior5x},
             {"normalized", T.flags.normalized}}},
           {"window", window_json(T.A.window, n)},
           {"slices", {T.A.slice_lo, T.A.slice_hi}},
           {"offset", raw.size()}};
    for (const auto& slice : T.A.data)
      for (const auto& c : slice) append_doubles(raw, c);
    atoms.push_back(std::move(a));
  }
  j["atoms"] = std::move(atoms);
  write_atomic(dir + "/atoms.raw", raw);
  write_json(dir + "/index.json", j);
}

void save_hardy_atoms(const std::string& dir, const HardyResult& r) {
  const int n = r.tent.grid.n;
  Json j = header("hardy_atoms");
  j["grid"] = grid_to_json(r.tent.grid);
  j["kappa"] = r.kappa;
  j["fields"] = r.fields_kept;
  std::string raw;
  Json atoms = Json::array();
  for (const HardyAtom& H : r.atoms) {
    Json a{{"kind", hardy_kind_name(H.kind)},
           {"parent", H.parent},
           {"center", rvec(H.center, n)},
           {"center_index", ivec(H.center_index, n)},
           {"radius", H.radius},
           {"coefficient", H.coefficient},
           {"exactness", H.exactness},
           {"size_ratio", H.size_ratio},
           {"b_constant", H.b_constant},
           {"passed", H.passed()}};
    if (r.fields_kept) {
      a["a"] = {{"degree", H.a.degree}, {"window", window_json(H.a.window, n)}, {"offset", raw.size()}};
      for (const auto& c : H.a.comps) append_doubles(raw, c);
      a["b"] = {{"degree", H.b.degree}, {"window", window_json(H.b.window, n)}, {"offset", raw.size()}};
      for (const auto& c : H.b.comps) append_doubles(raw, c);
    }
    atoms.push_back(std::move(a));
  }
  j["atoms"] = std::move(atoms);
  write_atomic(dir + "/atoms.raw", raw);
  write_json(dir + "/index.json", j);
}

}  // namespace conewise
