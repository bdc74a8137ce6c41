#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <string>

#include "json.hpp"

#include "conewise/conewise.h"

namespace fs = std::filesystem;
using Json = nlohmann::json;

namespace {

cw_grid_spec square(int N, double h) {
  cw_grid_spec g{};
  g.n = 2;
  g.sizes[0] = g.sizes[1] = N;
  g.sizes[2] = 1;
  g.h = h;
  g.origin[0] = g.origin[1] = -0.5 * N * h;
  return g;
}

Json take(char* s) {
  Json j = Json::parse(s);
  cw_string_free(s);
  return j;
}

std::string scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("conewise_capi_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p.string();
}

}  // namespace

TEST(CApi, StatusAndErrors) {
  EXPECT_STREQ(cw_status_name(CW_OK), "ok");
  EXPECT_STREQ(cw_status_name(CW_PRECONDITION_VIOLATED), "precondition_violated");
  cw_field* u = nullptr;
  EXPECT_EQ(cw_field_generate(nullptr, nullptr, &u), CW_INVALID_ARGUMENT);
  EXPECT_NE(std::string(cw_last_error()).find("null"), std::string::npos);
  EXPECT_EQ(u, nullptr);

  cw_grid_spec g = square(64, 1.0 / 32);
  cw_domain_params dp{"wedge", 2.0, 1.0, 1, 0.0};
  cw_domain* d = nullptr;
  EXPECT_EQ(cw_domain_create(&g, &dp, &d), CW_CERTIFICATION_FAILED);
  dp.kind = "spiral";
  dp.A = 0.5;
  EXPECT_EQ(cw_domain_create(&g, &dp, &d), CW_INVALID_ARGUMENT);
  EXPECT_EQ(cw_field_load("/nonexistent/prefix", &u), CW_IO);
  EXPECT_STRNE(cw_version(), "");
}

TEST(CApi, FieldRoundTripAndAccess) {
  const std::string dir = scratch("field");
  cw_grid_spec g = square(64, 1.0 / 32);
  cw_field_params p{};
  p.kind = CW_FIELD_CLOSED_BUMP;
  p.degree = 1;
  p.radius = 0.5;
  p.seed = 4;
  cw_field* u = nullptr;
  ASSERT_EQ(cw_field_generate(&g, &p, &u), CW_OK);
  cw_field* du = nullptr;
  ASSERT_EQ(cw_field_derivative(u, &du), CW_OK);
  double nd = -1.0;
  ASSERT_EQ(cw_field_l2_norm(du, &nd), CW_OK);
  EXPECT_EQ(nd, 0.0);
  ASSERT_EQ(cw_field_save(u, (dir + "/u").c_str()), CW_OK);
  cw_field* v = nullptr;
  ASSERT_EQ(cw_field_load((dir + "/u").c_str(), &v), CW_OK);
  cw_grid_spec gv{};
  int degree = -1, ncomp = -1;
  ASSERT_EQ(cw_field_info(v, &gv, &degree, &ncomp), CW_OK);
  EXPECT_EQ(gv.sizes[0], 64);
  EXPECT_EQ(degree, 1);
  EXPECT_EQ(ncomp, 2);
  for (int c = 0; c < 2; ++c) {
    const double *a = nullptr, *b = nullptr;
    size_t na = 0, nb = 0;
    ASSERT_EQ(cw_field_component(u, c, &a, &na), CW_OK);
    ASSERT_EQ(cw_field_component(v, c, &b, &nb), CW_OK);
    ASSERT_EQ(na, nb);
    EXPECT_EQ(std::memcmp(a, b, na * sizeof(double)), 0);
  }
  const double* x = nullptr;
  EXPECT_EQ(cw_field_component(u, 2, &x, nullptr), CW_INVALID_ARGUMENT);
  cw_field_free(u);
  cw_field_free(v);
  cw_field_free(du);
  fs::remove_all(dir);
}

TEST(CApi, PotentialVerifyReport) {
  cw_grid_spec g = square(128, 1.0 / 64);
  cw_field_params fp{};
  fp.kind = CW_FIELD_BUMP;
  fp.degree = 1;
  fp.center[1] = -0.3;
  fp.radius = 0.5;
  fp.seed = 3;
  cw_field* u = nullptr;
  ASSERT_EQ(cw_field_generate(&g, &fp, &u), CW_OK);
  cw_domain_params dp{"flat", 0.0, 0.5, 1, -0.3};
  cw_domain* d = nullptr;
  ASSERT_EQ(cw_domain_create(&g, &dp, &d), CW_OK);
  cw_potential_params pp{2, 1.0 / 64, 0.5, "theta", "upward", 0.15, 0.3, 16, 1};
  cw_potential* P = nullptr;
  ASSERT_EQ(cw_potential_create(&pp, &P), CW_OK);
  char* s = nullptr;
  ASSERT_EQ(cw_potential_verify(P, u, d, 4, 7, &s), CW_OK);
  const Json r = take(s);
  EXPECT_EQ(r["schema"], "conewise.report");
  EXPECT_EQ(r["schema_version"], 1);
  EXPECT_TRUE(r["pass"].get<bool>());
  std::vector<std::string> names;
  for (const auto& c : r["checks"]) names.push_back(c["name"]);
  EXPECT_EQ(names, (std::vector<std::string>{"homotopy_algebraic", "homotopy_quadrature", "support_leak",
                                             "symbol_homogeneity"}));
  pp.route = "sideways";
  cw_potential* bad = nullptr;
  EXPECT_EQ(cw_potential_create(&pp, &bad), CW_INVALID_ARGUMENT);
  cw_potential_free(P);
  cw_domain_free(d);
  cw_field_free(u);
}

TEST(CApi, TentAndHardyEntryPoints) {
  cw_grid_spec g = square(192, 1.0 / 64);
  cw_tent_params tp{1.0, 0.4, 0.55, 8, 1};
  cw_tent_ops* ops = nullptr;
  ASSERT_EQ(cw_tent_ops_create(&g, &tp, &ops), CW_OK);
  cw_field_params fp{};
  fp.kind = CW_FIELD_CLOSED_BUMP;
  fp.degree = 1;
  fp.center[1] = -0.2;
  fp.radius = 0.25;
  fp.seed = 5;
  cw_field* u = nullptr;
  ASSERT_EQ(cw_field_generate(&g, &fp, &u), CW_OK);
  cw_tent* U = nullptr;
  ASSERT_EQ(cw_tent_q(ops, u, 0, &U), CW_OK);
  double norm = 0.0;
  ASSERT_EQ(cw_tent_norm(U, 1.0, &norm), CW_OK);
  EXPECT_GT(norm, 0.0);

  cw_decomposition_params dp{1.0, 0.5, 0.5, 0.5};
  char* s = nullptr;
  ASSERT_EQ(cw_tent_decompose(U, nullptr, &dp, nullptr, &s), CW_OK);
  Json r = take(s);
  EXPECT_TRUE(r["pass"].get<bool>());
  EXPECT_EQ(r["metrics"]["C"], 26.0);

  // A tent function from another ladder is refused by pi.
  cw_tent_params other{1.0, 0.4, 0.5, 4, 1};
  cw_tent_ops* ops2 = nullptr;
  ASSERT_EQ(cw_tent_ops_create(&g, &other, &ops2), CW_OK);
  cw_field* f = nullptr;
  EXPECT_EQ(cw_tent_pi(ops2, U, 0, &f), CW_DIMENSION_MISMATCH);

  cw_field_params zp{};
  zp.kind = CW_FIELD_ZERO;
  zp.degree = 1;
  cw_field* z = nullptr;
  ASSERT_EQ(cw_field_generate(&g, &zp, &z), CW_OK);
  ASSERT_EQ(cw_hardy_decompose(ops, z, nullptr, &dp, 0, nullptr, &s), CW_OK);
  r = take(s);
  EXPECT_EQ(r["metrics"]["atoms"], 0);

  fp.kind = CW_FIELD_BUMP;
  cw_field* open = nullptr;
  ASSERT_EQ(cw_field_generate(&g, &fp, &open), CW_OK);
  EXPECT_EQ(cw_hardy_decompose(ops, open, nullptr, &dp, 0, nullptr, &s), CW_PRECONDITION_VIOLATED);

  cw_field_free(open);
  cw_field_free(z);
  cw_tent_ops_free(ops2);
  cw_tent_free(U);
  cw_field_free(u);
  cw_tent_ops_free(ops);
}
