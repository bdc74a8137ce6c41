#include <gtest/gtest.h>

#include <filesystem>

#include "conewise/error.hpp"
#include "conewise/fields.hpp"
#include "conewise/io.hpp"
#include "conewise/util.hpp"

using namespace conewise;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("conewise_io_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                        "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& s) const { return (path / s).string(); }
};

}  // namespace

TEST(Io, FieldRoundTripIsBitExact) {
  TempDir d;
  GridSpec g = GridSpec::make(3, {12, 10, 8}, 0.125, {-0.5, 0.25, 0});
  FormField u = smooth_bump_form(g, 2, {0, 0.6, 0.2}, 0.4, 3);
  save_field(d / "u", u);
  EXPECT_TRUE(fs::exists(d / "u.raw"));
  EXPECT_EQ(fs::file_size(d / "u.raw"), g.points() * 3 * sizeof(double));
  FormField v = load_field(d / "u");
  EXPECT_TRUE(v.grid() == g);
  EXPECT_TRUE(v.bitwise_equal(u));
  const Json j = read_json(d / "u.json");
  EXPECT_EQ(j["components"], Json::parse("[[1,2],[1,3],[2,3]]"));
  // No temporaries left behind.
  for (const auto& e : fs::directory_iterator(d.path))
    EXPECT_EQ(e.path().string().find(".tmp."), std::string::npos);
}

TEST(Io, KernelDomainTentRoundTrips) {
  TempDir d;
  SampledKernel k = build_theta(2, 1.0, 1.0 / 32);
  save_kernel(d / "k", k);
  SampledKernel k2 = load_kernel(d / "k");
  EXPECT_EQ(k2.values, k.values);
  EXPECT_EQ(k2.lo, k.lo);
  EXPECT_EQ(k2.provenance, "theta");

  GridSpec g = GridSpec::make(2, {64, 64, 1}, 1.0 / 32, {-1, -1, 0});
  auto dom = make_domain(g, DomainKind::kRandom, 0.5, 1.0, 9);
  save_domain(d / "dom", dom);
  auto dom2 = load_domain(d / "dom");
  EXPECT_EQ(dom2.lambda, dom.lambda);
  EXPECT_EQ(dom2.dist_complement, dom.dist_complement);
  EXPECT_EQ(dom2.A_certified, dom.A_certified);

  TentFunction U = zero_tent(g, 1, TLadder::make(0.2, 0.3, 4));
  Rng rng(4);
  for (auto& s : U.slices)
    for (int c = 0; c < s.ncomp(); ++c)
      for (double& v : s.comp(c)) v = rng.normal();
  save_tent(d / "U", U);
  TentFunction V = load_tent(d / "U");
  ASSERT_EQ(V.slices.size(), U.slices.size());
  for (std::size_t i = 0; i < U.slices.size(); ++i) EXPECT_TRUE(V.slices[i].bitwise_equal(U.slices[i]));
}

TEST(Io, RejectsTruncatedOrForeignArtifacts) {
  TempDir d;
  GridSpec g = GridSpec::make(1, {16, 1, 1}, 0.25, {0, 0, 0});
  FormField u(g, 1);
  save_field(d / "u", u);
  write_atomic(d / "u.raw", std::string(8, '\0'));
  try {
    load_field(d / "u");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
  save_kernel(d / "k", build_theta(1, 1.0, 1.0 / 32));
  try {
    load_field(d / "k");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
  try {
    read_json(d / "missing.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}
