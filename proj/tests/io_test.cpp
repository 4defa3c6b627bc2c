#include "parakkt/io.hpp"

#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "checks.hpp"
#include "parakkt/error.hpp"

namespace parakkt {
namespace {

namespace fs = std::filesystem;

class IoTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("parakkt_io_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& f) const { return (dir_ / f).string(); }
  fs::path dir_;
};

Field awkward_field(const Mesh& m) {
  std::mt19937_64 rng(9);
  Field f = testing::random_q(m, rng, -1.0, 1.0);
  f(0, 0) = 1.0 / 3.0;
  f(1, 1) = -1e-300;
  f(2, 0) = 123456789.123456789;
  return f;
}

TEST_F(IoTest, CsvRoundTripIsExact) {
  const Mesh m = Mesh::build_2d(1.0, 2.0, 3, 4, 0.5, 5);
  const Field f = awkward_field(m);
  write_field_csv(path("f.csv"), "u", m, f);
  const FieldFile r = read_field_csv(path("f.csv"));
  EXPECT_EQ(r.name, "u");
  EXPECT_TRUE(r.mesh.same_grid(m));
  EXPECT_EQ(r.field.values(), f.values());
  EXPECT_EQ(read_text(path("f.csv")).rfind("# parakkt field\n# name=u dim=2 nx=3 ny=4 nt=5", 0), 0u);
}

TEST_F(IoTest, BinaryRoundTripIsExact) {
  const Mesh m = Mesh::build_1d(2.0, 7, 1.0, 3);
  const Field f = awkward_field(m);
  write_field_binary(path("f.bin"), "phi", m, f);
  const FieldFile r = read_field(path("f.bin"));
  EXPECT_EQ(r.name, "phi");
  EXPECT_TRUE(r.mesh.same_grid(m));
  EXPECT_EQ(r.field.values(), f.values());
}

TEST_F(IoTest, CorruptFilesAreRejected) {
  const Mesh m = Mesh::build_1d(1.0, 3, 1.0, 2);
  write_field_csv(path("ok.csv"), "u", m, Field::zeros(m));
  std::string text = read_text(path("ok.csv"));
  write_text(path("short.csv"), text.substr(0, text.size() - 6));
  EXPECT_THROW(read_field_csv(path("short.csv")), IoError);
  write_text(path("junk.csv"), "hello\n");
  EXPECT_THROW(read_field_csv(path("junk.csv")), IoError);
  write_text(path("extra.csv"), text + "0,0,0\n");
  EXPECT_THROW(read_field_csv(path("extra.csv")), IoError);
  write_text(path("bad.bin"), "PKFD");
  EXPECT_THROW(read_field_binary(path("bad.bin")), IoError);
  EXPECT_THROW(read_field_csv(path("missing.csv")), IoError);
}

TEST_F(IoTest, SolutionDirectoryRoundTripAndMissingListing) {
  const Mesh m = Mesh::build_1d(1.0, 4, 1.0, 3);
  Solution s;
  s.u = awkward_field(m);
  s.y = Field::constant(m, 0.5);
  s.phi = Field::zeros(m);
  s.e = Field::zeros(m);
  s.ehat = Field::zeros(m);
  s.history.push_back({1, 10, 0.25, 1e-3, 2e-3, 3e-3, 1.0});
  write_solution_fields(dir_.string(), m, s);
  const LoadedSolution l = read_solution_fields(dir_.string());
  EXPECT_EQ(l.u.values(), s.u.values());
  EXPECT_EQ(l.y.values(), s.y.values());
  EXPECT_EQ(read_text(path("history.csv")),
            "outer,inner_iterations,J,feasibility,stationarity,max_residual,penalty\n"
            "1,10,0.25,0.001,0.002,0.0030000000000000001,1\n");

  fs::remove(dir_ / "phi.csv");
  fs::remove(dir_ / "ehat.csv");
  try {
    read_solution_fields(dir_.string());
    FAIL() << "expected IoError";
  } catch (const IoError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("phi.csv"), std::string::npos);
    EXPECT_NE(msg.find("ehat.csv"), std::string::npos);
  }
}

TEST_F(IoTest, JsonIsDeterministic) {
  nlohmann::json j = {{"b", 1.0 / 3.0}, {"a", {1, 2, 3}}};
  write_json(path("a.json"), j);
  write_json(path("b.json"), j);
  EXPECT_EQ(read_text(path("a.json")), read_text(path("b.json")));
  EXPECT_EQ(read_json(path("a.json")), j);
}

}  // namespace
}  // namespace parakkt
