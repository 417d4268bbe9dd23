#include <doctest.h>

#include <sstream>

#include "sparselbm/cli.hpp"
#include "sparselbm/geometry.hpp"
#include "sparselbm/sparse_io.hpp"
#include "test_support.hpp"

using namespace sparselbm;
using sparselbm::testing::slurp;
using sparselbm::testing::TempDir;

namespace {

struct Outcome {
  int status;
  std::string out;
  std::string err;
};

Outcome run(std::vector<std::string> args) {
  args.insert(args.begin(), "sparselbm");
  std::ostringstream out;
  std::ostringstream err;
  const int status = run_command(args, out, err);
  return {status, out.str(), err.str()};
}

} // namespace

TEST_CASE("generate, preprocess, analyze, info") {
  TempDir dir;
  const std::string voxl = (dir / "c.voxl").string();
  const std::string a = (dir / "a.sprs").string();
  const std::string b = (dir / "b.sprs").string();

  CHECK(run({"generate", "--channel", "--d", "4", "--out", voxl}).status == 0);
  CHECK(voxel_load(voxl) == make_channel(4));

  CHECK(run({"preprocess", "--in", voxl, "--scheme", "lex:b=100", "--ranks", "8", "--out", a}).status == 0);
  CHECK(run({"preprocess", "--in", voxl, "--scheme", "lex:b=100", "--ranks", "8", "--out", b}).status == 0);
  CHECK(slurp(a) == slurp(b));
  CHECK(run({"preprocess", "--in", voxl, "--scheme", "lex:b=100", "--ranks", "1", "--threaded", "--out", b})
            .status == 0);
  CHECK(slurp(a) == slurp(b));

  const Outcome info = run({"info", "--in", a});
  CHECK(info.status == 0);
  CHECK(info.out.find("lex:b=100") != std::string::npos);
  CHECK(info.out.find("80") != std::string::npos);

  const std::string prefix = (dir / "stats").string();
  CHECK(run({"analyze", "--in", a, "--parts", "4", "--out-prefix", prefix}).status == 0);
  CHECK(slurp(prefix + "_neighbors.csv").rfind("bin,count\n", 0) == 0);

  const Outcome too_many = run({"analyze", "--in", a, "--parts", "4000"});
  CHECK(too_many.status == 1);
  CHECK(too_many.err.find("too") != std::string::npos);
}

TEST_CASE("packing with seed and periodic axes") {
  TempDir dir;
  const std::string voxl = (dir / "p.voxl").string();
  const std::string sprs = (dir / "p.sprs").string();
  CHECK(run({"generate", "--packing", "--d", "12", "--seed", "3", "--out", voxl}).status == 0);
  CHECK(voxel_load(voxl) == make_packing(12, 3));
  CHECK(run({"preprocess", "--in", voxl, "--scheme", "morton:g=2", "--periodic", "1,0,0", "--out", sprs}).status ==
        0);
  CHECK(read_sparse_header(sprs).periodic == Periodic{true, false, false});
}

TEST_CASE("solve and bench") {
  TempDir dir;
  const std::string voxl = (dir / "c.voxl").string();
  const std::string sprs = (dir / "c.sprs").string();
  const std::string csv = (dir / "bench.csv").string();
  REQUIRE(run({"generate", "--channel", "--d", "4", "--out", voxl}).status == 0);
  REQUIRE(run({"preprocess", "--in", voxl, "--periodic", "1,0,0", "--out", sprs}).status == 0);
  CHECK(run({"solve", "--in", sprs, "--parts", "3", "--force", "1e-6,0,0", "--steps", "20"}).status == 0);
  CHECK(run({"bench", "--in", sprs, "--parts", "2", "--steps", "10", "--warmup", "2", "--report", csv}).status == 0);
  CHECK(slurp(csv).rfind("partitions,steps,fluid_cells,seconds,flups,gflops_est\n2,10,80,", 0) == 0);
  CHECK(run({"solve", "--in", sprs, "--tau", "0.4", "--steps", "5"}).status == 1);
}

TEST_CASE("usage errors exit with 2") {
  TempDir dir;
  const std::string voxl = (dir / "c.voxl").string();
  REQUIRE(run({"generate", "--channel", "--d", "4", "--out", voxl}).status == 0);
  const std::string sprs = (dir / "c.sprs").string();
  REQUIRE(run({"preprocess", "--in", voxl, "--out", sprs}).status == 0);

  const std::vector<std::vector<std::string>> bad{
      {"generate", "--channel", "--packing", "--d", "12", "--out", voxl},
      {"generate", "--d", "12", "--out", voxl},
      {"preprocess", "--in", (dir / "missing.voxl").string(), "--out", sprs},
      {"preprocess", "--in", voxl, "--out", voxl},
      {"preprocess", "--in", voxl, "--scheme", "lex:b=0", "--out", sprs},
      {"preprocess", "--in", voxl, "--periodic", "1,0", "--out", sprs},
      {"analyze", "--in", sprs, "--parts", "2", "--map", voxl},
      {"solve", "--in", sprs, "--force", "1,2"},
      {"frobnicate"},
      {"info", "--in", sprs, "--bogus"},
      {},
  };
  for (const auto& args : bad) {
    const Outcome o = run(args);
    CAPTURE(o.err);
    CHECK(o.status == 2);
    CHECK_FALSE(o.err.empty());
  }
}

TEST_CASE("pipeline errors exit with 1") {
  TempDir dir;
  const std::string voxl = (dir / "bad.voxl").string();
  std::ofstream(voxl) << "not a voxel file";
  const Outcome o = run({"preprocess", "--in", voxl, "--out", (dir / "x.sprs").string()});
  CHECK(o.status == 1);
  CHECK(o.err.find("format") != std::string::npos);
  CHECK(run({"generate", "--channel", "--d", "2", "--out", (dir / "c.voxl").string()}).status == 1);
}

TEST_CASE("help") {
  const Outcome o = run({"preprocess", "--help"});
  CHECK(o.status == 0);
  CHECK(o.out.find("--scheme") != std::string::npos);
}
