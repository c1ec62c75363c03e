#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "helpers.hpp"
#include "json.hpp"
#include "odeaug/cli.hpp"

namespace fs = std::filesystem;
using odeaug::cli::execute;

namespace {

struct Run {
  int code;
  std::string out, err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = execute(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_tree(const fs::path& a, const fs::path& b) {
  std::size_t n = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const auto rel = fs::relative(e.path(), a);
    if (!fs::exists(b / rel) || slurp(e.path()) != slurp(b / rel)) return false;
    ++n;
  }
  return n > 0;
}

const char* kTinyExperiment = R"json({
  "benchmark": {"series_length": 200, "large_count": 4, "small_count": 2,
                "validation_normal_count": 2, "validation_anomalous_count": 2,
                "test_count": 2, "anomaly_fraction": 0.08},
  "experiment": {"architectures": [[4]], "ode_count": 3,
                 "predictor": {"training": {"max_epochs": 2}}},
  "regimes": ["S(r)", "S(r)+ODE(s)"]
})json";

}  // namespace

TEST_CASE("usage errors exit 2 with usage text") {
  const auto none = run({});
  CHECK(none.code == 2);
  CHECK(none.err.find("Usage") != std::string::npos);
  const auto unknown = run({"frobnicate"});
  CHECK(unknown.code == 2);
  CHECK(unknown.err.find("Usage") != std::string::npos);
  CHECK(run({"gen-data", "--out", "x", "--bogus"}).code == 2);
  CHECK(run({"gen-data"}).code == 2);
  CHECK(run({"gen-data", "--out", "x", "--format", "xml"}).code == 2);
  CHECK(run({"--help"}).code == 0);
}

TEST_CASE("gen-data is deterministic and never overwrites silently") {
  testutil::TempDir tmp("cli_gen");
  CHECK(run({"gen-data", "--seed", "7", "--out", tmp.str("a")}).code == 0);
  CHECK(run({"gen-data", "--seed", "7", "--out", tmp.str("b")}).code == 0);
  CHECK(same_tree(tmp.path / "a", tmp.path / "b"));
  const auto again = run({"gen-data", "--seed", "7", "--out", tmp.str("a")});
  CHECK(again.code == 1);
  CHECK(again.err.find("--force") != std::string::npos);
  CHECK(run({"gen-data", "--seed", "8", "--out", tmp.str("a"), "--force"}).code == 0);
  CHECK_FALSE(same_tree(tmp.path / "a", tmp.path / "b"));

  const auto m = nlohmann::json::parse(slurp(tmp.path / "b" / "manifest.json"));
  CHECK(m.at("seed") == 7);
  CHECK(m.at("version") == 1);
  CHECK(m.at("outputs").size() == 61);
  CHECK(m.at("outputs")[0].at("sha256").get<std::string>().size() == 64);
}

TEST_CASE("runtime errors exit 1 and name the line") {
  testutil::TempDir tmp("cli_bad");
  std::ofstream(tmp.str("bad.csv")) << "t,u,x\n0,1,2\n1,1,oops\n";
  const auto r = run({"fit-ode", "--input", tmp.str("bad.csv"), "--out", tmp.str("fit")});
  CHECK(r.code == 1);
  CHECK(r.err.find("line 3") != std::string::npos);
}

TEST_CASE("file pipeline from data to evaluation") {
  testutil::TempDir tmp("cli_pipe");
  const auto d = tmp.path / "d";
  REQUIRE(run({"gen-data", "--seed", "1", "--out", d.string()}).code == 0);
  const std::string s0 = (d / "large/000.csv").string(), s1 = (d / "large/001.csv").string();

  REQUIRE(run({"fit-ode", "--input", s0, "--out", tmp.str("f0")}).code == 0);
  REQUIRE(run({"fit-ode", "--input", s1, "--pso", "--out", tmp.str("f1")}).code == 0);
  CHECK(fs::exists(tmp.path / "f0/reconstruction.csv"));
  REQUIRE(run({"synth-control", "--input", s0, s1, "--length", "300", "--count", "2", "--out", tmp.str("p")}).code == 0);
  CHECK(fs::exists(tmp.path / "p/control/001.csv"));
  REQUIRE(run({"augment", "--profile", tmp.str("p/profile.json"), "--inputs", s0, s1, "--models",
               tmp.str("f0/model.json"), tmp.str("f1/model.json"), "--count", "3", "--out", tmp.str("g")})
              .code == 0);
  const auto gm = nlohmann::json::parse(slurp(tmp.path / "g/manifest.json"));
  CHECK(gm.at("config").at("generated").size() == 3);
  REQUIRE(run({"inject", "--input", tmp.str("g/generated/000.csv"), "--kind", "WRONG_STATE", "--model",
               tmp.str("f0/model.json"), "--out", tmp.str("i")})
              .code == 0);
  CHECK(slurp(tmp.path / "i/labeled.csv").find(",label\n") != std::string::npos);

  std::vector<std::string> train{"train", "--layers", "4", "--epochs", "2", "--out", tmp.str("t"), "--train",
                                 s0, s1, "--validation", (d / "validation_normal/000.csv").string()};
  REQUIRE(run(train).code == 0);
  REQUIRE(run({"threshold", "--predictor", tmp.str("t/predictor.json"), "--normal",
               (d / "validation_normal/001.csv").string(), "--anomalous",
               (d / "validation_anomalous/000.csv").string(), (d / "validation_anomalous/001.csv").string(),
               "--out", tmp.str("th")})
              .code == 0);
  const auto det = run({"detect", "--detector", tmp.str("th/detector.json"), "--input",
                        (d / "test/000.csv").string(), "--out", tmp.str("de")});
  REQUIRE(det.code == 0);
  const auto csv = slurp(tmp.path / "de/detection.csv");
  CHECK(csv.rfind("t,APP,CT,loglik,threshold,flagged,label\n", 0) == 0);
  const auto ev = run({"evaluate", "--detector", tmp.str("th/detector.json"), "--input",
                       (d / "test/000.csv").string(), (d / "test/001.csv").string(), "--format", "csv",
                       "--out", tmp.str("ev")});
  REQUIRE(ev.code == 0);
  CHECK(ev.out.rfind("precision,recall,f_score", 0) == 0);
}

TEST_CASE("experiment and curve outputs") {
  testutil::TempDir tmp("cli_exp");
  std::ofstream(tmp.str("exp.json")) << kTinyExperiment;
  const auto r = run({"experiment", "--config", tmp.str("exp.json"), "--seed", "2", "--out", tmp.str("r1")});
  REQUIRE(r.code == 0);
  CHECK(fs::exists(tmp.path / "r1/report.csv"));
  CHECK(fs::exists(tmp.path / "r1/report.txt"));
  CHECK(r.out.find("S(r)+ODE(s)") != std::string::npos);
  REQUIRE(run({"experiment", "--config", tmp.str("exp.json"), "--seed", "2", "--out", tmp.str("r2")}).code == 0);
  CHECK(same_tree(tmp.path / "r1", tmp.path / "r2"));
  const auto c = run({"curve", "--config", tmp.str("exp.json"), "--seed", "2", "--fractions", "0,1",
                      "--format", "csv", "--out", tmp.str("c")});
  REQUIRE(c.code == 0);
  CHECK(c.out.rfind("fraction,generated,f_score\n", 0) == 0);
}
