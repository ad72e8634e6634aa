#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cli.hpp"
#include "cli_config.hpp"

using namespace subhess::cli;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

// A fresh scratch directory per test case.
struct Scratch {
  fs::path dir;
  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("subhess_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
  std::string path(const std::string& f) const { return (dir / f).string(); }
  void write(const std::string& f, const std::string& text) const { std::ofstream(dir / f) << text; }
  std::string read(const std::string& f) const {
    std::ifstream in(dir / f);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }
};

struct Run {
  int code;
  std::string out, err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

json report(const Scratch& s, const std::string& command) { return json::parse(s.read(command + ".json")); }

}  // namespace

TEST_CASE("check-system passes on the heisenberg group") {
  Scratch s("check");
  const auto r = invoke({"check-system", "--system", "heisenberg1", "--out", s.dir.string()});
  REQUIRE(r.code == kExitOk);
  const auto j = report(s, "check-system");
  CHECK(j["status"] == "ok");
  CHECK(j["result"]["anti_self_adjoint"] == json::array({true, true}));
  CHECK(j["result"]["hormander"]["holds"] == true);
  CHECK(j["result"]["step2_vanishing"] == true);
  CHECK(j["config"]["general"]["system"] == "heisenberg1");
}

TEST_CASE("check-system flags a system failing the rank condition") {
  Scratch s("flat");
  s.write("flat.fs", "3 2 flat\n1; 0; 0\n0; 1; 0\n");
  const auto r = invoke({"check-system", "--system", s.path("flat.fs"), "--out", s.dir.string()});
  CHECK(r.code == kExitViolation);
  CHECK(report(s, "check-system")["result"]["hormander"]["holds"] == false);
}

TEST_CASE("verify-identities labels engel residuals as expected") {
  Scratch s("engel");
  const auto r = invoke({"verify-identities", "--system", "engel", "--corpus", "random4", "--seed", "7", "--out",
                         s.dir.string()});
  REQUIRE(r.code == kExitOk);
  const auto j = report(s, "verify-identities")["result"];
  CHECK(j["step2_vanishing"] == false);
  CHECK(j["nonzero_columns"].get<int>() > 0);
  for (const auto& item : j["items"])
    for (const auto& col : item["columns"]) CHECK(col["label"] != "violation");
}

TEST_CASE("verify-identities finds exact zeros on the heisenberg group") {
  Scratch s("heis");
  const auto r = invoke({"verify-identities", "--system", "heisenberg2", "--corpus-size", "5", "--out", s.dir.string()});
  REQUIRE(r.code == kExitOk);
  const auto j = report(s, "verify-identities")["result"];
  CHECK(j["nonzero_columns"] == 0);
  CHECK(j["columns_checked"] == 20);
}

TEST_CASE("exponents for k = m") {
  Scratch s("exp");
  REQUIRE(invoke({"exponents", "--k", "2", "--m", "2", "--Q", "4", "--out", s.dir.string()}).code == kExitOk);
  const auto j = report(s, "exponents")["result"];
  CHECK(j["q_gradient_max"]["value"] == "inf");
  CHECK(j["holder_alpha"] == "1");
  REQUIRE(invoke({"exponents", "--k", "1", "--out", s.dir.string()}).code == kExitOk);
  const auto h = report(s, "exponents")["result"];
  CHECK(h["m"] == 2);
  CHECK(h["Q"] == 4);
  CHECK(h["q_gradient_max"]["value"] == "4/3");
  CHECK(h["p_laplace_max"]["value"] == "2");
}

TEST_CASE("usage errors exit with code 2") {
  CHECK(invoke({}).code == kExitRejected);
  CHECK(invoke({"no-such-command"}).code == kExitRejected);
  CHECK(invoke({"exponents", "--no-such-flag", "1"}).code == kExitRejected);
  const auto r = invoke({"exponents", "--k", "banana"});
  CHECK(r.code == kExitRejected);
  CHECK(r.err.find("k:") != std::string::npos);
  CHECK(invoke({"exponents", "--k", "3", "--m", "2", "--Q", "4"}).code == kExitRejected);
  CHECK(invoke({"kconvex", "--system", "no-such-system"}).code == kExitRejected);
  CHECK(invoke({"--help"}).code == kExitOk);
}

TEST_CASE("failed preconditions are rejected with a report") {
  Scratch s("pre");
  // v differs from u on the boundary sphere.
  const auto r = invoke({"monotonicity", "--bump-scale", "0.1", "--v", "x1^2 + x2^2 + x3^2 - 1/10",
                         "--out", s.dir.string()});
  CHECK(r.code == kExitRejected);
  const auto j = report(s, "monotonicity");
  CHECK(j["status"] == "rejected");
  CHECK(j["exit_code"] == kExitRejected);
  CHECK_FALSE(j["error"].get<std::string>().empty());
}

TEST_CASE("invalid config value names the key") {
  Scratch s("bad");
  s.write("bad.ini", "system = heisenberg1\n[weak-continuity]\nalpha = banana\n");
  const auto r = invoke({"weak-continuity", "--config", s.path("bad.ini")});
  CHECK(r.code == kExitRejected);
  CHECK(r.err.find("alpha") != std::string::npos);
  CHECK(r.err.find("line 3") != std::string::npos);

  s.write("syntax.ini", "system heisenberg1\n");
  const auto p = invoke({"exponents", "--config", s.path("syntax.ini")});
  CHECK(p.code == kExitRejected);
  CHECK(p.err.find("line 1") != std::string::npos);

  s.write("unknown.ini", "[exponents]\nkk = 2\n");
  CHECK(invoke({"exponents", "--config", s.path("unknown.ini")}).err.find("kk") != std::string::npos);
}

TEST_CASE("minimal config gets defaults echoed") {
  Scratch s("min");
  s.write("min.ini", "system = heisenberg1\nout = " + s.dir.string() + "\n");
  REQUIRE(invoke({"kconvex", "--config", s.path("min.ini")}).code == kExitOk);
  const auto j = report(s, "kconvex");
  CHECK(j["config"]["kconvex"]["k"] == "2");
  CHECK(j["config"]["kconvex"]["samples"] == "200");
  CHECK(j["config"]["general"]["seed"] == "1");
  CHECK(j["seed"] == 1);
  CHECK(j["version"].is_string());
  CHECK(j["timing"]["wall_seconds"].is_number());
}

TEST_CASE("config layering and round trip") {
  Config c("weak-continuity");
  CHECK(c.get("weak-continuity", "h") == "0.0125");
  std::istringstream file("seed = 9\n[weak-continuity]\nh = 0.02\neps_ladder = 0.2,0.1 , 0.05\n[exponents]\nk = 1\n");
  c.merge(file, "test");
  CHECK(c.integer("general", "seed") == 9);
  CHECK(c.get("weak-continuity", "eps_ladder") == "0.2, 0.1, 0.05");
  c.set("weak-continuity", "h", "0.01");
  CHECK(c.real("weak-continuity", "h") == 0.01);

  Config again("weak-continuity");
  std::istringstream echoed(c.serialize());
  again.merge(echoed, "echo");
  CHECK(again == c);
  CHECK(again.serialize() == c.serialize());

  CHECK_THROWS_AS(c.set("weak-continuity", "h", "-1"), ConfigError);
  CHECK_THROWS_AS(c.set("weak-continuity", "nope", "1"), ConfigError);
  CHECK_THROWS_AS(c.set("general", "system", "no-such-system"), ConfigError);
  CHECK_THROWS_AS(Config("no-such-command"), subhess::RejectedInput);
}

TEST_CASE("echoed config file reproduces the run") {
  Scratch s("echo");
  REQUIRE(invoke({"check-system", "--samples", "5", "--seed", "3", "--out", s.dir.string()}).code == kExitOk);
  const auto first = report(s, "check-system");
  s.write("echo.ini", s.read("check-system.config"));
  REQUIRE(invoke({"check-system", "--config", s.path("echo.ini")}).code == kExitOk);
  auto second = report(s, "check-system");
  CHECK(second["config"] == first["config"]);
}

TEST_CASE("reports are byte-identical apart from timing") {
  Scratch a("det_a"), b("det_b");
  for (const std::string cmd : {"verify-identities", "weak-continuity"}) {
    CAPTURE(cmd);
    // The output directory is part of the echoed config, so both runs use the
    // same relative directory name from different working directories.
    const auto cwd = fs::current_path();
    std::vector<std::string> texts;
    for (const auto* s : {&a, &b}) {
      fs::current_path(s->dir);
      REQUIRE(invoke({cmd, "--seed", "7", "--out", "out"}).code == kExitOk);
      fs::current_path(cwd);
      auto j = json::parse(s->read("out/" + cmd + ".json"));
      j.erase("timing");
      texts.push_back(j.dump(2));
    }
    CHECK(texts[0] == texts[1]);
  }
  CHECK(a.read("out/weak-continuity.alpha-0.csv") == b.read("out/weak-continuity.alpha-0.csv"));
}

TEST_CASE("tabular commands write fixed CSV headers") {
  Scratch s("csv");
  REQUIRE(invoke({"weak-continuity", "--out", s.dir.string()}).code == kExitOk);
  for (int a = 0; a < 3; ++a) {
    const auto text = s.read("weak-continuity.alpha-" + std::to_string(a) + ".csv");
    CHECK(text.rfind("eps,l1_delta,pairing_gap,kconvex_margin\n", 0) == 0);
  }
  const auto j = report(s, "weak-continuity")["result"];
  CHECK(j["rows"].size() == 4);
  for (const auto& pa : j["per_alpha"]) CHECK(pa["gaps_decrease"] == true);

  REQUIRE(invoke({"cc-geometry", "--system", "euclidean2", "--radii", "0.25, 0.5, 1", "--samples", "1000", "--target",
                  "0.3, 0.4", "--out", s.dir.string()})
              .code == kExitOk);
  CHECK(s.read("cc-geometry.volumes.csv").rfind("R,volume,stderr\n", 0) == 0);
  CHECK(s.read("cc-geometry.path.csv").rfind("t,x1,x2,c1,c2\n", 0) == 0);
  const auto g = report(s, "cc-geometry")["result"];
  CHECK(g["volumes"].size() == 3);
  CHECK(std::abs(g["distance"]["T"].get<double>() - 0.5) <= 0.005);
}

TEST_CASE("local-bounds and monotonicity defaults run") {
  Scratch s("misc");
  REQUIRE(invoke({"local-bounds", "--out", s.dir.string()}).code == kExitOk);
  CHECK(report(s, "local-bounds")["result"]["finite"] == true);
  REQUIRE(invoke({"monotonicity", "--out", s.dir.string()}).code == kExitOk);
  CHECK(report(s, "monotonicity")["result"]["predicted_sign_holds"] == true);
  REQUIRE(invoke({"local-bounds", "--q", "9", "--out", s.dir.string()}).code == kExitOk);
  // k = m = 2 on the heisenberg group: every finite q is admissible.
  CHECK(invoke({"local-bounds", "--k", "1", "--q", "2", "--out", s.dir.string()}).code == kExitRejected);
}
