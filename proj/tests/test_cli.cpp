#include <catch_amalgamated.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "qht/cli.hpp"

using Catch::Approx;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "qht");
  std::vector<const char*> argv;
  for (const auto& a : args)
    argv.push_back(a.c_str());
  std::ostringstream out, err;
  Result r;
  r.code = qht::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  qht::parallel::set_thread_cap(0);
  return r;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line))
    ++n;
  return n;
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "qht_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

const std::string one_photon = R"({"type":"number","k":1})";

} // namespace

TEST_CASE("simulate writes samples, sidecar and manifest") {
  const auto out = scratch("s.csv");
  const auto r = run({"simulate", "--state", one_photon, "--n", "1000", "--seed", "7", "--out", out.string()});
  REQUIRE(r.code == 0);
  CHECK(count_lines(out) == 1001);
  const auto side = nlohmann::json::parse(slurp(out.string() + ".json"));
  CHECK(side["n"] == 1000);
  CHECK(side["seed"] == 7);
  CHECK(side["state_spec"]["k"] == 1);
  const auto man = nlohmann::json::parse(slurp(out.string() + ".manifest.json"));
  CHECK(man["subcommand"] == "simulate");
  CHECK(man["config"]["seed"] == 7);
  CHECK(man.contains("version"));
}

TEST_CASE("state spec can be read from a file") {
  const auto spec = scratch("state.json");
  std::ofstream(spec) << one_photon;
  const auto a = scratch("from_file.csv");
  const auto b = scratch("inline.csv");
  REQUIRE(run({"simulate", "--state", spec.string(), "--n", "50", "--seed", "3", "--out", a.string()}).code == 0);
  REQUIRE(run({"simulate", "--state", one_photon, "--n", "50", "--seed", "3", "--out", b.string()}).code == 0);
  CHECK(slurp(a) == slurp(b));
}

TEST_CASE("estimate on an 81 by 81 grid") {
  const auto s = scratch("est_in.csv");
  const auto w = scratch("w.csv");
  REQUIRE(run({"simulate", "--state", one_photon, "--n", "1000", "--seed", "7", "--out", s.string()}).code == 0);
  const auto r = run({"estimate", "--samples", s.string(), "--beta", "1.0", "--grid", "-4,4,-4,4,81",
                      "--out", w.string()});
  REQUIRE(r.code == 0);
  CHECK(count_lines(w) == 81 * 81 + 1);
  std::ifstream in(w);
  std::string header;
  std::getline(in, header);
  CHECK(header == "q,p,w_est");
  const auto meta = nlohmann::json::parse(slurp(w.string() + ".json"));
  CHECK(meta["delta"].get<double>() == Approx(2.0 / std::log(1000.0)).epsilon(1e-15));
  CHECK(meta["bandwidth"] == "rule");

  const auto m = scratch("w_manual.csv");
  REQUIRE(run({"estimate", "--samples", s.string(), "--delta", "0.5", "--grid", "-1,1,-1,1,3",
               "--out", m.string()}).code == 0);
  CHECK(nlohmann::json::parse(slurp(m.string() + ".json"))["delta"] == 0.5);
}

TEST_CASE("truth grid of the vacuum") {
  const auto t = scratch("t.csv");
  REQUIRE(run({"truth", "--state", R"({"type":"number","k":0})", "--grid", "-1,1,-1,1,3", "--out",
               t.string()}).code == 0);
  std::ifstream in(t);
  std::string line;
  std::getline(in, line);
  CHECK(line == "q,p,w");
  int rows = 0;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::string q, p, w;
    std::getline(fields, q, ',');
    std::getline(fields, p, ',');
    std::getline(fields, w, ',');
    const double r2 = std::stod(q) * std::stod(q) + std::stod(p) * std::stod(p);
    CHECK(std::stod(w) == Approx(std::exp(-r2) / M_PI).epsilon(1e-10));
    ++rows;
  }
  CHECK(rows == 9);
}

TEST_CASE("risk writes a report and plot data") {
  const auto out = scratch("risk.json");
  const auto plot = scratch("risk.csv");
  const auto r = run({"risk", "--state", R"({"type":"number","k":0})", "--z", "0.1,0.2", "--n-values",
                      "100,1000,10000", "--reps", "10", "--seed", "4", "--out", out.string(),
                      "--plot-data", plot.string()});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(slurp(out));
  CHECK(j["z"][0] == 0.1);
  CHECK(j["z"][1] == 0.2);
  CHECK(j["per_n"].size() == 3);
  CHECK(j["seeds"].size() == 30);
  CHECK(count_lines(plot) == 4);
}

TEST_CASE("hardest report layout") {
  const auto r = run({"hardest", "--a", "1e4", "--dim", "100"});
  REQUIRE(r.code == 0);
  const auto j = nlohmann::json::parse(r.out);
  for (const char* key : {"alpha", "beta", "a", "q_small", "C_a", "positivity", "g_a_0", "int_Ha2",
                          "fisher", "van_trees"})
    CHECK(j.contains(key));
  CHECK(j["a"] == 1e4);
  CHECK(j["positivity"]["ok"] == true);
  CHECK(j["positivity"]["first_violation_k"].is_null());
  CHECK(j["C_a"].get<double>() == Approx(0.1 / (100.0 * std::pow(std::log(1e4), 1.5))).epsilon(1e-12));
  CHECK(j["van_trees"]["ratio"].get<double>() > 0.0);
}

TEST_CASE("verify suites pass") {
  const auto r = run({"verify", "--suite", "all"});
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(r.out.find("PASS minimax") != std::string::npos);
  CHECK(run({"verify", "--suite", "specfun"}).code == 0);
  CHECK(run({"verify", "--suite", "nonsense"}).code == 2);
}

TEST_CASE("exit codes and messages") {
  const auto s = scratch("e.csv");
  SECTION("usage errors exit 1") {
    CHECK(run({}).code == 1);
    CHECK(run({"frobnicate"}).code == 1);
    const auto no_seed = run({"simulate", "--state", one_photon, "--n", "10", "--out", s.string()});
    CHECK(no_seed.code == 1);
    CHECK(no_seed.err.find("simulate") != std::string::npos);
    CHECK(no_seed.err.find("--seed") != std::string::npos);
    CHECK(run({"risk", "--state", one_photon, "--out", s.string()}).code == 1);
    CHECK(run({"simulate", "--state", one_photon, "--n", "abc", "--seed", "1", "--out", s.string()}).code == 1);
  }
  SECTION("validation errors exit 2") {
    const auto bad = run({"simulate", "--state", R"({"type":"number"})", "--n", "10", "--seed", "1",
                          "--out", s.string()});
    CHECK(bad.code == 2);
    CHECK(bad.err.find("qht simulate") == 0);
    const auto alpha = run({"hardest", "--alpha", "0.3"});
    CHECK(alpha.code == 2);
    CHECK(alpha.err.find("--alpha") != std::string::npos);
    CHECK(run({"estimate", "--samples", scratch("missing.csv").string(), "--out", s.string()}).code == 2);
    CHECK(run({"estimate", "--samples", s.string(), "--grid", "1,2,3", "--out", s.string()}).code == 2);
    CHECK(run({"risk", "--state", one_photon, "--n-values", "10,x", "--seed", "1", "--out", s.string()}).code == 2);
    CHECK(run({"hardest", "--eta", "1.5"}).code == 2);
  }
  SECTION("help and version exit 0") {
    const auto h = run({"--help"});
    CHECK(h.code == 0);
    CHECK(h.out.find("simulate") != std::string::npos);
    CHECK(run({"--version"}).code == 0);
  }
}

TEST_CASE("outputs do not depend on the thread count") {
  const auto a = scratch("t1.csv");
  const auto b = scratch("t3.csv");
  const std::string state = R"({"type":"pure","coeffs":[0.6,[0,0.8]]})";
  REQUIRE(run({"simulate", "--state", state, "--n", "3000", "--seed", "11", "--out", a.string(), "--threads", "1"}).code == 0);
  REQUIRE(run({"simulate", "--state", state, "--n", "3000", "--seed", "11", "--out", b.string(), "--threads", "3"}).code == 0);
  CHECK(slurp(a) == slurp(b));

  const auto ea = scratch("e1.csv");
  const auto eb = scratch("e3.csv");
  REQUIRE(run({"estimate", "--samples", a.string(), "--grid", "-3,3,-3,3,21", "--out", ea.string(), "--threads", "1"}).code == 0);
  ::setenv("QHT_THREADS", "3", 1);
  REQUIRE(run({"estimate", "--samples", a.string(), "--grid", "-3,3,-3,3,21", "--out", eb.string()}).code == 0);
  ::unsetenv("QHT_THREADS");
  CHECK(slurp(ea) == slurp(eb));
  auto meta_a = nlohmann::json::parse(slurp(ea.string() + ".json"));
  auto meta_b = nlohmann::json::parse(slurp(eb.string() + ".json"));
  meta_a.erase("runtime_ms");
  meta_b.erase("runtime_ms");
  CHECK(meta_a == meta_b);
}
