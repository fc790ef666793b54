#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "../tools/cli.hpp"
#include "featurecuts/dataset.hpp"
#include "featurecuts/synthetic.hpp"

using namespace featurecuts;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "featurecuts");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path workdir() {
  static const fs::path dir = [] {
    auto d = fs::temp_directory_path() / "featurecuts_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    auto s = make_classification({.rows = 200, .features = 20, .informative = 3, .redundant = 1,
                                  .clusters_per_class = 1, .class_sep = 2.0, .seed = 3});
    write_csv(s.data, d / "toy.csv");
    return d;
  }();
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::ranges::count(s, '\n')); }

std::vector<std::string> toy_args(const std::string& sub) {
  return {sub, "--input", (workdir() / "toy.csv").string(), "--target", "label", "--task", "classif",
          "--seed", "7", "--rounds", "20"};
}

}  // namespace

TEST_CASE("select happy path") {
  auto args = toy_args("select");
  const auto report = workdir() / "select.json", trace = workdir() / "select.csv";
  args.insert(args.end(), {"--cutoff", "gss", "--report", report.string(), "--trace", trace.string()});
  const auto r = run(args);
  CHECK_MESSAGE(r.code == 0, r.err);
  const auto j = nlohmann::json::parse(slurp(report));
  CHECK(j["schema"] == 1);
  CHECK(j["status"] == "ok");
  CHECK(j["n_selected"].get<int>() >= 1);
  CHECK(slurp(trace).rfind("method,k,fss,model_score,reduction_pct,eval_index\n", 0) == 0);
}

TEST_CASE("usage errors exit 1") {
  auto args = toy_args("select");
  args.push_back("--frobnicate");
  auto r = run(args);
  CHECK(r.code == 1);
  CHECK(r.err.find("frobnicate") != std::string::npos);

  CHECK(run({"select"}).code == 1);
  CHECK(run({}).code == 1);
  args = toy_args("select");
  args.insert(args.end(), {"--cutoff", "bayes", "--strict-paper"});
  CHECK(run(args).code == 1);
  args = toy_args("select");
  args.insert(args.end(), {"--agents", "5"});
  CHECK(run(args).code == 1);
  args = toy_args("select");
  args.insert(args.end(), {"--cutoff", "none"});
  CHECK(run(args).code == 1);
}

TEST_CASE("runtime errors exit 2") {
  auto r = run({"select", "--input", (workdir() / "absent.csv").string(), "--target", "label", "--seed", "1"});
  CHECK(r.code == 2);
  CHECK(r.err.find("absent.csv") != std::string::npos);
}

TEST_CASE("brute cutoff writes one trace row per feature") {
  auto args = toy_args("cutoff");
  const auto trace = workdir() / "brute.csv";
  args.insert(args.end(), {"--method", "brute", "--trace", trace.string()});
  const auto r = run(args);
  CHECK_MESSAGE(r.code == 0, r.err);
  CHECK(lines(slurp(trace)) == 21);
  const auto j = nlohmann::json::parse(r.out);
  CHECK(j["k_star"].get<int>() >= 1);
}

TEST_CASE("plot-data merges traces") {
  auto args = toy_args("cutoff");
  const auto brute = workdir() / "p_brute.csv", gss = workdir() / "p_gss.csv";
  auto b = args;
  b.insert(b.end(), {"--method", "brute", "--trace", brute.string()});
  REQUIRE(run(b).code == 0);
  auto g = args;
  g.insert(g.end(), {"--method", "gss", "--trace", gss.string()});
  REQUIRE(run(g).code == 0);

  const auto merged = run({"plot-data", brute.string(), gss.string(), "--dataset-name", "toy", "--dataset-name", "toy"});
  REQUIRE(merged.code == 0);
  CHECK(merged.out.rfind("dataset,method,k,fss\n", 0) == 0);
  CHECK(merged.out.find("toy,brute,") != std::string::npos);
  CHECK(merged.out.find("toy,gss,") != std::string::npos);
  CHECK(lines(merged.out) == 1 + 20 + lines(slurp(gss)) - 1);

  const auto again = run({"plot-data", gss.string(), brute.string(), "--dataset-name", "toy", "--dataset-name", "toy"});
  CHECK(again.out == merged.out);

  const auto empty = workdir() / "empty.csv";
  std::ofstream(empty) << "method,k,fss,model_score,reduction_pct,eval_index\n";
  const auto bad = run({"plot-data", empty.string()});
  CHECK(bad.code != 0);
  CHECK(bad.err.find("empty.csv") != std::string::npos);
}

TEST_CASE("config file supplies flags and the command line overrides it") {
  const auto cfg = workdir() / "cfg.json";
  std::ofstream(cfg) << R"({"input": ")" << (workdir() / "toy.csv").string()
                     << R"(", "target": "label", "seed": 7, "rounds": 20, "cutoff": "brute"})";
  const auto report = workdir() / "cfg_report.json";
  auto r = run({"select", "--config", cfg.string(), "--cutoff", "gss", "--report", report.string(), "--trace",
                (workdir() / "cfg_trace.csv").string()});
  CHECK_MESSAGE(r.code == 0, r.err);
  const auto j = nlohmann::json::parse(slurp(report));
  CHECK(j["config"]["cutoff"] == "gss");
  CHECK(j["config"]["evaluator"].get<std::string>().find("rounds=20") != std::string::npos);

  const auto bad = workdir() / "bad.json";
  std::ofstream(bad) << R"({"frobnicate": 1})";
  CHECK(run({"select", "--config", bad.string()}).code == 1);
}

TEST_CASE("a missing seed is chosen and printed") {
  std::vector<std::string> args{"rank", "--input", (workdir() / "toy.csv").string(), "--target", "label"};
  args.insert(args.end(), {"--out", (workdir() / "rank.json").string()});
  const auto r = run(args);
  CHECK_MESSAGE(r.code == 0, r.err);
  CHECK(r.err.find("seed: ") != std::string::npos);
}

TEST_CASE("generate and version") {
  const auto out = workdir() / "gen.csv";
  const auto r = run({"generate", "--rows", "50", "--features", "8", "--informative", "2", "--redundant", "1",
                      "--clusters-per-class", "1", "--seed", "1", "--out", out.string()});
  CHECK_MESSAGE(r.code == 0, r.err);
  const auto ds = load_csv(out, "label", TaskKind::BinaryClassification);
  CHECK(ds.rows() == 50);
  CHECK(ds.cols() == 8);

  const auto v = run({"--version"});
  CHECK(v.code == 0);
  CHECK(v.out.find("featurecuts 1.0.0") != std::string::npos);
  CHECK(v.out.find("schema 1") != std::string::npos);
}

TEST_CASE("inputs are left untouched") {
  const auto before = slurp(workdir() / "toy.csv");
  auto args = toy_args("select");
  args.insert(args.end(), {"--report", (workdir() / "u.json").string(), "--trace", (workdir() / "u.csv").string()});
  REQUIRE(run(args).code == 0);
  CHECK(slurp(workdir() / "toy.csv") == before);
}
