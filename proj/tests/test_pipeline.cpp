#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "featurecuts/parallel.hpp"
#include "featurecuts/pipeline.hpp"
#include "featurecuts/rng.hpp"
#include "featurecuts/synthetic.hpp"

using namespace featurecuts;

namespace {

SyntheticDataset fixture(std::uint64_t seed = 5) {
  return make_classification({.rows = 240, .features = 20, .informative = 3, .redundant = 2, .classes = 2,
                              .clusters_per_class = 2, .class_sep = 1.5, .seed = seed});
}

PipelineConfig fast_config() {
  PipelineConfig cfg;
  cfg.evaluator.boosting.rounds = 25;
  cfg.seed = 11;
  return cfg;
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("featurecuts_pipeline_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("brute-force pipeline matches an independent exhaustive search") {
  const auto s = fixture();
  auto cfg = fast_config();
  cfg.cutoff = CutoffMethod::BruteForce;
  const auto report = run_featurecuts(s.data, cfg);

  // Recompute every stage by hand with the pipeline's documented seeding.
  const auto folds = make_splits(s.data, {cfg.holdout_fraction, cfg.folds, cfg.seed});
  const auto ranking = rank_features(take_rows(s.data, folds.train_rows), FilterMetric::FValueClassif);
  EvaluatorSpec spec = cfg.evaluator;
  spec.boosting.seed = derive_seed(cfg.seed, {4});
  std::int64_t best_k = 0;
  double best = -1;
  for (std::int64_t k = 1; k <= 20; ++k) {
    const auto cols = ranking.top(k);
    const double model = cv_score(s.data, cols, folds, spec).value;
    const double f = fs_score_or_zero({model, 20 - k, 20}, cfg.fs_weights);
    if (f > best) {
      best = f;
      best_k = k;
    }
  }
  REQUIRE(report.cutoff.has_value());
  CHECK(report.cutoff->k_star == best_k);
  CHECK(report.selected == ranking.top(best_k));
  CHECK(report.fss_trace.size() == 20);
  CHECK(report.reduction_pct == doctest::Approx(100.0 * (1.0 - double(report.selected.size()) / 20.0)).epsilon(1e-12));
  CHECK(report.completed_stages == std::vector<std::string>{"rank", "cutoff", "holdout"});

  // Trace values are fs_score of the recorded model scores.
  for (const auto& row : report.fss_trace) {
    CHECK(row.fss == fs_score_or_zero({row.model_score, 20 - row.k, 20}, cfg.fs_weights));
    CHECK(row.reduction_pct == doctest::Approx(100.0 * double(20 - row.k) / 20.0).epsilon(1e-12));
  }
}

TEST_CASE("hybrid selection is a subset of the cutoff") {
  const auto s = fixture(6);
  auto cfg = fast_config();
  cfg.hybrid = PsoConfig{.agents = 6, .max_iterations = 5};
  const auto report = run_featurecuts(s.data, cfg);
  REQUIRE(report.cutoff.has_value());
  REQUIRE(report.pso.has_value());
  CHECK(report.selected.size() <= static_cast<std::size_t>(report.cutoff->k_star));
  const auto top = report.ranking.top(report.cutoff->k_star);
  for (auto c : report.selected) CHECK(std::ranges::find(top, c) != top.end());
  CHECK(report.selected_names.size() == report.selected.size());
  CHECK(method_label(cfg) == "FC_GS+PSO");
}

TEST_CASE("standalone PSO and other cutoff methods") {
  const auto s = fixture(7);
  auto cfg = fast_config();
  cfg.cutoff.reset();
  cfg.hybrid = PsoConfig{.agents = 4, .max_iterations = 3, .fitness_mode = FitnessMode::FsScoreFitness};
  const auto pso = run_featurecuts(s.data, cfg);
  CHECK_FALSE(pso.cutoff.has_value());
  CHECK(pso.pso.has_value());
  CHECK(method_label(cfg) == "PSO");

  cfg = fast_config();
  cfg.cutoff = CutoffMethod::Bayes;
  const auto bo = run_featurecuts(s.data, cfg);
  CHECK(bo.fss_trace.size() <= 12);
  CHECK(method_label(cfg) == "FC_BAYS");
}

TEST_CASE("reports are reproducible across worker counts") {
  const auto s = fixture(8);
  auto cfg = fast_config();
  cfg.cutoff = CutoffMethod::Bayes;
  cfg.hybrid = PsoConfig{.agents = 4, .max_iterations = 3};
  const unsigned before = worker_threads();
  set_worker_threads(1);
  const auto one = run_featurecuts(s.data, cfg).to_json(false).dump();
  set_worker_threads(4);
  const auto four = run_featurecuts(s.data, cfg).to_json(false).dump();
  const auto again = run_featurecuts(s.data, cfg).to_json(false).dump();
  set_worker_threads(before);
  CHECK(one == four);
  CHECK(four == again);
}

TEST_CASE("hold-out labels never influence selection") {
  const auto s = fixture(9);
  auto cfg = fast_config();
  cfg.hybrid = PsoConfig{.agents = 4, .max_iterations = 3};
  const auto folds = pipeline_splits(s.data, cfg);

  Eigen::VectorXd y = s.data.target();
  Rng rng(1);
  std::vector<Eigen::Index> shuffled = folds.holdout_rows;
  rng.shuffle(shuffled.begin(), shuffled.end());
  for (std::size_t i = 0; i < shuffled.size(); ++i) y(folds.holdout_rows[i]) = s.data.target()(shuffled[i]);
  // Flip a few hold-out labels as well so the corruption is not a no-op.
  for (std::size_t i = 0; i < folds.holdout_rows.size(); i += 3) y(folds.holdout_rows[i]) = 1 - y(folds.holdout_rows[i]);
  const Dataset corrupted(s.data.features(), y, s.data.feature_names(), s.data.task(), s.data.target_name(),
                          s.data.class_names());

  const auto clean = run_featurecuts(s.data, cfg, folds);
  const auto dirty = run_featurecuts(corrupted, cfg, folds);
  CHECK(clean.selected == dirty.selected);
  CHECK(clean.cutoff->trace == dirty.cutoff->trace);
  CHECK(clean.holdout_score->value != dirty.holdout_score->value);
}

TEST_CASE("report JSON") {
  const auto s = fixture();
  const auto report = run_featurecuts(s.data, fast_config(), std::nullopt, "toy");
  const auto j = report.to_json();
  CHECK(j["schema"] == 1);
  CHECK(j["dataset"]["name"] == "toy");
  CHECK(j["n_selected"] == report.selected.size());
  CHECK(j.contains("timings"));
  CHECK_FALSE(report.to_json(false).contains("timings"));
  CHECK(j["cutoff"]["trace"].size() == report.fss_trace.size());

  const auto csv = trace_csv(report);
  CHECK(csv.rfind("method,k,fss,model_score,reduction_pct,eval_index\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::ranges::count(csv, '\n')) == report.fss_trace.size() + 1);
}

TEST_CASE("configuration errors") {
  const auto s = fixture();
  auto cfg = fast_config();
  cfg.metric = FilterMetric::FValueRegress;
  CHECK_THROWS(run_featurecuts(s.data, cfg));
  cfg = fast_config();
  cfg.cutoff.reset();
  CHECK_THROWS(run_featurecuts(s.data, cfg));  // neither stage
  cfg = fast_config();
  cfg.folds = 1;
  CHECK_THROWS(run_featurecuts(s.data, cfg));
}

TEST_CASE("failures carry the partial report") {
  const auto s = fixture();
  auto cfg = fast_config();
  cfg.evaluator = EvaluatorSpec::parse("cmd:/nonexistent/evaluator");
  try {
    run_featurecuts(s.data, cfg);
    FAIL("expected PipelineError");
  } catch (const PipelineError& e) {
    CHECK(e.partial().completed_stages == std::vector<std::string>{"rank"});
    CHECK(e.partial().status.find("cutoff") != std::string::npos);
  }
}

TEST_CASE("aggregation arithmetic") {
  std::vector<BenchmarkRow> rows{{"a", "FC_GS", true, "", 60, 0.8, 1.0},
                                 {"b", "FC_GS", true, "", 80, 0.9, 3.0},
                                 {"c", "FC_GS", false, "boom", 0, 0, 0},
                                 {"a", "PSO", true, "", 40, 0.7, 2.0}};
  const auto agg = aggregate_rows(rows);
  REQUIRE(agg.size() == 2);
  const auto& gs = agg[0].method == "FC_GS" ? agg[0] : agg[1];
  const auto& pso = agg[0].method == "FC_GS" ? agg[1] : agg[0];
  CHECK(gs.datasets == 2);
  CHECK(gs.reduction_mean == doctest::Approx(70.0));
  CHECK(gs.reduction_std == doctest::Approx(10.0));
  CHECK(gs.score_mean == doctest::Approx(0.85));
  CHECK(gs.time_mean == doctest::Approx(2.0));
  CHECK(pso.reduction_std == 0.0);
  CHECK(pso.score_std == 0.0);
}

TEST_CASE("benchmark isolates failures and writes its outputs") {
  const auto dir = scratch_dir("bench");
  write_csv(fixture(1).data, dir / "one.csv");
  write_csv(fixture(2).data, dir / "two.csv");
  std::vector<BenchmarkEntry> entries;
  for (const char* name : {"one", "two", "missing"}) {
    BenchmarkEntry e;
    e.name = name;
    e.path = dir / (std::string(name) + ".csv");
    e.target = "label";
    e.config = fast_config();
    entries.push_back(e);
  }
  const auto summary = run_benchmark(entries, dir / "out");
  REQUIRE(summary.rows.size() == 3);
  CHECK(summary.rows[0].ok);
  CHECK(summary.rows[1].ok);
  CHECK_FALSE(summary.rows[2].ok);
  CHECK_FALSE(summary.rows[2].error.empty());
  REQUIRE(summary.aggregate.size() == 1);
  CHECK(summary.aggregate[0].datasets == 2);
  CHECK(summary.aggregate[0].reduction_mean ==
        doctest::Approx((summary.rows[0].reduction_pct + summary.rows[1].reduction_pct) / 2));

  for (const char* f : {"one.report.json", "one.trace.csv", "two.report.json", "summary.csv", "aggregate.csv",
                        "summary.json"})
    CHECK(std::filesystem::exists(dir / "out" / f));
  const auto csv = read_file(dir / "out" / "summary.csv");
  CHECK(csv.rfind("dataset,method,reduction_pct,test_score,time_s", 0) == 0);
  CHECK(csv.find("missing") != std::string::npos);
}
