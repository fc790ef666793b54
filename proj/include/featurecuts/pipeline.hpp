#pragma once

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "featurecuts/cutoff_search.hpp"
#include "featurecuts/dataset.hpp"
#include "featurecuts/evaluator.hpp"
#include "featurecuts/filter_rank.hpp"
#include "featurecuts/fs_score.hpp"
#include "featurecuts/pso.hpp"

namespace featurecuts {

/// Stage seeds (split, Bayesian optimization, swarm, evaluator) are all
/// derived from `seed`; seed fields inside the sub-configs are ignored.
struct PipelineConfig {
  std::optional<FilterMetric> metric;         // default: F-value for the task
  std::optional<CutoffMethod> cutoff = CutoffMethod::GoldenSection;  // nullopt: PSO over all features
  GssConfig gss;
  BayesConfig bayes;
  std::optional<PsoConfig> hybrid;
  FsWeights fs_weights;
  FsVariant fs_variant = FsVariant::RemovedFraction;
  double holdout_fraction = 0.2;
  int folds = 5;
  EvaluatorSpec evaluator;
  std::uint64_t seed = 0;
  int mi_bins = 10;

  void validate(TaskKind task) const;
  nlohmann::json to_json() const;
};

struct TraceRow {
  std::int64_t k = 0;
  double fss = 0.0;
  double model_score = 0.0;
  double reduction_pct = 0.0;
  std::size_t eval_index = 0;
};

struct StageTimings {
  double rank_s = 0, cutoff_s = 0, pso_s = 0, holdout_s = 0, total_s = 0;
};

struct SelectionReport {
  std::string dataset_name;
  Eigen::Index rows = 0;
  Eigen::Index features = 0;
  TaskKind task = TaskKind::BinaryClassification;
  std::string target_name;
  std::vector<std::string> class_names;
  nlohmann::json config;

  FeatureRanking ranking;
  std::optional<CutoffResult> cutoff;
  std::vector<TraceRow> fss_trace;
  std::optional<SwarmResult> pso;

  std::vector<Eigen::Index> selected;
  std::vector<std::string> selected_names;
  double reduction_pct = 0.0;
  std::optional<ModelScore> cv_score;
  std::optional<ModelScore> holdout_score;
  StageTimings timings;
  std::vector<std::string> notes;
  std::string status = "ok";
  std::vector<std::string> completed_stages;

  /// Versioned report JSON; timings are emitted under "timings" only when
  /// requested so runs can be compared byte for byte.
  nlohmann::json to_json(bool include_timings = true) const;
};

class PipelineError : public Error {
 public:
  PipelineError(const std::string& what, SelectionReport partial) : Error(what), partial_(std::move(partial)) {}
  const SelectionReport& partial() const { return partial_; }

 private:
  SelectionReport partial_;
};

FoldAssignment pipeline_splits(const Dataset& ds, const PipelineConfig& cfg);

/// rank (train partition) -> cutoff search over FSS -> optional PSO on the
/// top-k* features -> one hold-out evaluation. `splits` pins the partition;
/// by default it is derived from cfg.
SelectionReport run_featurecuts(const Dataset& ds, const PipelineConfig& cfg,
                                const std::optional<FoldAssignment>& splits = std::nullopt,
                                const std::string& dataset_name = "dataset");

/// Short method label used in summaries, e.g. "FC_GS+PSO".
std::string method_label(const PipelineConfig& cfg);

/// Trace CSV: method,k,fss,model_score,reduction_pct,eval_index.
std::string trace_csv(const SelectionReport& report);

struct BenchmarkEntry {
  std::string name;
  std::filesystem::path path;
  std::string target;
  TaskKind task = TaskKind::BinaryClassification;
  IngestOptions ingest;
  PipelineConfig config;
};

struct BenchmarkRow {
  std::string dataset;
  std::string method;
  bool ok = false;
  std::string error;
  double reduction_pct = 0, test_score = 0, time_s = 0;
};

struct BenchmarkAggregate {
  std::string method;
  int datasets = 0;
  double reduction_mean = 0, reduction_std = 0;
  double score_mean = 0, score_std = 0;
  double time_mean = 0, time_std = 0;
};

struct BenchmarkSummary {
  std::vector<BenchmarkRow> rows;
  std::vector<BenchmarkAggregate> aggregate;
  nlohmann::json to_json() const;
};

/// Runs every entry (failures are recorded, the rest continue) and writes
/// per-dataset reports and traces plus summary.csv, aggregate.csv and
/// summary.json into out_dir.
BenchmarkSummary run_benchmark(const std::vector<BenchmarkEntry>& entries, const std::filesystem::path& out_dir);

/// Mean and population standard deviation over successful rows per method.
std::vector<BenchmarkAggregate> aggregate_rows(const std::vector<BenchmarkRow>& rows);

/// Writes text to path via a temporary file and rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace featurecuts
