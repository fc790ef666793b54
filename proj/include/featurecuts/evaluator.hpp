#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "featurecuts/boosted_trees.hpp"
#include "featurecuts/dataset.hpp"
#include "featurecuts/metrics.hpp"

namespace featurecuts {

struct ExternalCommand {
  std::string program;
  std::vector<std::string> args;
  std::chrono::seconds timeout{600};
};

struct EvaluatorSpec {
  enum class Kind { BuiltInBoosted, ExternalCommand };
  Kind kind = Kind::BuiltInBoosted;
  BoostingParams boosting;
  featurecuts::ExternalCommand external;

  /// Parses "builtin" or "cmd:<path> [args...]" (whitespace-separated).
  static EvaluatorSpec parse(std::string_view s);
  std::string describe() const;
};

struct ModelScore {
  double value = 0.0;
  MetricKind metric = MetricKind::RocAuc;
  Eigen::Index n_eval_rows = 0;
};

/// Fits on `train`, scores `test` with `metric`. Both must share columns and
/// task. Binary targets are scored by ROC AUC on margins; multiclass uses
/// one-vs-rest boosters and predicts the argmax of softmax-normalized margins.
ModelScore train_evaluate(const Dataset& train, const Dataset& test, const EvaluatorSpec& spec, MetricKind metric);

/// Per-fold scores of the given columns: fold f validates, the remaining
/// train-partition folds fit.
std::vector<ModelScore> cv_fold_scores(const Dataset& ds, std::span<const Eigen::Index> columns,
                                       const FoldAssignment& folds, const EvaluatorSpec& spec);

/// Mean of cv_fold_scores; n_eval_rows is the train-partition size.
ModelScore cv_score(const Dataset& ds, std::span<const Eigen::Index> columns, const FoldAssignment& folds,
                    const EvaluatorSpec& spec);

/// Fits on every train-partition row and scores the hold-out rows once.
ModelScore holdout_score(const Dataset& ds, std::span<const Eigen::Index> columns, const FoldAssignment& folds,
                         const EvaluatorSpec& spec);

struct ExternalRequest {
  std::filesystem::path train_csv;
  std::filesystem::path test_csv;
  std::string target;
  TaskKind task = TaskKind::BinaryClassification;
};

/// Runs the command with one JSON request on stdin and expects exactly one
/// line `{"score": <real>}` on stdout. Throws EvaluatorError on nonzero exit,
/// timeout, or a malformed response.
ModelScore external_evaluate(const ExternalRequest& request, const ExternalCommand& command, MetricKind metric);

}  // namespace featurecuts
