#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "featurecuts/common.hpp"

namespace featurecuts {

/// A numeric feature matrix with its target. Immutable once built; the
/// constructor enforces every structural invariant.
class Dataset {
 public:
  /// For classification `target` holds labels densely encoded 0..C-1 and
  /// `class_names` the original label text (may be empty, then labels are
  /// named by their code).
  Dataset(Eigen::MatrixXd features, Eigen::VectorXd target, std::vector<std::string> feature_names,
          TaskKind task, std::string target_name = "target", std::vector<std::string> class_names = {});

  const Eigen::MatrixXd& features() const { return features_; }
  const Eigen::VectorXd& target() const { return target_; }
  const std::vector<std::string>& feature_names() const { return feature_names_; }
  const std::vector<std::string>& class_names() const { return class_names_; }
  const std::string& target_name() const { return target_name_; }
  TaskKind task() const { return task_; }

  Eigen::Index rows() const { return features_.rows(); }
  Eigen::Index cols() const { return features_.cols(); }
  int num_classes() const { return static_cast<int>(class_names_.size()); }

  /// Class labels as integers; empty for regression.
  Eigen::VectorXi labels() const;

  bool operator==(const Dataset&) const = default;

 private:
  Eigen::MatrixXd features_;
  Eigen::VectorXd target_;
  std::vector<std::string> feature_names_;
  std::vector<std::string> class_names_;
  std::string target_name_;
  TaskKind task_;
};

struct IngestOptions {
  bool impute_mean = false;
  std::optional<std::string> id_column;
  /// Uniformly sample this many rows (file order preserved) when set.
  std::optional<std::size_t> sample_rows;
  std::uint64_t sample_seed = 0;
};

/// Reads an RFC-4180 CSV with a header row. For classification tasks,
/// BinaryClassification vs MulticlassClassification is taken from the
/// number of distinct labels when `task` is either classification kind.
Dataset load_csv(const std::filesystem::path& path, const std::string& target_column, TaskKind task,
                 const IngestOptions& options = {});

/// Parses CSV text; `source` only labels error messages.
Dataset parse_csv(std::string_view text, const std::string& target_column, TaskKind task,
                  const IngestOptions& options = {}, std::string_view source = "<memory>");

/// Writes features followed by the target column. Classification targets are
/// written as their class names, so load_csv reproduces the dataset.
void write_csv(const Dataset& ds, const std::filesystem::path& path);
std::string to_csv(const Dataset& ds);

/// Column view by copy: column j of the result is column columns[j] of ds.
Dataset subset(const Dataset& ds, std::span<const Eigen::Index> columns);

/// Row selection by copy, order as given.
Dataset take_rows(const Dataset& ds, std::span<const Eigen::Index> rows);

struct SplitPlan {
  double holdout_fraction = 0.2;
  int folds = 5;
  std::uint64_t seed = 0;
};

/// Hold-out rows plus the fold index of every train-partition row. Row
/// indices refer to the dataset the assignment was made for and are sorted
/// ascending.
struct FoldAssignment {
  int folds = 0;
  std::vector<Eigen::Index> train_rows;
  std::vector<int> fold_of;  // aligned with train_rows
  std::vector<Eigen::Index> holdout_rows;
  bool stratified = false;

  std::vector<Eigen::Index> fold_rows(int fold) const;
  std::vector<Eigen::Index> rows_outside_fold(int fold) const;
  bool operator==(const FoldAssignment&) const = default;
};

/// Stratified (per-class shuffle, then round-robin) for classification,
/// plain shuffle for regression.
FoldAssignment make_splits(const Dataset& ds, const SplitPlan& plan);

}  // namespace featurecuts
