#include "featurecuts/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "featurecuts/rng.hpp"

namespace featurecuts {

Dataset::Dataset(Eigen::MatrixXd features, Eigen::VectorXd target, std::vector<std::string> feature_names,
                 TaskKind task, std::string target_name, std::vector<std::string> class_names)
    : features_(std::move(features)),
      target_(std::move(target)),
      feature_names_(std::move(feature_names)),
      class_names_(std::move(class_names)),
      target_name_(std::move(target_name)),
      task_(task) {
  if (features_.rows() != target_.size()) throw std::invalid_argument("feature rows and target length differ");
  if (features_.rows() < 2) throw std::invalid_argument("dataset needs at least 2 rows");
  if (features_.cols() < 1) throw std::invalid_argument("dataset needs at least 1 feature");
  if (static_cast<Eigen::Index>(feature_names_.size()) != features_.cols())
    throw std::invalid_argument("feature_names must have one entry per column");
  std::unordered_set<std::string> seen(feature_names_.begin(), feature_names_.end());
  if (seen.size() != feature_names_.size()) throw std::invalid_argument("feature names must be distinct");
  if (!features_.allFinite() || !target_.allFinite()) throw std::invalid_argument("dataset contains non-finite values");

  if (is_classification(task_)) {
    int max_label = -1;
    for (double v : target_) {
      if (v < 0 || v != std::floor(v)) throw std::invalid_argument("class labels must be non-negative integers");
      max_label = std::max(max_label, static_cast<int>(v));
    }
    // With explicit class names (e.g. a row subset of a parent dataset) a
    // class may be absent; otherwise labels must cover 0..C-1.
    int classes = static_cast<int>(class_names_.size());
    if (class_names_.empty()) {
      classes = max_label + 1;
      std::vector<int> counts(static_cast<std::size_t>(classes), 0);
      for (double v : target_) ++counts[static_cast<std::size_t>(v)];
      if (std::ranges::any_of(counts, [](int c) { return c == 0; }))
        throw std::invalid_argument("class labels must be densely encoded 0..C-1");
      for (int c = 0; c < classes; ++c) class_names_.push_back(std::to_string(c));
    } else if (max_label >= classes) {
      throw std::invalid_argument("class label exceeds the number of class names");
    }
    if (classes < 2) throw std::invalid_argument("classification target needs at least 2 classes");
    if (task_ == TaskKind::BinaryClassification && classes != 2)
      throw std::invalid_argument("binary classification requires exactly 2 classes");
    if (task_ == TaskKind::MulticlassClassification && classes < 3)
      throw std::invalid_argument("multiclass classification requires at least 3 classes");
  } else {
    class_names_.clear();
  }
}

Eigen::VectorXi Dataset::labels() const {
  if (!is_classification(task_)) return {};
  return target_.cast<int>();
}

namespace {

using Row = std::vector<std::string>;

std::vector<Row> parse_records(std::string_view text, std::string_view source) {
  std::vector<Row> records;
  Row row;
  std::string cell;
  bool in_quotes = false;
  bool cell_started = false;
  std::size_t line = 1;

  auto end_cell = [&] {
    row.push_back(std::move(cell));
    cell.clear();
    cell_started = false;
  };
  auto end_row = [&] {
    end_cell();
    if (!(row.size() == 1 && row[0].empty())) records.push_back(std::move(row));
    row.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (ch == '\n') ++line;
        cell.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (cell_started && !cell.empty())
          throw IngestError(std::string(source) + ": stray quote on line " + std::to_string(line));
        in_quotes = true;
        cell_started = true;
        break;
      case ',': end_cell(); break;
      case '\r': break;
      case '\n':
        end_row();
        ++line;
        break;
      default:
        cell.push_back(ch);
        cell_started = true;
    }
  }
  if (in_quotes) throw IngestError(std::string(source) + ": unterminated quoted field");
  if (cell_started || !row.empty()) end_row();
  return records;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

Dataset parse_csv(std::string_view text, const std::string& target_column, TaskKind task,
                  const IngestOptions& options, std::string_view source) {
  const std::string src(source);
  auto records = parse_records(text, source);
  if (records.empty()) throw IngestError(src + ": missing header row");
  const Row header = records.front();
  records.erase(records.begin());

  auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
    for (std::size_t j = 0; j < header.size(); ++j)
      if (trim(header[j]) == name) return j;
    return std::nullopt;
  };
  const auto target_idx = find_col(target_column);
  if (!target_idx) throw IngestError(src + ": target column '" + target_column + "' not found in header");
  std::optional<std::size_t> id_idx;
  if (options.id_column) {
    id_idx = find_col(*options.id_column);
    if (!id_idx) throw IngestError(src + ": id column '" + *options.id_column + "' not found in header");
  }

  for (std::size_t r = 0; r < records.size(); ++r)
    if (records[r].size() != header.size())
      throw IngestError(src + ": row " + std::to_string(r + 1) + " has " + std::to_string(records[r].size()) +
                        " fields, header has " + std::to_string(header.size()));

  if (options.sample_rows && *options.sample_rows < records.size()) {
    std::vector<std::size_t> idx(records.size());
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(options.sample_seed);
    rng.shuffle(idx.begin(), idx.end());
    idx.resize(*options.sample_rows);
    std::ranges::sort(idx);
    std::vector<Row> sampled;
    sampled.reserve(idx.size());
    for (auto i : idx) sampled.push_back(std::move(records[i]));
    records = std::move(sampled);
  }

  if (records.size() < 2) throw IngestError(src + ": need at least 2 data rows");

  std::vector<std::size_t> feature_cols;
  std::vector<std::string> names;
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (j == *target_idx || (id_idx && j == *id_idx)) continue;
    feature_cols.push_back(j);
    names.emplace_back(trim(header[j]));
  }
  if (feature_cols.empty()) throw IngestError(src + ": no feature columns");

  const auto n = static_cast<Eigen::Index>(records.size());
  const auto p = static_cast<Eigen::Index>(feature_cols.size());
  Eigen::MatrixXd x(n, p);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (Eigen::Index r = 0; r < n; ++r) {
    for (Eigen::Index c = 0; c < p; ++c) {
      const auto& cell = records[r][feature_cols[c]];
      if (auto v = parse_number(cell)) {
        x(r, c) = *v;
      } else if (options.impute_mean) {
        x(r, c) = nan;
      } else {
        throw IngestError(src + ": non-numeric value '" + cell + "' at row " + std::to_string(r + 1) + ", column '" +
                          names[c] + "'");
      }
    }
  }
  if (options.impute_mean) {
    for (Eigen::Index c = 0; c < p; ++c) {
      double sum = 0;
      Eigen::Index count = 0;
      for (Eigen::Index r = 0; r < n; ++r)
        if (!std::isnan(x(r, c))) {
          sum += x(r, c);
          ++count;
        }
      if (count == 0) throw IngestError(src + ": column '" + names[c] + "' has no numeric values to impute from");
      const double mean = sum / static_cast<double>(count);
      for (Eigen::Index r = 0; r < n; ++r)
        if (std::isnan(x(r, c))) x(r, c) = mean;
    }
  }

  Eigen::VectorXd y(n);
  std::vector<std::string> class_names;
  if (is_classification(task)) {
    std::unordered_map<std::string, int> codes;
    for (Eigen::Index r = 0; r < n; ++r) {
      std::string label(trim(records[r][*target_idx]));
      if (label.empty()) throw IngestError(src + ": missing target value at row " + std::to_string(r + 1));
      auto [it, inserted] = codes.try_emplace(label, static_cast<int>(class_names.size()));
      if (inserted) class_names.push_back(label);
      y(r) = it->second;
    }
    if (class_names.size() < 2) throw IngestError(src + ": classification target has a single class");
    task = class_names.size() == 2 ? TaskKind::BinaryClassification : TaskKind::MulticlassClassification;
  } else {
    for (Eigen::Index r = 0; r < n; ++r) {
      const auto& cell = records[r][*target_idx];
      auto v = parse_number(cell);
      if (!v)
        throw IngestError(src + ": non-numeric target value '" + cell + "' at row " + std::to_string(r + 1));
      y(r) = *v;
    }
  }

  try {
    return Dataset(std::move(x), std::move(y), std::move(names), task, target_column, std::move(class_names));
  } catch (const std::invalid_argument& e) {
    throw IngestError(src + ": " + e.what());
  }
}

Dataset load_csv(const std::filesystem::path& path, const std::string& target_column, TaskKind task,
                 const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  std::string text = buf.str();
  if (text.starts_with("\xEF\xBB\xBF")) text.erase(0, 3);
  return parse_csv(text, target_column, task, options, path.string());
}

std::string to_csv(const Dataset& ds) {
  std::string out;
  for (const auto& name : ds.feature_names()) out += quote_if_needed(name) + ",";
  out += quote_if_needed(ds.target_name()) + "\n";
  const bool classif = is_classification(ds.task());
  for (Eigen::Index r = 0; r < ds.rows(); ++r) {
    for (Eigen::Index c = 0; c < ds.cols(); ++c) out += format_double(ds.features()(r, c)) + ",";
    if (classif)
      out += quote_if_needed(ds.class_names()[static_cast<std::size_t>(ds.target()(r))]);
    else
      out += format_double(ds.target()(r));
    out += "\n";
  }
  return out;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << to_csv(ds);
  if (!out) throw Error("write failed: " + path.string());
}

Dataset subset(const Dataset& ds, std::span<const Eigen::Index> columns) {
  if (columns.empty()) throw std::invalid_argument("subset needs at least one column");
  std::vector<bool> used(static_cast<std::size_t>(ds.cols()), false);
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (auto c : columns) {
    if (c < 0 || c >= ds.cols())
      throw std::invalid_argument("subset column " + std::to_string(c) + " out of range");
    if (used[static_cast<std::size_t>(c)]) throw std::invalid_argument("duplicate subset column " + std::to_string(c));
    used[static_cast<std::size_t>(c)] = true;
    names.push_back(ds.feature_names()[static_cast<std::size_t>(c)]);
  }
  Eigen::MatrixXd x(ds.rows(), static_cast<Eigen::Index>(columns.size()));
  for (Eigen::Index j = 0; j < x.cols(); ++j) x.col(j) = ds.features().col(columns[static_cast<std::size_t>(j)]);
  return Dataset(std::move(x), ds.target(), std::move(names), ds.task(), ds.target_name(), ds.class_names());
}

Dataset take_rows(const Dataset& ds, std::span<const Eigen::Index> rows) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(rows.size()), ds.cols());
  Eigen::VectorXd y(x.rows());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const auto r = rows[static_cast<std::size_t>(i)];
    if (r < 0 || r >= ds.rows()) throw std::invalid_argument("row index out of range");
    x.row(i) = ds.features().row(r);
    y(i) = ds.target()(r);
  }
  return Dataset(std::move(x), std::move(y), ds.feature_names(), ds.task(), ds.target_name(), ds.class_names());
}

std::vector<Eigen::Index> FoldAssignment::fold_rows(int fold) const {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < train_rows.size(); ++i)
    if (fold_of[i] == fold) out.push_back(train_rows[i]);
  return out;
}

std::vector<Eigen::Index> FoldAssignment::rows_outside_fold(int fold) const {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < train_rows.size(); ++i)
    if (fold_of[i] != fold) out.push_back(train_rows[i]);
  return out;
}

FoldAssignment make_splits(const Dataset& ds, const SplitPlan& plan) {
  if (plan.folds < 2) throw std::invalid_argument("folds must be at least 2");
  if (!(plan.holdout_fraction > 0.0 && plan.holdout_fraction < 1.0))
    throw std::invalid_argument("holdout fraction must lie in (0,1)");

  Rng rng(plan.seed);
  std::vector<std::vector<Eigen::Index>> groups;
  if (is_classification(ds.task())) {
    groups.resize(static_cast<std::size_t>(ds.num_classes()));
    for (Eigen::Index r = 0; r < ds.rows(); ++r) groups[static_cast<std::size_t>(ds.target()(r))].push_back(r);
  } else {
    groups.emplace_back(static_cast<std::size_t>(ds.rows()));
    std::iota(groups[0].begin(), groups[0].end(), Eigen::Index{0});
  }

  FoldAssignment out;
  out.folds = plan.folds;
  out.stratified = is_classification(ds.task());
  std::vector<std::pair<Eigen::Index, int>> train;
  std::size_t cursor = 0;  // round-robin position carried across groups
  for (std::size_t g = 0; g < groups.size(); ++g) {
    auto& rows = groups[g];
    rng.shuffle(rows.begin(), rows.end());
    const auto holdout = static_cast<std::size_t>(std::llround(plan.holdout_fraction * static_cast<double>(rows.size())));
    const std::size_t remaining = rows.size() - holdout;
    if (remaining < static_cast<std::size_t>(plan.folds)) {
      if (out.stratified)
        throw std::invalid_argument("class '" + ds.class_names()[g] + "' has " + std::to_string(remaining) +
                                    " train rows, fewer than " + std::to_string(plan.folds) + " folds");
      throw std::invalid_argument("hold-out leaves fewer train rows than folds");
    }
    out.holdout_rows.insert(out.holdout_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(holdout));
    for (std::size_t i = holdout; i < rows.size(); ++i)
      train.emplace_back(rows[i], static_cast<int>(cursor++ % static_cast<std::size_t>(plan.folds)));
  }
  if (out.holdout_rows.empty()) throw std::invalid_argument("hold-out fraction yields an empty hold-out set");

  std::ranges::sort(out.holdout_rows);
  std::ranges::sort(train);
  for (auto [row, fold] : train) {
    out.train_rows.push_back(row);
    out.fold_of.push_back(fold);
  }
  return out;
}

}  // namespace featurecuts
