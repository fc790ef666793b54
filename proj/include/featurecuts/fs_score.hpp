#pragma once

#include <cstdint>
#include <functional>
#include <future>
#include <map>
#include <optional>
#include <mutex>
#include <string>
#include <vector>

#include "featurecuts/dataset.hpp"
#include "featurecuts/evaluator.hpp"
#include "featurecuts/filter_rank.hpp"

namespace featurecuts {

struct FsWeights {
  double performance = 50.0;  // w_s
  double reduction = 1.0;     // w_f

  void validate() const;
};

/// Which reduction term enters the harmonic mean: the fraction of features
/// removed (default), or the retained fraction 1 - F_r/F_b.
enum class FsVariant { RemovedFraction, RetainedFraction };

std::string to_string(FsVariant v);
FsVariant parse_fs_variant(std::string_view s);

struct FsScoreInput {
  double model_score = 0.0;    // S
  std::int64_t removed = 0;    // F_r
  std::int64_t original = 1;   // F_b
  FsVariant variant = FsVariant::RemovedFraction;
};

/// Weighted harmonic mean of the model score and the reduction term.
/// RemovedFraction with nothing removed returns 0 (the limit).
double fs_score(const FsScoreInput& input, const FsWeights& weights = {});

/// fs_score for search objectives: a non-positive model score (possible
/// for R^2) maps to 0, the limit as S -> 0+.
double fs_score_or_zero(const FsScoreInput& input, const FsWeights& weights);

struct FssEntry {
  double fss = 0.0;
  ModelScore model;
};

/// Memo of FSS(k) within one search context. Concurrent requests for the
/// same key run the evaluator once; failures are not cached.
class FssCache {
 public:
  using Evaluate = std::function<FssEntry()>;

  /// Returns the cached entry for (context, k) or runs `evaluate`, retrying
  /// once on failure before rethrowing.
  FssEntry get_or_compute(const std::string& context, std::int64_t k, const Evaluate& evaluate);

  std::optional<FssEntry> find(const std::string& context, std::int64_t k) const;
  std::uint64_t evaluator_calls() const;
  std::size_t size() const;

 private:
  using Key = std::pair<std::string, std::int64_t>;
  mutable std::mutex mu_;
  std::map<Key, std::shared_future<FssEntry>> entries_;
  std::uint64_t calls_ = 0;
};

/// Fingerprint of everything an FSS value depends on besides k.
std::string fss_context(const FeatureRanking& ranking, const FoldAssignment& folds, const EvaluatorSpec& spec,
                        const FsWeights& weights, FsVariant variant);

/// FSS(k): cv_score over the top-k ranked features combined with the
/// reduction F_r = N - k, memoized in `cache`.
FssEntry fss_of_cutoff(std::int64_t k, const FeatureRanking& ranking, const Dataset& ds, const FoldAssignment& folds,
                       const EvaluatorSpec& spec, const FsWeights& weights, FsVariant variant, FssCache& cache);

}  // namespace featurecuts
