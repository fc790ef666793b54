#include "featurecuts/fs_score.hpp"

#include <cmath>
#include <sstream>

namespace featurecuts {

void FsWeights::validate() const {
  if (!(performance > 0.0 && std::isfinite(performance)) || !(reduction > 0.0 && std::isfinite(reduction)))
    throw std::invalid_argument("FS weights must be positive and finite");
}

std::string to_string(FsVariant v) { return v == FsVariant::RemovedFraction ? "removed" : "retained"; }

FsVariant parse_fs_variant(std::string_view s) {
  if (s == "removed") return FsVariant::RemovedFraction;
  if (s == "retained") return FsVariant::RetainedFraction;
  throw std::invalid_argument("fs variant must be 'removed' or 'retained'");
}

double fs_score(const FsScoreInput& in, const FsWeights& w) {
  w.validate();
  if (!(in.model_score > 0.0) || !std::isfinite(in.model_score))
    throw std::invalid_argument("FS-score needs a positive model score");
  if (in.original < 1) throw std::invalid_argument("FS-score needs at least one original feature");
  if (in.removed < 0 || in.removed >= in.original)
    throw std::invalid_argument("features removed must lie in [0, original)");

  const double fraction = static_cast<double>(in.removed) / static_cast<double>(in.original);
  const double reduction = in.variant == FsVariant::RemovedFraction ? fraction : 1.0 - fraction;
  if (reduction <= 0.0) return 0.0;
  return (w.performance + w.reduction) / (w.performance / in.model_score + w.reduction / reduction);
}

double fs_score_or_zero(const FsScoreInput& in, const FsWeights& w) {
  if (in.model_score <= 0.0) return 0.0;
  return fs_score(in, w);
}

FssEntry FssCache::get_or_compute(const std::string& context, std::int64_t k, const Evaluate& evaluate) {
  const Key key{context, k};
  std::promise<FssEntry> promise;
  std::shared_future<FssEntry> future;
  bool owner = false;
  {
    std::lock_guard lock(mu_);
    if (auto it = entries_.find(key); it != entries_.end()) {
      future = it->second;
    } else {
      future = promise.get_future().share();
      entries_.emplace(key, future);
      owner = true;
    }
  }
  if (!owner) return future.get();

  for (int attempt = 0;; ++attempt) {
    try {
      {
        std::lock_guard lock(mu_);
        ++calls_;
      }
      promise.set_value(evaluate());
      return future.get();
    } catch (...) {
      if (attempt == 0) continue;
      {
        std::lock_guard lock(mu_);
        entries_.erase(key);
      }
      promise.set_exception(std::current_exception());
      throw;
    }
  }
}

std::optional<FssEntry> FssCache::find(const std::string& context, std::int64_t k) const {
  std::shared_future<FssEntry> future;
  {
    std::lock_guard lock(mu_);
    auto it = entries_.find({context, k});
    if (it == entries_.end()) return std::nullopt;
    future = it->second;
  }
  if (future.wait_for(std::chrono::seconds(0)) != std::future_status::ready) return std::nullopt;
  return future.get();
}

std::uint64_t FssCache::evaluator_calls() const {
  std::lock_guard lock(mu_);
  return calls_;
}

std::size_t FssCache::size() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

std::string fss_context(const FeatureRanking& ranking, const FoldAssignment& folds, const EvaluatorSpec& spec,
                        const FsWeights& weights, FsVariant variant) {
  std::uint64_t h = 0x84222325CBF29CE4ULL;
  auto mix = [&h](std::uint64_t v) { h = (h ^ v) * 0x100000001B3ULL + (h >> 29); };
  for (auto i : ranking.order) mix(static_cast<std::uint64_t>(i));
  mix(static_cast<std::uint64_t>(folds.folds));
  for (auto r : folds.train_rows) mix(static_cast<std::uint64_t>(r));
  for (auto f : folds.fold_of) mix(static_cast<std::uint64_t>(f));
  for (auto r : folds.holdout_rows) mix(static_cast<std::uint64_t>(r) + 0x9E37U);
  std::ostringstream os;
  os.precision(17);
  os << to_string(ranking.metric) << '/' << std::hex << h << std::dec << '/' << spec.describe() << '/'
     << weights.performance << ',' << weights.reduction << '/' << to_string(variant);
  return os.str();
}

FssEntry fss_of_cutoff(std::int64_t k, const FeatureRanking& ranking, const Dataset& ds, const FoldAssignment& folds,
                       const EvaluatorSpec& spec, const FsWeights& weights, FsVariant variant, FssCache& cache) {
  const auto n = static_cast<std::int64_t>(ds.cols());
  if (k < 1 || k > n) throw std::invalid_argument("cutoff must lie in [1, N]");
  if (static_cast<std::int64_t>(ranking.order.size()) != n)
    throw std::invalid_argument("ranking does not match the dataset");
  return cache.get_or_compute(fss_context(ranking, folds, spec, weights, variant), k, [&] {
    const auto columns = ranking.top(k);
    const auto model = cv_score(ds, columns, folds, spec);
    return FssEntry{fs_score_or_zero({model.value, n - k, n, variant}, weights), model};
  });
}

}  // namespace featurecuts
