#include "featurecuts/filter_rank.hpp"

#include "featurecuts/parallel.hpp"

namespace featurecuts {

std::string to_string(FilterMetric m) {
  switch (m) {
    case FilterMetric::FValueClassif: return "f_value_classif";
    case FilterMetric::FValueRegress: return "f_value_regress";
    case FilterMetric::MutualInformation: return "mutual_information";
    case FilterMetric::Variance: return "variance";
    case FilterMetric::AbsPearsonCorrelation: return "abs_correlation";
  }
  return "unknown";
}

FilterMetric default_metric(TaskKind task) {
  return is_classification(task) ? FilterMetric::FValueClassif : FilterMetric::FValueRegress;
}

FilterMetric parse_filter_metric(std::string_view s, TaskKind task) {
  if (s == "f_value" || s == "f") return default_metric(task);
  if (s == "f_value_classif") return FilterMetric::FValueClassif;
  if (s == "f_value_regress") return FilterMetric::FValueRegress;
  if (s == "mi" || s == "mutual_information") return FilterMetric::MutualInformation;
  if (s == "variance" || s == "var") return FilterMetric::Variance;
  if (s == "correlation" || s == "corr" || s == "abs_correlation") return FilterMetric::AbsPearsonCorrelation;
  throw std::invalid_argument("unknown filter metric: " + std::string(s));
}

std::vector<Eigen::Index> FeatureRanking::top(Eigen::Index k) const {
  if (k < 0 || k > static_cast<Eigen::Index>(order.size())) throw std::invalid_argument("cutoff out of range");
  return {order.begin(), order.begin() + k};
}

std::vector<Eigen::Index> order_by_score(const std::vector<double>& scores) {
  std::vector<Eigen::Index> order(scores.size());
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::ranges::stable_sort(order, [&](Eigen::Index a, Eigen::Index b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  return order;
}

double score_feature(const Eigen::Ref<const Eigen::VectorXd>& feature, const Dataset& ds, FilterMetric metric,
                     int mi_bins) {
  const bool classif = is_classification(ds.task());
  switch (metric) {
    case FilterMetric::FValueClassif: return f_value_classif(feature, ds.target());
    case FilterMetric::FValueRegress: return f_value_regress(feature, ds.target());
    case FilterMetric::MutualInformation: return mutual_information(feature, ds.target(), classif, mi_bins);
    case FilterMetric::Variance: return variance_score(feature);
    case FilterMetric::AbsPearsonCorrelation: return abs_correlation(feature, ds.target());
  }
  throw std::invalid_argument("unknown filter metric");
}

FeatureRanking rank_features(const Dataset& ds, FilterMetric metric, int mi_bins) {
  if (metric == FilterMetric::FValueClassif && !is_classification(ds.task()))
    throw std::invalid_argument("f_value_classif requires a classification task");
  if (metric == FilterMetric::FValueRegress && is_classification(ds.task()))
    throw std::invalid_argument("f_value_regress requires a regression task");

  return rank_with(ds, metric, [&](const Eigen::Ref<const Eigen::VectorXd>& col) {
    return score_feature(col, ds, metric, mi_bins);
  });
}

FeatureRanking rank_with(const Dataset& ds, FilterMetric metric, const ColumnScorer& scorer) {
  FeatureRanking out;
  out.metric = metric;
  out.scores.resize(static_cast<std::size_t>(ds.cols()));
  parallel_for(out.scores.size(), [&](std::size_t j) {
    out.scores[j] = scorer(ds.features().col(static_cast<Eigen::Index>(j)));
  });
  out.order = order_by_score(out.scores);
  return out;
}

}  // namespace featurecuts
