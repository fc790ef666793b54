#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "featurecuts/common.hpp"
#include "featurecuts/dataset.hpp"

namespace featurecuts {

enum class FilterMetric { FValueClassif, FValueRegress, MutualInformation, Variance, AbsPearsonCorrelation };

std::string to_string(FilterMetric m);
/// Accepts the CLI names (f_value, mi, variance, correlation); f_value
/// resolves to the classification or regression statistic by task.
FilterMetric parse_filter_metric(std::string_view s, TaskKind task);
FilterMetric default_metric(TaskKind task);

struct FeatureRanking {
  std::vector<Eigen::Index> order;  // descending score, ties by ascending index
  std::vector<double> scores;       // aligned with original columns
  FilterMetric metric{};

  /// The first k entries of order.
  std::vector<Eigen::Index> top(Eigen::Index k) const;
  bool operator==(const FeatureRanking&) const = default;
};

namespace detail {

template <typename Derived>
double mean_of(const Eigen::MatrixBase<Derived>& v) {
  return static_cast<double>(v.template cast<double>().mean());
}

/// Sum of squares and cross-products about the mean.
template <typename DX, typename DY>
void centered_moments(const Eigen::MatrixBase<DX>& x, const Eigen::MatrixBase<DY>& y, double& sxx, double& syy,
                      double& sxy) {
  const double mx = mean_of(x), my = mean_of(y);
  sxx = syy = sxy = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double dx = static_cast<double>(x(i)) - mx;
    const double dy = static_cast<double>(y(i)) - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
}

/// Equal-frequency bin of every element: a value's bin is determined by the
/// sorted position of its first occurrence, so ties share a bin and the
/// assignment only depends on the ordering of values.
template <typename Derived>
std::vector<int> equal_frequency_bins(const Eigen::MatrixBase<Derived>& v, int bins) {
  const auto n = v.size();
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::stable_sort(idx.begin(), idx.end(), [&](Eigen::Index a, Eigen::Index b) { return v(a) < v(b); });
  std::vector<int> out(static_cast<std::size_t>(n));
  Eigen::Index first = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (i > 0 && v(idx[static_cast<std::size_t>(i)]) != v(idx[static_cast<std::size_t>(i - 1)])) first = i;
    out[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])] = static_cast<int>(first * bins / n);
  }
  return out;
}

inline double plugin_mutual_information(const std::vector<int>& a, const std::vector<int>& b) {
  const int na = *std::ranges::max_element(a) + 1;
  const int nb = *std::ranges::max_element(b) + 1;
  Eigen::MatrixXd joint = Eigen::MatrixXd::Zero(na, nb);
  for (std::size_t i = 0; i < a.size(); ++i) joint(a[i], b[i]) += 1.0;
  joint /= static_cast<double>(a.size());
  const Eigen::VectorXd pa = joint.rowwise().sum();
  const Eigen::RowVectorXd pb = joint.colwise().sum();
  double mi = 0.0;
  for (int i = 0; i < na; ++i)
    for (int j = 0; j < nb; ++j)
      if (joint(i, j) > 0) mi += joint(i, j) * std::log(joint(i, j) / (pa(i) * pb(j)));
  return std::max(0.0, mi);
}

}  // namespace detail

/// One-way ANOVA F statistic of a feature across class groups.
template <typename DX, typename DL>
double f_value_classif(const Eigen::MatrixBase<DX>& feature, const Eigen::MatrixBase<DL>& labels) {
  const auto n = feature.size();
  if (labels.size() != n) throw std::invalid_argument("feature and labels differ in length");
  if (n == 0) throw std::invalid_argument("empty feature");
  const int classes = static_cast<int>(labels.maxCoeff()) + 1;
  if (classes < 2) throw std::invalid_argument("F-value needs at least 2 classes");
  if (n < classes + 1) throw std::invalid_argument("F-value needs more rows than classes");

  Eigen::VectorXd sum = Eigen::VectorXd::Zero(classes);
  Eigen::VectorXd count = Eigen::VectorXd::Zero(classes);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto c = static_cast<Eigen::Index>(labels(i));
    if (c < 0) throw std::invalid_argument("negative class label");
    sum(c) += static_cast<double>(feature(i));
    count(c) += 1.0;
  }
  if ((count.array() == 0).any()) throw std::invalid_argument("F-value: a class has no rows");

  const double grand = sum.sum() / static_cast<double>(n);
  const Eigen::VectorXd means = sum.cwiseQuotient(count);
  const double ss_between = (count.array() * (means.array() - grand).square()).sum();
  double ss_within = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = static_cast<double>(feature(i)) - means(static_cast<Eigen::Index>(labels(i)));
    ss_within += d * d;
  }
  // Rounding noise on a constant feature must not read as separation.
  const double scale = std::max(1.0, (feature.template cast<double>().array() - grand).square().sum());
  if (ss_between <= 1e-14 * scale) return 0.0;
  if (ss_within <= 1e-14 * scale) return kLargeSentinel;
  const double f = (ss_between / (classes - 1)) / (ss_within / static_cast<double>(n - classes));
  return std::min(f, kLargeSentinel);
}

/// Univariate regression F statistic r^2 (n-2) / (1-r^2).
template <typename DX, typename DY>
double f_value_regress(const Eigen::MatrixBase<DX>& feature, const Eigen::MatrixBase<DY>& target) {
  const auto n = feature.size();
  if (target.size() != n) throw std::invalid_argument("feature and target differ in length");
  if (n < 3) throw std::invalid_argument("regression F-value needs at least 3 rows");
  double sxx, syy, sxy;
  detail::centered_moments(feature, target, sxx, syy, sxy);
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  const double r2 = std::min(1.0, (sxy * sxy) / (sxx * syy));
  if (1.0 - r2 <= 1e-15) return kLargeSentinel;
  return std::min(kLargeSentinel, r2 * static_cast<double>(n - 2) / (1.0 - r2));
}

/// Plug-in mutual information (nats) between equal-frequency feature bins
/// and the target. Pass classification labels with `target_is_categorical`;
/// continuous targets are binned with the same rule as the feature.
template <typename DX, typename DY>
double mutual_information(const Eigen::MatrixBase<DX>& feature, const Eigen::MatrixBase<DY>& target,
                          bool target_is_categorical, int bins = 10) {
  const auto n = feature.size();
  if (target.size() != n) throw std::invalid_argument("feature and target differ in length");
  if (bins < 2) throw std::invalid_argument("mutual information needs at least 2 bins");
  if (n < bins) throw std::invalid_argument("mutual information needs at least as many rows as bins");
  const auto fx = detail::equal_frequency_bins(feature, bins);
  std::vector<int> fy;
  if (target_is_categorical) {
    fy.resize(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) {
      if (target(i) < 0) throw std::invalid_argument("negative class label");
      fy[static_cast<std::size_t>(i)] = static_cast<int>(target(i));
    }
  } else {
    fy = detail::equal_frequency_bins(target, bins);
  }
  return detail::plugin_mutual_information(fx, fy);
}

/// Population variance.
template <typename Derived>
double variance_score(const Eigen::MatrixBase<Derived>& feature) {
  if (feature.size() < 2) throw std::invalid_argument("variance needs at least 2 rows");
  const double m = detail::mean_of(feature);
  return (feature.template cast<double>().array() - m).square().mean();
}

/// |Pearson r|, 0 when either input has zero variance.
template <typename DX, typename DY>
double abs_correlation(const Eigen::MatrixBase<DX>& feature, const Eigen::MatrixBase<DY>& target) {
  if (target.size() != feature.size()) throw std::invalid_argument("feature and target differ in length");
  if (feature.size() < 2) throw std::invalid_argument("correlation needs at least 2 rows");
  double sxx, syy, sxy;
  detail::centered_moments(feature, target, sxx, syy, sxy);
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  return std::min(1.0, std::abs(sxy) / std::sqrt(sxx * syy));
}

/// Scores a single column with the given metric.
double score_feature(const Eigen::Ref<const Eigen::VectorXd>& feature, const Dataset& ds, FilterMetric metric,
                     int mi_bins = 10);

using ColumnScorer = std::function<double(const Eigen::Ref<const Eigen::VectorXd>&)>;

/// Scores every column independently and sorts by descending score.
FeatureRanking rank_features(const Dataset& ds, FilterMetric metric, int mi_bins = 10);

/// rank_features with a caller-supplied per-column statistic; `metric` only
/// labels the result.
FeatureRanking rank_with(const Dataset& ds, FilterMetric metric, const ColumnScorer& scorer);

/// Ordering rule shared by rank_features: descending score, ties by index.
std::vector<Eigen::Index> order_by_score(const std::vector<double>& scores);

}  // namespace featurecuts
