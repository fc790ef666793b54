#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "featurecuts/common.hpp"

namespace featurecuts {

enum class MetricKind { RocAuc, MacroF1, RSquared };

std::string to_string(MetricKind m);
MetricKind metric_for(TaskKind task);

/// Mann-Whitney form of ROC AUC: the fraction of (positive, negative) pairs
/// ranked correctly, ties counting one half. Computed from midranks.
template <typename DS, typename DL>
double roc_auc(const Eigen::MatrixBase<DS>& scores, const Eigen::MatrixBase<DL>& labels) {
  const auto n = scores.size();
  if (labels.size() != n) throw std::invalid_argument("scores and labels differ in length");
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::ranges::sort(idx, [&](Eigen::Index a, Eigen::Index b) { return scores(a) < scores(b); });

  double pos = 0, neg = 0, pos_rank_sum = 0;
  for (Eigen::Index i = 0; i < n;) {
    Eigen::Index j = i;
    while (j + 1 < n && scores(idx[static_cast<std::size_t>(j + 1)]) == scores(idx[static_cast<std::size_t>(i)])) ++j;
    const double midrank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (Eigen::Index t = i; t <= j; ++t) {
      const auto l = labels(idx[static_cast<std::size_t>(t)]);
      if (l == 1) {
        pos += 1;
        pos_rank_sum += midrank;
      } else if (l == 0) {
        neg += 1;
      } else {
        throw std::invalid_argument("ROC AUC labels must be 0 or 1");
      }
    }
    i = j + 1;
  }
  if (pos == 0 || neg == 0) throw std::invalid_argument("ROC AUC needs both classes present");
  return (pos_rank_sum - pos * (pos + 1) / 2) / (pos * neg);
}

/// Unweighted mean of per-class F1 over the classes present in `actual`.
template <typename DP, typename DA>
double macro_f1(const Eigen::MatrixBase<DP>& predicted, const Eigen::MatrixBase<DA>& actual) {
  const auto n = actual.size();
  if (predicted.size() != n) throw std::invalid_argument("predicted and actual differ in length");
  if (n == 0) throw std::invalid_argument("macro F1 of an empty set");
  const int classes = static_cast<int>(std::max(predicted.maxCoeff(), actual.maxCoeff())) + 1;
  std::vector<double> tp(static_cast<std::size_t>(classes)), fp(tp), fn(tp);
  std::vector<char> present(static_cast<std::size_t>(classes), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto a = static_cast<std::size_t>(actual(i));
    const auto p = static_cast<std::size_t>(predicted(i));
    present[a] = 1;
    if (a == p) {
      tp[a] += 1;
    } else {
      fp[p] += 1;
      fn[a] += 1;
    }
  }
  double sum = 0;
  int count = 0;
  for (std::size_t c = 0; c < present.size(); ++c) {
    if (!present[c]) continue;
    const double denom = 2 * tp[c] + fp[c] + fn[c];
    sum += denom > 0 ? 2 * tp[c] / denom : 0.0;
    ++count;
  }
  return sum / count;
}

/// Coefficient of determination 1 - SS_res / SS_tot.
template <typename DP, typename DA>
double r_squared(const Eigen::MatrixBase<DP>& predicted, const Eigen::MatrixBase<DA>& actual) {
  if (predicted.size() != actual.size()) throw std::invalid_argument("predicted and actual differ in length");
  if (actual.size() < 2) throw std::invalid_argument("R^2 needs at least 2 values");
  const double mean = actual.template cast<double>().mean();
  const double ss_tot = (actual.template cast<double>().array() - mean).square().sum();
  if (ss_tot == 0.0) throw std::invalid_argument("R^2 undefined for a constant target");
  const double ss_res = (predicted.template cast<double>() - actual.template cast<double>()).squaredNorm();
  return 1.0 - ss_res / ss_tot;
}

}  // namespace featurecuts
