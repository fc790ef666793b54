#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

namespace featurecuts {

struct BoostingParams {
  int rounds = 100;
  int depth = 3;
  double learning_rate = 0.1;
  double l2 = 1.0;                // leaf weight regularization
  double min_child_weight = 1.0;  // minimum hessian sum per child
  std::uint64_t seed = 0;

  void validate() const;
};

enum class BoostingLoss { Squared, Logistic };

/// Depth-wise second-order regression tree. Nodes are stored in a flat array;
/// leaves have feature == -1.
struct RegressionTree {
  struct Node {
    int feature = -1;
    double threshold = 0.0;  // rows with x < threshold go left
    int left = -1;
    int right = -1;
    double value = 0.0;
  };
  std::vector<Node> nodes;

  double predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const;
};

/// Gradient-boosted trees for a single output (squared or logistic loss).
/// Split finding is exact greedy over sorted unique values; among equal
/// gains the lower threshold, then the lower feature index, wins.
class BoostedTrees {
 public:
  BoostedTrees(BoostingParams params, BoostingLoss loss) : params_(params), loss_(loss) {}

  /// `y` is the regression target or a 0/1 indicator for logistic loss.
  void fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

  /// Raw margins (log-odds for logistic loss).
  Eigen::VectorXd predict_margin(const Eigen::MatrixXd& x) const;

  const std::vector<RegressionTree>& trees() const { return trees_; }
  double base_score() const { return base_; }

  /// Training loss after each round; useful for convergence checks.
  const std::vector<double>& loss_history() const { return loss_history_; }

 private:
  BoostingParams params_;
  BoostingLoss loss_;
  double base_ = 0.0;
  std::vector<RegressionTree> trees_;
  std::vector<double> loss_history_;
};

}  // namespace featurecuts
