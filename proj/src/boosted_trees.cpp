#include "featurecuts/boosted_trees.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "featurecuts/rng.hpp"

namespace featurecuts {

void BoostingParams::validate() const {
  if (rounds < 1) throw std::invalid_argument("rounds must be at least 1");
  if (depth < 1) throw std::invalid_argument("depth must be at least 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw std::invalid_argument("learning rate must lie in (0,1]");
  if (l2 < 0.0 || min_child_weight < 0.0) throw std::invalid_argument("regularization must be non-negative");
}

double RegressionTree::predict_row(const Eigen::Ref<const Eigen::RowVectorXd>& x) const {
  int id = 0;
  while (nodes[static_cast<std::size_t>(id)].feature >= 0) {
    const auto& n = nodes[static_cast<std::size_t>(id)];
    id = x(n.feature) < n.threshold ? n.left : n.right;
  }
  return nodes[static_cast<std::size_t>(id)].value;
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct Candidate {
  double gain = 0.0;
  int feature = -1;
  double threshold = 0.0;
  double g_left = 0.0, h_left = 0.0;
};

}  // namespace

void BoostedTrees::fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  params_.validate();
  const auto n = static_cast<int>(x.rows());
  const auto p = static_cast<int>(x.cols());
  if (n < 2) throw std::invalid_argument("need at least 2 training rows");
  if (p < 1) throw std::invalid_argument("need at least 1 feature");
  if (y.size() != n) throw std::invalid_argument("target length differs from rows");

  // Presorted row order and values per feature, column-major.
  std::vector<int> order(static_cast<std::size_t>(n) * static_cast<std::size_t>(p));
  std::vector<double> sorted(order.size());
  for (int j = 0; j < p; ++j) {
    int* o = order.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(n);
    std::iota(o, o + n, 0);
    std::stable_sort(o, o + n, [&](int a, int b) { return x(a, j) < x(b, j); });
    double* s = sorted.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(n);
    for (int i = 0; i < n; ++i) s[i] = x(o[i], j);
  }

  // Equal-gain splits on different columns are resolved by a digest of the
  // column values rather than the column position, so reordering columns
  // cannot change the fitted model.
  std::vector<std::uint64_t> column_key(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j) {
    std::uint64_t h = 0x9E3779B97F4A7C15ULL;
    for (int i = 0; i < n; ++i) h = splitmix64(h ^ std::bit_cast<std::uint64_t>(x(i, j) + 0.0));
    column_key[static_cast<std::size_t>(j)] = h;
  }

  if (loss_ == BoostingLoss::Squared) {
    base_ = y.mean();
  } else {
    const double prior = std::clamp(y.mean(), 1e-6, 1.0 - 1e-6);
    base_ = std::log(prior / (1.0 - prior));
  }

  const double lambda = params_.l2;
  const double mcw = params_.min_child_weight;
  auto score = [lambda](double g, double h) { return g * g / (h + lambda); };

  Eigen::VectorXd margin = Eigen::VectorXd::Constant(n, base_);
  Eigen::VectorXd grad(n), hess(n);
  std::vector<int> node_of(static_cast<std::size_t>(n));
  std::vector<double> node_g, node_h;
  trees_.clear();
  loss_history_.clear();
  trees_.reserve(static_cast<std::size_t>(params_.rounds));

  for (int round = 0; round < params_.rounds; ++round) {
    if (loss_ == BoostingLoss::Squared) {
      grad = margin - y;
      hess.setOnes();
    } else {
      for (int i = 0; i < n; ++i) {
        const double pr = sigmoid(margin(i));
        grad(i) = pr - y(i);
        hess(i) = std::max(pr * (1.0 - pr), 1e-16);
      }
    }

    RegressionTree tree;
    tree.nodes.emplace_back();
    node_g.assign(1, grad.sum());
    node_h.assign(1, hess.sum());
    std::fill(node_of.begin(), node_of.end(), 0);
    std::vector<int> frontier{0};

    for (int level = 0; level < params_.depth && !frontier.empty(); ++level) {
      const auto slots = frontier.size();
      std::vector<int> slot_of(tree.nodes.size(), -1);
      for (std::size_t s = 0; s < slots; ++s) slot_of[static_cast<std::size_t>(frontier[s])] = static_cast<int>(s);

      std::vector<Candidate> best(slots);
      std::vector<double> parent_score(slots);
      for (std::size_t s = 0; s < slots; ++s)
        parent_score[s] = score(node_g[static_cast<std::size_t>(frontier[s])], node_h[static_cast<std::size_t>(frontier[s])]);

      // Slot of every row for this level (-1 for rows in finished leaves) and
      // its gradient pair, laid out for the sequential scans below.
      std::vector<int> row_slot(static_cast<std::size_t>(n));
      std::vector<double> gh(2 * static_cast<std::size_t>(n));
      for (int r = 0; r < n; ++r) {
        row_slot[static_cast<std::size_t>(r)] = slot_of[static_cast<std::size_t>(node_of[static_cast<std::size_t>(r)])];
        gh[2 * static_cast<std::size_t>(r)] = grad(r);
        gh[2 * static_cast<std::size_t>(r) + 1] = hess(r);
      }

      std::vector<double> gl(slots), hl(slots), last(slots);
      std::vector<char> seen(slots);
      for (int j = 0; j < p; ++j) {
        std::fill(gl.begin(), gl.end(), 0.0);
        std::fill(hl.begin(), hl.end(), 0.0);
        std::fill(seen.begin(), seen.end(), 0);
        const int* o = order.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(n);
        const double* vals = sorted.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(n);
        for (int i = 0; i < n; ++i) {
          const auto r = static_cast<std::size_t>(o[i]);
          const int s = row_slot[r];
          if (s < 0) continue;
          const auto su = static_cast<std::size_t>(s);
          const double v = vals[i];
          if (seen[su] && v > last[su] && hl[su] >= mcw) {
            const auto node = static_cast<std::size_t>(frontier[su]);
            const double gr = node_g[node] - gl[su];
            const double hr = node_h[node] - hl[su];
            if (hr >= mcw) {
              const double gain = score(gl[su], hl[su]) + score(gr, hr) - parent_score[su];
              auto& b = best[su];
              const bool tie = b.feature >= 0 && b.feature != j && std::abs(gain - b.gain) <= 1e-12 &&
                               column_key[static_cast<std::size_t>(j)] < column_key[static_cast<std::size_t>(b.feature)];
              if (gain > b.gain + 1e-12 || tie) {
                double thr = last[su] + 0.5 * (v - last[su]);
                if (thr <= last[su]) thr = v;
                best[su] = {gain, j, thr, gl[su], hl[su]};
              }
            }
          }
          gl[su] += gh[2 * r];
          hl[su] += gh[2 * r + 1];
          last[su] = v;
          seen[su] = 1;
        }
      }

      std::vector<int> next;
      for (std::size_t s = 0; s < slots; ++s) {
        if (best[s].feature < 0) continue;
        const auto node = static_cast<std::size_t>(frontier[s]);
        const int left = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes.emplace_back();
        tree.nodes[node].feature = best[s].feature;
        tree.nodes[node].threshold = best[s].threshold;
        tree.nodes[node].left = left;
        tree.nodes[node].right = left + 1;
        node_g.push_back(best[s].g_left);
        node_h.push_back(best[s].h_left);
        node_g.push_back(node_g[node] - best[s].g_left);
        node_h.push_back(node_h[node] - best[s].h_left);
        next.push_back(left);
        next.push_back(left + 1);
      }
      if (next.empty()) break;
      for (int r = 0; r < n; ++r) {
        const auto& nd = tree.nodes[static_cast<std::size_t>(node_of[static_cast<std::size_t>(r)])];
        if (nd.feature >= 0) node_of[static_cast<std::size_t>(r)] = x(r, nd.feature) < nd.threshold ? nd.left : nd.right;
      }
      frontier = std::move(next);
    }

    for (std::size_t id = 0; id < tree.nodes.size(); ++id)
      if (tree.nodes[id].feature < 0)
        tree.nodes[id].value = -params_.learning_rate * node_g[id] / (node_h[id] + lambda);
    for (int r = 0; r < n; ++r) margin(r) += tree.nodes[static_cast<std::size_t>(node_of[static_cast<std::size_t>(r)])].value;
    trees_.push_back(std::move(tree));

    double loss = 0.0;
    if (loss_ == BoostingLoss::Squared) {
      loss = (margin - y).squaredNorm() / n;
    } else {
      for (int i = 0; i < n; ++i) {
        const double z = margin(i);
        // log(1 + e^z) - y z, computed stably
        loss += std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))) - y(i) * z;
      }
      loss /= n;
    }
    loss_history_.push_back(loss);
  }
}

Eigen::VectorXd BoostedTrees::predict_margin(const Eigen::MatrixXd& x) const {
  Eigen::VectorXd out = Eigen::VectorXd::Constant(x.rows(), base_);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Eigen::RowVectorXd row = x.row(r);
    for (const auto& t : trees_) out(r) += t.predict_row(row);
  }
  return out;
}

}  // namespace featurecuts
