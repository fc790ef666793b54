#pragma once

#include <cstdint>
#include <vector>

#include "featurecuts/dataset.hpp"

namespace featurecuts {

/// Hypercube-cluster classification data in the style of the madelon
/// generator: informative features hold Gaussian clusters placed on the
/// vertices of a hypercube, redundant features are random linear
/// combinations of them, the rest is standard-normal noise.
struct ClassificationRecipe {
  Eigen::Index rows = 2000;
  Eigen::Index features = 500;
  int informative = 5;
  int redundant = 15;
  int classes = 2;
  int clusters_per_class = 2;
  double class_sep = 1.0;
  double flip_fraction = 0.01;
  bool shuffle_columns = true;
  std::uint64_t seed = 0;
};

struct SyntheticDataset {
  Dataset data;
  /// Columns carrying signal (informative followed by redundant, after any shuffle).
  std::vector<Eigen::Index> relevant;
};

SyntheticDataset make_classification(const ClassificationRecipe& recipe);

struct RegressionRecipe {
  Eigen::Index rows = 500;
  Eigen::Index features = 50;
  int informative = 5;
  double noise = 0.1;
  bool shuffle_columns = true;
  std::uint64_t seed = 0;
};

/// Linear target on the informative columns plus Gaussian noise.
SyntheticDataset make_regression(const RegressionRecipe& recipe);

}  // namespace featurecuts
