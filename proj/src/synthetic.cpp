#include "featurecuts/synthetic.hpp"

#include <algorithm>
#include <numeric>

#include "featurecuts/rng.hpp"

namespace featurecuts {
namespace {

std::vector<std::string> column_names(Eigen::Index p) {
  std::vector<std::string> names;
  for (Eigen::Index j = 0; j < p; ++j) names.push_back("f" + std::to_string(j));
  return names;
}

/// Applies a seeded column permutation and maps the relevant set through it.
void shuffle_columns(Eigen::MatrixXd& x, std::vector<Eigen::Index>& relevant, Rng& rng) {
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(x.cols()));
  std::iota(perm.begin(), perm.end(), Eigen::Index{0});
  rng.shuffle(perm.begin(), perm.end());
  // new column perm[j] receives old column j
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) out.col(perm[static_cast<std::size_t>(j)]) = x.col(j);
  x = std::move(out);
  for (auto& r : relevant) r = perm[static_cast<std::size_t>(r)];
  std::ranges::sort(relevant);
}

}  // namespace

SyntheticDataset make_classification(const ClassificationRecipe& r) {
  const Eigen::Index relevant_count = r.informative + r.redundant;
  if (r.informative < 1 || r.redundant < 0 || relevant_count > r.features)
    throw std::invalid_argument("informative + redundant must fit in the feature count");
  if (r.classes < 2 || r.clusters_per_class < 1) throw std::invalid_argument("invalid class layout");
  if ((1LL << std::min(r.informative, 62)) < static_cast<long long>(r.classes) * r.clusters_per_class)
    throw std::invalid_argument("too few informative features for the requested clusters");
  if (r.rows < 2 * r.classes) throw std::invalid_argument("too few rows");

  Rng rng(r.seed);
  const int clusters = r.classes * r.clusters_per_class;

  // Distinct hypercube vertices, scaled to +-class_sep.
  std::vector<long long> vertex_ids;
  while (static_cast<int>(vertex_ids.size()) < clusters) {
    const long long v = static_cast<long long>(rng.below(1ULL << std::min(r.informative, 62)));
    if (std::ranges::find(vertex_ids, v) == vertex_ids.end()) vertex_ids.push_back(v);
  }
  Eigen::MatrixXd centroids(clusters, r.informative);
  for (int c = 0; c < clusters; ++c)
    for (int d = 0; d < r.informative; ++d) centroids(c, d) = ((vertex_ids[c] >> d) & 1 ? 1.0 : -1.0) * r.class_sep;

  Eigen::MatrixXd x(r.rows, r.features);
  Eigen::VectorXd y(r.rows);
  for (Eigen::Index i = 0; i < r.rows; ++i) {
    const int cluster = static_cast<int>(i % clusters);
    y(i) = cluster % r.classes;
  }
  // Each cluster gets its own random linear covariance transform.
  std::vector<Eigen::MatrixXd> transforms;
  for (int c = 0; c < clusters; ++c) {
    Eigen::MatrixXd a(r.informative, r.informative);
    for (Eigen::Index u = 0; u < a.size(); ++u) a(u) = 2.0 * rng.uniform() - 1.0;
    transforms.push_back(a);
  }
  for (Eigen::Index i = 0; i < r.rows; ++i) {
    const int cluster = static_cast<int>(i % clusters);
    Eigen::RowVectorXd z(r.informative);
    for (int d = 0; d < r.informative; ++d) z(d) = rng.normal();
    x.row(i).head(r.informative) = z * transforms[static_cast<std::size_t>(cluster)] + centroids.row(cluster);
  }
  if (r.redundant > 0) {
    Eigen::MatrixXd b(r.informative, r.redundant);
    for (Eigen::Index u = 0; u < b.size(); ++u) b(u) = 2.0 * rng.uniform() - 1.0;
    x.middleCols(r.informative, r.redundant) = x.leftCols(r.informative) * b;
  }
  for (Eigen::Index i = 0; i < r.rows; ++i)
    for (Eigen::Index j = relevant_count; j < r.features; ++j) x(i, j) = rng.normal();
  for (Eigen::Index i = 0; i < r.rows; ++i)
    if (rng.uniform() < r.flip_fraction) y(i) = static_cast<double>(rng.below(static_cast<std::uint64_t>(r.classes)));

  // Shuffle rows so clusters are interleaved randomly.
  std::vector<Eigen::Index> rows(static_cast<std::size_t>(r.rows));
  std::iota(rows.begin(), rows.end(), Eigen::Index{0});
  rng.shuffle(rows.begin(), rows.end());
  Eigen::MatrixXd xs(r.rows, r.features);
  Eigen::VectorXd ys(r.rows);
  for (Eigen::Index i = 0; i < r.rows; ++i) {
    xs.row(i) = x.row(rows[static_cast<std::size_t>(i)]);
    ys(i) = y(rows[static_cast<std::size_t>(i)]);
  }

  std::vector<Eigen::Index> relevant(static_cast<std::size_t>(relevant_count));
  std::iota(relevant.begin(), relevant.end(), Eigen::Index{0});
  if (r.shuffle_columns) shuffle_columns(xs, relevant, rng);

  const auto task = r.classes == 2 ? TaskKind::BinaryClassification : TaskKind::MulticlassClassification;
  return {Dataset(std::move(xs), std::move(ys), column_names(r.features), task, "label"), std::move(relevant)};
}

SyntheticDataset make_regression(const RegressionRecipe& r) {
  if (r.informative < 1 || r.informative > r.features) throw std::invalid_argument("invalid informative count");
  Rng rng(r.seed);
  Eigen::MatrixXd x(r.rows, r.features);
  for (Eigen::Index u = 0; u < x.size(); ++u) x(u) = rng.normal();
  Eigen::VectorXd w(r.informative);
  for (int d = 0; d < r.informative; ++d) w(d) = 1.0 + 2.0 * rng.uniform();
  Eigen::VectorXd y = x.leftCols(r.informative) * w;
  for (Eigen::Index i = 0; i < r.rows; ++i) y(i) += r.noise * rng.normal();
  std::vector<Eigen::Index> relevant(static_cast<std::size_t>(r.informative));
  std::iota(relevant.begin(), relevant.end(), Eigen::Index{0});
  if (r.shuffle_columns) shuffle_columns(x, relevant, rng);
  return {Dataset(std::move(x), std::move(y), column_names(r.features), TaskKind::Regression, "y"), std::move(relevant)};
}

}  // namespace featurecuts
