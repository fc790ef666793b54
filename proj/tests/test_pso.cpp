#include <doctest.h>

#include <map>
#include <mutex>

#include "featurecuts/pso.hpp"
#include "featurecuts/rng.hpp"

using namespace featurecuts;

namespace {

std::size_t popcount(const Mask& m) { return static_cast<std::size_t>(std::ranges::count(m, true)); }

// Rewards masks close to a target pattern; cheap enough for many swarms.
MaskObjective hamming_objective(Mask target) {
  return [target](const Mask& m) {
    double same = 0;
    for (std::size_t i = 0; i < m.size(); ++i) same += m[i] == target[i];
    return MaskFitness{same / static_cast<double>(m.size()), same};
  };
}

}  // namespace

TEST_CASE("transfer function") {
  CHECK(transfer_sigmoid(0.0) == 0.5);
  CHECK(transfer_sigmoid(6.0) == doctest::Approx(0.9975273768433653).epsilon(1e-12));
  for (double v = -8; v <= 8; v += 0.25) {
    CHECK(transfer_sigmoid(v) + transfer_sigmoid(-v) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(transfer_sigmoid(v) > 0.0);
    CHECK(transfer_sigmoid(v) < 1.0);
  }
}

TEST_CASE("mask repair") {
  Rng rng(1);
  const Mask m{false, true, false};
  CHECK(repair_mask(m, rng) == m);
  const Mask empty(10, false);
  CHECK(popcount(repair_mask(empty, rng)) == 1);
  Rng a(42), b(42);
  CHECK(repair_mask(empty, a) == repair_mask(empty, b));
}

TEST_CASE("configuration validation") {
  PsoConfig cfg;
  cfg.agents = 1;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.max_iterations = 0;
  CHECK_THROWS(cfg.validate());
  cfg = {};
  cfg.v_max = 0;
  CHECK_THROWS(cfg.validate());
  CHECK_NOTHROW(PsoConfig{}.validate());
}

TEST_CASE("swarm mechanics on a synthetic objective") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t dim = 5 + rng.below(30);
    Mask target(dim);
    for (std::size_t i = 0; i < dim; ++i) target[i] = rng.uniform() < 0.4;
    PsoConfig cfg;
    cfg.agents = 2 + static_cast<int>(rng.below(15));
    cfg.max_iterations = 1 + static_cast<int>(rng.below(40));
    cfg.seed = rng.below(1000);

    std::mutex mu;
    std::map<Mask, int> calls;
    auto base = hamming_objective(target);
    auto objective = [&](const Mask& m) {
      {
        std::lock_guard lock(mu);
        ++calls[m];
      }
      return base(m);
    };
    double max_speed = 0;
    int observed = 0;
    const auto r = run_binary_pso(dim, objective, cfg, [&](int, const std::vector<std::vector<double>>& v) {
      ++observed;
      CHECK(v.size() == static_cast<std::size_t>(cfg.agents));
      for (const auto& particle : v)
        for (double x : particle) max_speed = std::max(max_speed, std::abs(x));
    });

    CHECK(observed == cfg.max_iterations);
    CHECK(max_speed <= cfg.v_max);
    REQUIRE(r.history.size() == static_cast<std::size_t>(cfg.max_iterations + 1));
    for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] >= r.history[i - 1]);
    CHECK(r.history.back() == r.best_fitness);
    CHECK(popcount(r.best_mask) >= 1);
    CHECK(base(r.best_mask).fitness == r.best_fitness);
    CHECK(r.evaluations == calls.size());
    CHECK(r.evaluations <= static_cast<std::uint64_t>(cfg.agents * (cfg.max_iterations + 1)));
    for (const auto& [mask, n] : calls) {
      CHECK(n == 1);
      CHECK(popcount(mask) >= 1);
    }

    const auto again = run_binary_pso(dim, base, cfg);
    CHECK(again.best_mask == r.best_mask);
    CHECK(again.history == r.history);
  }
}

TEST_CASE("a single candidate is always selected") {
  const auto r = run_binary_pso(1, [](const Mask&) { return MaskFitness{0.5, 0.5}; }, {.max_iterations = 1});
  CHECK(r.best_mask == Mask{true});
}

TEST_CASE("evaluator failure keeps the best so far") {
  int calls = 0;
  try {
    run_binary_pso(
        8,
        [&](const Mask& m) -> MaskFitness {
          if (++calls > 25) throw EvaluatorError("offline");
          return {static_cast<double>(popcount(m)), 0};
        },
        {.agents = 10, .max_iterations = 10});
    FAIL("expected PsoError");
  } catch (const PsoError& e) {
    CHECK(popcount(e.partial().best_mask) >= 1);
    CHECK(e.partial().best_fitness >= 1.0);
  }
}

TEST_CASE("feature-selection PSO") {
  // Five informative columns (every tenth) add up to the class rule; the
  // other 45 are pure noise, so every informative column matters.
  Rng rng(1);
  Eigen::MatrixXd x(300, 50);
  Eigen::VectorXd y(300);
  std::vector<std::string> names;
  for (int j = 0; j < 50; ++j) names.push_back("f" + std::to_string(j));
  for (int i = 0; i < 300; ++i) {
    double sum = 0;
    for (int j = 0; j < 50; ++j) {
      x(i, j) = rng.normal();
      if (j % 10 == 0) sum += x(i, j);
    }
    y(i) = sum + 0.3 * rng.normal() > 0 ? 1 : 0;
  }
  const struct {
    Dataset data;
    std::vector<Eigen::Index> relevant;
  } s{Dataset(x, y, names, TaskKind::BinaryClassification), {0, 10, 20, 30, 40}};
  const auto folds = make_splits(s.data, {0.2, 5, 1});
  EvaluatorSpec spec;
  spec.boosting.rounds = 30;
  std::vector<Eigen::Index> candidates(50);
  std::iota(candidates.begin(), candidates.end(), Eigen::Index{0});

  SUBCASE("model-score fitness finds the informative features") {
    PsoConfig cfg;
    cfg.seed = 1;
    const auto r = run_pso(candidates, s.data, folds, spec, cfg);
    const auto chosen = masked_columns(candidates, r.best_mask);
    int found = 0;
    for (auto c : s.relevant) found += std::ranges::find(chosen, c) != chosen.end();
    CHECK(found >= 4);
    const double all = cv_score(s.data, candidates, folds, spec).value;
    CHECK(r.best_fitness >= all - 0.03);
    CHECK(r.best_fitness == cv_score(s.data, chosen, folds, spec).value);
    CHECK(r.best_model_score == r.best_fitness);
  }
  SUBCASE("FS-score fitness uses the full feature count") {
    PsoConfig cfg;
    cfg.agents = 6;
    cfg.max_iterations = 4;
    cfg.fitness_mode = FitnessMode::FsScoreFitness;
    const std::vector<Eigen::Index> subset_candidates(candidates.begin(), candidates.begin() + 20);
    const auto r = run_pso(subset_candidates, s.data, folds, spec, cfg);
    const auto chosen = masked_columns(subset_candidates, r.best_mask);
    const double model = cv_score(s.data, chosen, folds, spec).value;
    const auto kept = static_cast<std::int64_t>(chosen.size());
    CHECK(r.best_model_score == model);
    CHECK(r.best_fitness == fs_score({model, 50 - kept, 50}, cfg.fs_weights));
  }
  SUBCASE("empty candidate list") {
    CHECK_THROWS(run_pso({}, s.data, folds, spec, PsoConfig{}));
  }
}
