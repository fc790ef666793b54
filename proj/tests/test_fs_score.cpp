#include <doctest.h>

#include <atomic>
#include <thread>

#include "featurecuts/filter_rank.hpp"
#include "featurecuts/fs_score.hpp"
#include "featurecuts/synthetic.hpp"
#include "oracles.hpp"

using namespace featurecuts;

TEST_CASE("fs_score examples") {
  CHECK(fs_score({0.5, 50, 100}, {1, 1}) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(fs_score({1.0, 50, 100}, {50, 1}) == doctest::Approx(51.0 / 52.0).epsilon(1e-12));
  CHECK(fs_score({0.8, 0, 100, FsVariant::RetainedFraction}, {50, 1}) == doctest::Approx(51.0 / 63.5).epsilon(1e-12));
  CHECK(fs_score({0.9, 0, 10}) == 0.0);
}

TEST_CASE("fs_score errors") {
  CHECK_THROWS(fs_score({0.0, 1, 10}));
  CHECK_THROWS(fs_score({-0.2, 1, 10}));
  CHECK_THROWS(fs_score({0.5, 10, 10}));
  CHECK_THROWS(fs_score({0.5, -1, 10}));
  CHECK_THROWS(fs_score({0.5, 1, 10}, {0, 1}));
  CHECK_THROWS(fs_score({0.5, 1, 10}, {1, -1}));
  CHECK(fs_score_or_zero({-0.3, 4, 10}, {}) == 0.0);
}

TEST_CASE("fs_score matches the harmonic mean written out") {
  for (auto variant : {FsVariant::RemovedFraction, FsVariant::RetainedFraction})
    for (double s = 0.05; s <= 1.0; s += 0.05)
      for (int fr = 0; fr < 40; ++fr) {
        const double frac = fr / 40.0;
        const double term = variant == FsVariant::RemovedFraction ? frac : 1.0 - frac;
        CHECK(std::abs(fs_score({s, fr, 40, variant}, {50, 1}) - oracle::harmonic_fs(s, term, 50, 1)) <= 1e-12);
      }
}

TEST_CASE("fs_score monotonicity and bounds") {
  const std::int64_t fb = 60;
  for (double s = 0.02; s <= 1.0; s += 0.02) {
    for (std::int64_t fr = 1; fr + 1 < fb; ++fr) {
      CHECK(fs_score({s, fr + 1, fb}) > fs_score({s, fr, fb}));
      CHECK(fs_score({s, fr + 1, fb, FsVariant::RetainedFraction}) < fs_score({s, fr, fb, FsVariant::RetainedFraction}));
    }
    for (std::int64_t fr = 0; fr < fb; ++fr) {
      for (auto v : {FsVariant::RemovedFraction, FsVariant::RetainedFraction}) {
        const double f = fs_score({s, fr, fb, v});
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
        if (s + 0.02 <= 1.0 && (v == FsVariant::RetainedFraction || fr > 0))
          CHECK(fs_score({s + 0.02, fr, fb, v}) > f);
      }
      if (fr > 0) CHECK(std::abs(fs_score({s, fr, fb}, {5000, 1}) - s) <= 0.02);
    }
  }
}

TEST_CASE("FssCache memoizes") {
  FssCache cache;
  int calls = 0;
  auto eval = [&] {
    ++calls;
    return FssEntry{0.7, {}};
  };
  CHECK(cache.get_or_compute("ctx", 3, eval).fss == 0.7);
  CHECK(cache.get_or_compute("ctx", 3, eval).fss == 0.7);
  CHECK(calls == 1);
  CHECK(cache.evaluator_calls() == 1);
  cache.get_or_compute("other", 3, eval);
  CHECK(calls == 2);
  CHECK(cache.find("ctx", 3).has_value());
  CHECK_FALSE(cache.find("ctx", 4).has_value());
}

TEST_CASE("FssCache retries once and does not cache failures") {
  FssCache cache;
  int calls = 0;
  SUBCASE("transient failure") {
    auto flaky = [&]() -> FssEntry {
      if (++calls == 1) throw EvaluatorError("transient");
      return {0.4, {}};
    };
    CHECK(cache.get_or_compute("c", 1, flaky).fss == 0.4);
    CHECK(calls == 2);
  }
  SUBCASE("persistent failure") {
    auto broken = [&]() -> FssEntry {
      ++calls;
      throw EvaluatorError("broken");
    };
    CHECK_THROWS_AS(cache.get_or_compute("c", 1, broken), EvaluatorError);
    CHECK(calls == 2);
    CHECK(cache.size() == 0);
    CHECK(cache.get_or_compute("c", 1, [] { return FssEntry{0.1, {}}; }).fss == 0.1);
  }
}

TEST_CASE("FssCache single flight") {
  FssCache cache;
  std::atomic<int> calls{0};
  std::vector<std::thread> threads;
  std::vector<double> seen(8);
  for (int t = 0; t < 8; ++t)
    threads.emplace_back([&, t] {
      seen[static_cast<std::size_t>(t)] = cache
                                              .get_or_compute("c", 9,
                                                              [&] {
                                                                ++calls;
                                                                std::this_thread::sleep_for(std::chrono::milliseconds(50));
                                                                return FssEntry{0.25, {}};
                                                              })
                                              .fss;
    });
  for (auto& th : threads) th.join();
  CHECK(calls == 1);
  for (double v : seen) CHECK(v == 0.25);
}

TEST_CASE("fss_of_cutoff composes ranking, CV, and the score") {
  auto s = make_classification({.rows = 200, .features = 12, .informative = 3, .redundant = 0, .seed = 6});
  const auto folds = make_splits(s.data, {0.2, 5, 2});
  const auto ranking = rank_features(take_rows(s.data, folds.train_rows), FilterMetric::FValueClassif);
  EvaluatorSpec spec;
  spec.boosting.rounds = 20;
  FssCache cache;
  const FsWeights w;

  const auto e = fss_of_cutoff(4, ranking, s.data, folds, spec, w, FsVariant::RemovedFraction, cache);
  const auto cols = ranking.top(4);
  const auto model = cv_score(s.data, cols, folds, spec);
  CHECK(e.model.value == model.value);
  CHECK(e.fss == doctest::Approx(oracle::harmonic_fs(model.value, 8.0 / 12.0, 50, 1)).epsilon(1e-12));

  const auto calls = cache.evaluator_calls();
  CHECK(fss_of_cutoff(4, ranking, s.data, folds, spec, w, FsVariant::RemovedFraction, cache).fss == e.fss);
  CHECK(cache.evaluator_calls() == calls);

  CHECK(fss_of_cutoff(12, ranking, s.data, folds, spec, w, FsVariant::RemovedFraction, cache).fss == 0.0);
  CHECK_THROWS(fss_of_cutoff(0, ranking, s.data, folds, spec, w, FsVariant::RemovedFraction, cache));
  CHECK_THROWS(fss_of_cutoff(13, ranking, s.data, folds, spec, w, FsVariant::RemovedFraction, cache));

  // A different evaluator configuration must not reuse cached values.
  EvaluatorSpec other = spec;
  other.boosting.rounds = 21;
  CHECK(fss_context(ranking, folds, spec, w, FsVariant::RemovedFraction) !=
        fss_context(ranking, folds, other, w, FsVariant::RemovedFraction));
}

TEST_CASE("fs variant names") {
  CHECK(parse_fs_variant("removed") == FsVariant::RemovedFraction);
  CHECK(parse_fs_variant("retained") == FsVariant::RetainedFraction);
  CHECK_THROWS(parse_fs_variant("kept"));
}
