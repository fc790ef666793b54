#include "featurecuts/pso.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "featurecuts/parallel.hpp"

namespace featurecuts {

std::string to_string(FitnessMode m) { return m == FitnessMode::FsScoreFitness ? "fs" : "model"; }

void PsoConfig::validate() const {
  if (agents < 2) throw std::invalid_argument("PSO needs at least 2 agents");
  if (max_iterations < 1) throw std::invalid_argument("PSO needs at least 1 iteration");
  if (!(v_max > 0.0)) throw std::invalid_argument("v_max must be positive");
  if (fitness_mode == FitnessMode::FsScoreFitness) fs_weights.validate();
}

double transfer_sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

Mask repair_mask(Mask mask, Rng& rng) {
  if (mask.empty()) throw std::invalid_argument("cannot repair a zero-length mask");
  if (std::ranges::find(mask, true) == mask.end()) mask[rng.below(mask.size())] = true;
  return mask;
}

std::vector<Eigen::Index> masked_columns(std::span<const Eigen::Index> candidates, const Mask& mask) {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) out.push_back(candidates[i]);
  return out;
}

namespace {

struct Particle {
  Mask position;
  std::vector<double> velocity;
  Mask best_position;
  double best_fitness = 0.0;
};

}  // namespace

SwarmResult run_binary_pso(std::size_t dimension, const MaskObjective& objective, const PsoConfig& cfg,
                           const PsoObserver& observer) {
  cfg.validate();
  if (dimension == 0) throw std::invalid_argument("PSO needs at least one candidate");

  SwarmResult result;
  std::map<Mask, MaskFitness> memo;
  bool have_best = false;

  // Evaluates every distinct unseen mask of the swarm, in particle order.
  auto evaluate = [&](const std::vector<Particle>& swarm) {
    std::vector<Mask> fresh;
    for (const auto& p : swarm)
      if (!memo.contains(p.position) && std::ranges::find(fresh, p.position) == fresh.end())
        fresh.push_back(p.position);
    std::vector<MaskFitness> values(fresh.size());
    try {
      parallel_for(fresh.size(), [&](std::size_t i) { values[i] = objective(fresh[i]); });
    } catch (const std::exception& e) {
      throw PsoError(std::string("PSO fitness evaluation failed: ") + e.what(), result);
    }
    for (std::size_t i = 0; i < fresh.size(); ++i) memo.emplace(fresh[i], values[i]);
    result.evaluations += fresh.size();
  };

  auto update_global = [&](const std::vector<Particle>& swarm) {
    for (const auto& p : swarm) {
      const auto& f = memo.at(p.position);
      if (!have_best || f.fitness > result.best_fitness) {
        result.best_mask = p.position;
        result.best_fitness = f.fitness;
        result.best_model_score = f.model_score;
        have_best = true;
      }
    }
    result.history.push_back(result.best_fitness);
  };

  const auto agents = static_cast<std::size_t>(cfg.agents);
  std::vector<Particle> swarm(agents);
  for (std::size_t a = 0; a < agents; ++a) {
    Rng rng(derive_seed(cfg.seed, {a, 0}));
    auto& p = swarm[a];
    p.position.resize(dimension);
    for (std::size_t d = 0; d < dimension; ++d) p.position[d] = rng.uniform() < 0.5;
    p.position = repair_mask(std::move(p.position), rng);
    p.velocity.assign(dimension, 0.0);
  }
  evaluate(swarm);
  for (auto& p : swarm) {
    p.best_position = p.position;
    p.best_fitness = memo.at(p.position).fitness;
  }
  update_global(swarm);

  for (int t = 0; t < cfg.max_iterations; ++t) {
    const double w = cfg.max_iterations > 1
                         ? cfg.inertia_start - (cfg.inertia_start - cfg.inertia_end) * t / (cfg.max_iterations - 1)
                         : cfg.inertia_start;
    const Mask global = result.best_mask;
    for (std::size_t a = 0; a < agents; ++a) {
      Rng rng(derive_seed(cfg.seed, {a, static_cast<std::uint64_t>(t) + 1}));
      auto& p = swarm[a];
      for (std::size_t d = 0; d < dimension; ++d) {
        const double x = p.position[d] ? 1.0 : 0.0;
        const double r1 = rng.uniform(), r2 = rng.uniform();
        double v = w * p.velocity[d] + cfg.cognitive * r1 * ((p.best_position[d] ? 1.0 : 0.0) - x) +
                   cfg.social * r2 * ((global[d] ? 1.0 : 0.0) - x);
        v = std::clamp(v, -cfg.v_max, cfg.v_max);
        p.velocity[d] = v;
        p.position[d] = rng.uniform() < transfer_sigmoid(v);
      }
      p.position = repair_mask(std::move(p.position), rng);
    }
    if (observer) {
      std::vector<std::vector<double>> velocities;
      for (const auto& p : swarm) velocities.push_back(p.velocity);
      observer(t, velocities);
    }
    evaluate(swarm);
    for (auto& p : swarm) {
      const double f = memo.at(p.position).fitness;
      if (f > p.best_fitness) {
        p.best_fitness = f;
        p.best_position = p.position;
      }
    }
    update_global(swarm);
  }
  return result;
}

SwarmResult run_pso(std::span<const Eigen::Index> candidates, const Dataset& ds, const FoldAssignment& folds,
                    const EvaluatorSpec& spec, const PsoConfig& cfg) {
  if (candidates.empty()) throw std::invalid_argument("PSO needs at least one candidate feature");
  const auto original = static_cast<std::int64_t>(ds.cols());
  auto objective = [&](const Mask& mask) {
    const auto columns = masked_columns(candidates, mask);
    const double s = cv_score(ds, columns, folds, spec).value;
    if (cfg.fitness_mode == FitnessMode::ModelScoreOnly) return MaskFitness{s, s};
    const auto removed = original - static_cast<std::int64_t>(columns.size());
    return MaskFitness{fs_score_or_zero({s, removed, original, cfg.fs_variant}, cfg.fs_weights), s};
  };
  return run_binary_pso(candidates.size(), objective, cfg);
}

}  // namespace featurecuts
