#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "featurecuts/dataset.hpp"
#include "featurecuts/evaluator.hpp"
#include "featurecuts/fs_score.hpp"
#include "featurecuts/rng.hpp"

namespace featurecuts {

enum class FitnessMode { FsScoreFitness, ModelScoreOnly };

std::string to_string(FitnessMode m);

struct PsoConfig {
  int agents = 20;
  int max_iterations = 50;
  double inertia_start = 0.9;
  double inertia_end = 0.4;
  double cognitive = 2.0;
  double social = 2.0;
  double v_max = 6.0;
  std::uint64_t seed = 0;
  FitnessMode fitness_mode = FitnessMode::ModelScoreOnly;
  FsWeights fs_weights;  // FsScoreFitness only
  FsVariant fs_variant = FsVariant::RemovedFraction;

  void validate() const;
};

using Mask = std::vector<bool>;

struct SwarmResult {
  Mask best_mask;
  double best_fitness = 0.0;
  double best_model_score = 0.0;
  std::vector<double> history;  // global best after init, then after each iteration
  std::uint64_t evaluations = 0;
};

/// Fitness and model score of one candidate mask.
struct MaskFitness {
  double fitness = 0.0;
  double model_score = 0.0;
};

using MaskObjective = std::function<MaskFitness(const Mask&)>;

/// Called after every velocity update with the velocities of all particles.
using PsoObserver = std::function<void(int iteration, const std::vector<std::vector<double>>& velocities)>;

class PsoError : public Error {
 public:
  PsoError(const std::string& what, SwarmResult partial) : Error(what), partial_(std::move(partial)) {}
  const SwarmResult& partial() const { return partial_; }

 private:
  SwarmResult partial_;
};

double transfer_sigmoid(double v);

/// Sets one uniformly chosen bit of an empty mask; non-empty masks pass through.
Mask repair_mask(Mask mask, Rng& rng);

/// Binary PSO over masks of `dimension` bits against an arbitrary objective.
/// Each particle draws from its own stream per iteration, so fitness
/// evaluations can run concurrently without changing the trajectory.
SwarmResult run_binary_pso(std::size_t dimension, const MaskObjective& objective, const PsoConfig& cfg,
                           const PsoObserver& observer = {});

/// Feature-selection PSO over `candidates` (column indices of ds). Fitness is
/// the CV score of the masked subset, or its FS-score against the full
/// feature count of ds.
SwarmResult run_pso(std::span<const Eigen::Index> candidates, const Dataset& ds, const FoldAssignment& folds,
                    const EvaluatorSpec& spec, const PsoConfig& cfg);

std::vector<Eigen::Index> masked_columns(std::span<const Eigen::Index> candidates, const Mask& mask);

}  // namespace featurecuts
