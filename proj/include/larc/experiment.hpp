#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "larc/data.hpp"
#include "larc/eval.hpp"
#include "larc/learn.hpp"
#include "larc/params.hpp"
#include "larc/rules.hpp"

namespace larc {

struct BenchmarkConfig {
  GeneratorConfig generator;
  std::size_t train_scenes = 500;
  std::size_t eval_scenes = 60;
  std::size_t queries_per_scene = 6;
  double noise_level = 0.0;
  double data_fraction = 1.0;
  bool negated_queries = true;
  /// Every target has a same-category distractor, as in the grounding task.
  QueryOptions query_options{.require_distractor = true};
  Holdout holdout;

  void validate() const;
};

struct Benchmark {
  Dataset train;
  /// Eval scenes with the in-distribution queries.
  Dataset eval;
  /// Eval scenes with the queries that use held-out concepts.
  Dataset heldout;
  /// Train queries removed because they touch a held-out concept.
  std::size_t removed_train = 0;
  /// Train queries dropped by the data fraction.
  std::size_t subsampled_out = 0;
};

/// Deterministic in (config, seed). Scenes and detector noise draws do not
/// depend on noise_level or data_fraction, so sweep points differ only along
/// their axis; smaller fractions keep a subset of larger ones.
Benchmark build_benchmark(const BenchmarkConfig& config, std::uint64_t seed);

struct ExperimentConfig {
  BenchmarkConfig benchmark;
  std::size_t dim = 16;
  InitOptions init;
  TrainConfig train;
  LossWeights weights;
  std::uint64_t seed = 1;
  /// Record eval accuracy and diagnostics every epoch.
  bool track_eval = false;
  EvalOptions eval;

  void validate() const;
};

struct ExperimentResult {
  TrainResult training;
  Metrics eval;
  std::optional<Metrics> heldout;
};

/// Concepts the learner is initialized with: everything in the train
/// programs plus synonym-group members when augmentation is on.
ConceptVocabulary training_vocabulary(const Dataset& train, const RuleSet& rules,
                                      const LossWeights& weights);

ExperimentResult run_experiment(const ExperimentConfig& config, const RuleSet& rules,
                                const EpochCallback& on_epoch = {});
/// Same, over an already built benchmark.
ExperimentResult run_experiment(const ExperimentConfig& config, const RuleSet& rules,
                                const Benchmark& bench, const EpochCallback& on_epoch = {});

struct SweepResult {
  std::string axis;
  std::vector<double> values;
  std::vector<Metrics> points;
};

std::string sweep_csv(const SweepResult& sweep);

SweepResult data_efficiency_sweep(const std::vector<double>& fractions,
                                  const ExperimentConfig& base, const RuleSet& rules);
SweepResult noise_sweep(const std::vector<double>& levels, const ExperimentConfig& base,
                        const RuleSet& rules);

}  // namespace larc
