#include "larc/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "larc/error.hpp"
#include "larc/random.hpp"

namespace larc {
namespace {

std::vector<TemplateSpec> benchmark_templates(const BenchmarkConfig& config) {
  std::vector<TemplateSpec> out = default_templates();
  if (config.negated_queries) {
    const auto neg = negated_templates();
    out.insert(out.end(), neg.begin(), neg.end());
  }
  return out;
}

std::vector<DetectedScene> make_scenes(const BenchmarkConfig& config, std::uint64_t seed,
                                       std::string_view split, std::size_t count) {
  std::vector<DetectedScene> out;
  out.reserve(count);
  for (std::size_t s = 0; s < count; ++s) {
    const Scene scene = generate_scene(config.generator, derive_seed(seed, split, s));
    out.push_back(apply_detector_noise(scene, config.noise_level,
                                       derive_seed(seed, std::string(split) + "-noise", s),
                                       config.generator.noise));
  }
  return out;
}

void check_sweep_axis(const std::vector<double>& values, const char* what) {
  if (values.empty()) fail(ErrorCode::kInvalidConfig, std::string(what) + " sweep has no points");
  for (std::size_t i = 1; i < values.size(); ++i) {
    if (!(values[i] > values[i - 1])) {
      fail(ErrorCode::kInvalidConfig, std::string(what) + " sweep axis must be strictly increasing");
    }
  }
}

}  // namespace

void BenchmarkConfig::validate() const {
  generator.validate();
  if (train_scenes == 0) fail(ErrorCode::kInvalidConfig, "need at least one training scene");
  if (queries_per_scene == 0) fail(ErrorCode::kInvalidConfig, "queries per scene must be positive");
  if (!(noise_level >= 0.0 && noise_level < 1.0)) {
    fail(ErrorCode::kInvalidConfig, "noise level must lie in [0, 1)");
  }
  if (!(data_fraction > 0.0 && data_fraction <= 1.0)) {
    fail(ErrorCode::kInvalidConfig, "data fraction must lie in (0, 1]");
  }
}

Benchmark build_benchmark(const BenchmarkConfig& config, std::uint64_t seed) {
  config.validate();
  const std::vector<TemplateSpec> templates = benchmark_templates(config);
  Benchmark b;

  b.train.scenes = make_scenes(config, seed, "train-scene", config.train_scenes);
  std::vector<GroundingQuery> pool =
      generate_queries(b.train.scenes, templates, config.generator, derive_seed(seed, "train-queries"),
                       config.queries_per_scene, config.query_options);
  std::vector<GroundingQuery> kept;
  for (auto& q : pool) {
    if (config.holdout.covers(q.program)) {
      ++b.removed_train;
    } else {
      kept.push_back(std::move(q));
    }
  }
  if (config.data_fraction < 1.0) {
    std::vector<std::size_t> order(kept.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng = make_rng(seed, "data-fraction");
    std::shuffle(order.begin(), order.end(), rng);
    const auto take = static_cast<std::size_t>(
        std::ceil(config.data_fraction * static_cast<double>(kept.size())));
    order.resize(std::max<std::size_t>(1, std::min(take, kept.size())));
    std::sort(order.begin(), order.end());
    std::vector<GroundingQuery> sub;
    for (std::size_t i : order) sub.push_back(kept[i]);
    b.subsampled_out = kept.size() - sub.size();
    kept = std::move(sub);
  }
  b.train.queries = std::move(kept);

  b.eval.scenes = make_scenes(config, seed, "eval-scene", config.eval_scenes);
  b.heldout.scenes = b.eval.scenes;
  for (auto& q : generate_queries(b.eval.scenes, templates, config.generator,
                                  derive_seed(seed, "eval-queries"), config.queries_per_scene,
                                  config.query_options)) {
    (config.holdout.covers(q.program) ? b.heldout : b.eval).queries.push_back(std::move(q));
  }
  return b;
}

void ExperimentConfig::validate() const {
  benchmark.validate();
  train.validate();
  weights.validate();
  if (dim == 0) fail(ErrorCode::kInvalidConfig, "embedding dimension must be >= 1");
  if (eval.diagnostics && eval.diagnostic_scenes == 0) {
    fail(ErrorCode::kInvalidConfig, "diagnostic_scenes must be >= 1");
  }
}

ConceptVocabulary training_vocabulary(const Dataset& train, const RuleSet& rules,
                                      const LossWeights& weights) {
  std::vector<Program> programs;
  programs.reserve(train.queries.size());
  for (const auto& q : train.queries) programs.push_back(q.program);
  ConceptVocabulary vocab = extract_concepts(programs);
  if (weights.synonym_aug_prob > 0.0) {
    const std::set<std::string> seen = vocab.unary;
    for (const auto& group : rules.synonym_groups) {
      const bool used = std::any_of(group.begin(), group.end(),
                                    [&](const std::string& c) { return seen.contains(c); });
      if (used) vocab.unary.insert(group.begin(), group.end());
    }
  }
  return vocab;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RuleSet& rules,
                                const Benchmark& bench, const EpochCallback& on_epoch) {
  config.validate();
  const TrainingSet train_set = make_training_set(bench.train);
  const TrainingSet eval_set = make_training_set(bench.eval);

  InitOptions init = config.init;
  init.attr_dim = config.benchmark.generator.attribute_dim();
  ParamStore params = init_params(training_vocabulary(bench.train, rules, config.weights),
                                  config.dim, derive_seed(config.seed, "init"), init);
  TrainConfig tc = config.train;
  tc.seed = derive_seed(config.seed, "train");
  tc.noise_level = config.benchmark.noise_level;
  tc.data_fraction = config.benchmark.data_fraction;

  ExperimentResult r;
  r.training = train(train_set, std::move(params), rules, config.weights, tc,
                     config.track_eval ? &eval_set : nullptr, on_epoch);
  r.eval = evaluate(eval_set, r.training.params, rules, config.eval);
  if (!bench.heldout.queries.empty()) {
    r.heldout = zero_shot_eval(make_training_set(bench.heldout), r.training.params, rules,
                               config.benchmark.holdout);
  }
  return r;
}

ExperimentResult run_experiment(const ExperimentConfig& config, const RuleSet& rules,
                                const EpochCallback& on_epoch) {
  return run_experiment(config, rules, build_benchmark(config.benchmark, config.seed), on_epoch);
}

std::string sweep_csv(const SweepResult& sweep) {
  std::ostringstream out;
  out << std::setprecision(10);
  out << sweep.axis
      << ",total,correct,overall_acc,symmetric_subset_acc,exclusive_subset_acc,chance\n";
  for (std::size_t i = 0; i < sweep.points.size(); ++i) {
    const Metrics& m = sweep.points[i];
    out << sweep.values[i] << ',' << m.total << ',' << m.correct << ',' << m.overall_acc << ',';
    if (m.symmetric_subset_acc) out << *m.symmetric_subset_acc;
    out << ',';
    if (m.exclusive_subset_acc) out << *m.exclusive_subset_acc;
    out << ',' << m.chance << '\n';
  }
  return out.str();
}

SweepResult data_efficiency_sweep(const std::vector<double>& fractions,
                                  const ExperimentConfig& base, const RuleSet& rules) {
  check_sweep_axis(fractions, "data-fraction");
  SweepResult sweep{"data_fraction", fractions, {}};
  for (double f : fractions) {
    ExperimentConfig c = base;
    c.benchmark.data_fraction = f;
    sweep.points.push_back(run_experiment(c, rules).eval);
  }
  return sweep;
}

SweepResult noise_sweep(const std::vector<double>& levels, const ExperimentConfig& base,
                        const RuleSet& rules) {
  check_sweep_axis(levels, "noise");
  SweepResult sweep{"noise_level", levels, {}};
  for (double level : levels) {
    ExperimentConfig c = base;
    c.benchmark.noise_level = level;
    sweep.points.push_back(run_experiment(c, rules).eval);
  }
  return sweep;
}

}  // namespace larc
