#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "larc/data.hpp"
#include "larc/dsl.hpp"
#include "larc/params.hpp"
#include "larc/rules.hpp"
#include "larc/scene.hpp"

namespace larc {

struct QueryFailure {
  std::size_t index = 0;
  std::string reason;
};

struct Metrics {
  std::size_t total = 0;
  std::size_t correct = 0;
  double overall_acc = 0.0;
  /// Absent when no query uses a concept of that class.
  std::optional<double> symmetric_subset_acc;
  std::optional<double> exclusive_subset_acc;
  std::size_t symmetric_total = 0;
  std::size_t exclusive_total = 0;
  /// Keyed by relation concept ("not r" for negated uses).
  std::map<std::string, double> per_concept_acc;
  std::map<std::string, double> asymmetry_ratio;
  std::map<std::string, double> co_positivity;
  /// Expected accuracy of a uniform guess, mean of 1/N over queries.
  double chance = 0.0;
  /// Standard deviation of the accuracy of a uniform guesser.
  double chance_sigma = 0.0;
  std::vector<QueryFailure> failures;
  std::vector<std::string> warnings;
};

std::string metrics_json(const Metrics& m);

struct EvalOptions {
  bool diagnostics = true;
  std::size_t diagnostic_scenes = 60;
};

/// Accuracy of predict(execute(...)) against the target detection.
/// Unresolvable concepts count as failures with a reason; they do not throw.
Metrics evaluate(const TrainingSet& data, const ParamStore& params, const RuleSet& rules,
                 const EvalOptions& options = {});

/// Same protocol with one-hot ground-truth scores on the source scenes.
Metrics evaluate_oracle(const Dataset& data, const GeneratorConfig& generator,
                        const RuleSet& rules, const std::set<std::string>& withheld = {});

/// Concepts and negations kept out of training.
struct Holdout {
  std::set<std::string> concepts;
  bool negations = false;

  bool empty() const { return concepts.empty() && !negations; }
  bool covers(const Program& program) const;
  /// Comma-separated list; "not" stands for every negated relation.
  static Holdout parse(std::string_view text);
  std::string to_string() const;
};

/// Evaluates queries over held-out concepts. Throws kInvalidConfig if a
/// held-out concept has a learned embedding.
Metrics zero_shot_eval(const TrainingSet& data, const ParamStore& params, const RuleSet& rules,
                       const Holdout& holdout);

/// The same queries for a learner without rules: unseen concepts and each
/// negated relation ("not r" as its own symbol "not_r") get fresh, untrained
/// embeddings.
Metrics no_rules_eval(const TrainingSet& data, ParamStore params, std::uint64_t seed);

/// Inference-only accuracy on queries generated from `templates` over the
/// given scenes.
Metrics transfer_eval(const ParamStore& params, const RuleSet& rules,
                      std::span<const DetectedScene> scenes,
                      std::span<const TemplateSpec> templates, const GeneratorConfig& generator,
                      std::uint64_t seed, std::size_t queries_per_scene = 4,
                      const QueryOptions& options = {});

/// Per-concept relation matrices on one scene as text grids.
std::string emit_matrices(const std::vector<Detection>& scene, const ParamStore& params);

}  // namespace larc
