#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "larc/data.hpp"
#include "larc/exec.hpp"
#include "larc/params.hpp"
#include "larc/rules.hpp"
#include "larc/tape.hpp"

namespace larc {

// Plain-value loss functions. The tape ops compute the same quantities; these
// exist for reporting and as a cross-check.

/// -log softmax(scores)[answer].
double prediction_loss(std::span<const double> scores, std::size_t answer);
/// sum over valid i != j of (p[i,j] - p[j,i])^2.
double symmetry_loss(const Tensor& p);
/// sum over valid i != j of relu(p[i,j]) * relu(p[j,i]).
double exclusivity_loss(const Tensor& p);
/// sum of |t| over valid slots, any arity.
double sparsity_loss(const Tensor& t);

struct LossWeights {
  double alpha = 0.003;  // symmetry
  double beta = 0.003;   // exclusivity
  double gamma = 0.001;  // sparsity
  double synonym_aug_prob = 0.5;

  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

struct LossTerms {
  ad::Var total;
  double prediction = 0.0;
  double symmetry = 0.0;
  double exclusivity = 0.0;
  double sparsity = 0.0;
  double value = 0.0;
};

/// L_pred + alpha * sum L_sym + beta * sum L_excl + gamma * sum L_spar over
/// the relation tensors recorded in the trace.
LossTerms total_loss(ad::Tape& tape, const ExecutionTrace& trace, std::size_t answer,
                     const RuleSet& rules, const LossWeights& weights);

/// Appends, with probability p per query, a copy whose synonym-group concepts
/// are replaced by another member of their group.
std::vector<GroundingQuery> augment_with_synonyms(std::span<const GroundingQuery> batch,
                                                  const RuleSet& rules, double p,
                                                  std::uint64_t seed);
std::vector<TrainingItem> augment_with_synonyms(std::span<const TrainingItem> batch,
                                                const RuleSet& rules, double p,
                                                std::uint64_t seed);

enum class OptimizerKind { kSgd, kMomentum };

struct TrainConfig {
  std::size_t epochs = 30;
  std::size_t batch_size = 16;
  double learning_rate = 0.05;
  OptimizerKind optimizer = OptimizerKind::kMomentum;
  double momentum = 0.9;
  /// Global gradient norm cap per step; 0 disables clipping.
  double clip_norm = 5.0;
  std::uint64_t seed = 0;
  /// Recorded for provenance; the data itself is prepared by the caller.
  double noise_level = 0.0;
  double data_fraction = 1.0;

  void validate() const;
};

/// Relation-structure diagnostics of the learned tensors on a set of scenes.
struct RelationDiagnostics {
  /// ||P - P^T|| / ||P|| pooled over scenes, per concept.
  std::map<std::string, double> asymmetry;
  /// Fraction of valid (i, j) with P[i,j] > 0 and P[j,i] > 0, per concept.
  std::map<std::string, double> co_positivity;
};

RelationDiagnostics relation_diagnostics(std::span<const std::vector<Detection>> scenes,
                                         const ParamStore& params,
                                         const std::vector<std::string>& concepts);

struct EpochMetrics {
  std::size_t epoch = 0;
  std::size_t steps = 0;
  double loss = 0.0;
  double prediction = 0.0;
  double symmetry = 0.0;
  double exclusivity = 0.0;
  double sparsity = 0.0;
  double train_accuracy = 0.0;
  std::optional<double> eval_accuracy;
  RelationDiagnostics diagnostics;
};

std::string metrics_record(const EpochMetrics& m);

struct TrainResult {
  ParamStore params;
  std::vector<EpochMetrics> history;
  bool diverged = false;
  std::string divergence;
};

using EpochCallback = std::function<void(const EpochMetrics&)>;

/// Gradient (and loss) of one supervised item, accumulated into `grads`.
LossTerms item_gradient(const std::vector<Detection>& scene, const TrainingItem& item,
                        const ParamStore& params, const RuleSet& rules,
                        const LossWeights& weights, ad::Gradients& grads);

/// Mini-batch gradient descent on total_loss. Reads only detections, programs
/// and target indices. On a non-finite loss or gradient it stops and returns
/// the last finite parameters with `diverged` set.
TrainResult train(const TrainingSet& data, ParamStore params, const RuleSet& rules,
                  const LossWeights& weights, const TrainConfig& config,
                  const TrainingSet* eval = nullptr, const EpochCallback& on_epoch = {});

/// Fraction of items whose prediction equals the target.
double accuracy(const TrainingSet& data, const ParamStore& params, const RuleSet& rules);

}  // namespace larc
