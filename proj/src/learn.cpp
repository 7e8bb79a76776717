#include "larc/learn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "json.hpp"
#include "larc/error.hpp"
#include "larc/kernels.hpp"
#include "larc/random.hpp"

namespace larc {
namespace {

Program substitute(const Program& p, const std::map<std::string, std::string>& swap) {
  switch (p.kind()) {
    case NodeKind::kScene:
      return p;
    case NodeKind::kFilter: {
      auto it = swap.find(p.name());
      return Program::filter(substitute(p.children()[0], swap),
                             it == swap.end() ? p.name() : it->second);
    }
    case NodeKind::kRelate:
      return Program::relate(substitute(p.children()[0], swap), substitute(p.children()[1], swap),
                             p.name(), p.negated());
    case NodeKind::kRelateTernary:
      return Program::relate_ternary(substitute(p.children()[0], swap),
                                     substitute(p.children()[1], swap),
                                     substitute(p.children()[2], swap), p.name(), p.negated());
  }
  return p;
}

template <typename Item>
std::vector<Item> augment(std::span<const Item> batch, const RuleSet& rules, double p,
                          std::uint64_t seed) {
  std::vector<Item> out(batch.begin(), batch.end());
  if (p <= 0.0 || rules.synonym_groups.empty()) return out;
  Rng rng = make_rng(seed, "synonym-augmentation");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (const Item& item : batch) {
    std::vector<std::string> found;
    visit(item.program, [&](const Program& node) {
      if (node.kind() != NodeKind::kFilter) return;
      const auto* group = rules.synonym_group(node.name());
      if (group && group->size() > 1 &&
          std::find(found.begin(), found.end(), node.name()) == found.end()) {
        found.push_back(node.name());
      }
    });
    if (found.empty()) continue;
    if (coin(rng) >= p) continue;
    std::map<std::string, std::string> swap;
    for (const auto& name : found) {
      std::vector<std::string> others;
      for (const auto& member : *rules.synonym_group(name)) {
        if (member != name) others.push_back(member);
      }
      std::uniform_int_distribution<std::size_t> pick(0, others.size() - 1);
      swap[name] = others[pick(rng)];
    }
    Item copy = item;
    copy.program = substitute(item.program, swap);
    out.push_back(std::move(copy));
  }
  return out;
}

double global_norm(const ad::Gradients& g) {
  double sq = 0.0;
  for (const auto& slot : g) {
    for (double v : slot) sq += v * v;
  }
  return std::sqrt(sq);
}

bool finite(const ad::Gradients& g) {
  for (const auto& slot : g) {
    for (double v : slot) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

struct ItemOutcome {
  ad::Gradients grads;
  LossTerms terms;
  bool correct = false;
  std::string error;
};

std::vector<std::string> diagnostic_concepts(const ParamStore& params, const RuleSet& rules) {
  std::vector<std::string> out;
  for (const auto& key : params.concepts()) {
    if (key.arity == 2 && (rules.is_symmetric(key.name) || rules.is_exclusive(key.name))) {
      out.push_back(key.name);
    }
  }
  return out;
}

constexpr std::size_t kDiagnosticScenes = 20;

}  // namespace

std::vector<GroundingQuery> augment_with_synonyms(std::span<const GroundingQuery> batch,
                                                  const RuleSet& rules, double p,
                                                  std::uint64_t seed) {
  return augment(batch, rules, p, seed);
}

std::vector<TrainingItem> augment_with_synonyms(std::span<const TrainingItem> batch,
                                                const RuleSet& rules, double p,
                                                std::uint64_t seed) {
  return augment(batch, rules, p, seed);
}

void TrainConfig::validate() const {
  if (epochs == 0) fail(ErrorCode::kInvalidConfig, "epochs must be positive");
  if (batch_size == 0) fail(ErrorCode::kInvalidConfig, "batch size must be positive");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    fail(ErrorCode::kInvalidConfig, "learning rate must be positive");
  }
  if (!(momentum >= 0.0 && momentum < 1.0)) {
    fail(ErrorCode::kInvalidConfig, "momentum must lie in [0, 1)");
  }
  if (!(clip_norm >= 0.0)) fail(ErrorCode::kInvalidConfig, "clip norm must be non-negative");
  if (!(data_fraction > 0.0 && data_fraction <= 1.0)) {
    fail(ErrorCode::kInvalidConfig, "data fraction must lie in (0, 1]");
  }
  if (!(noise_level >= 0.0 && noise_level < 1.0)) {
    fail(ErrorCode::kInvalidConfig, "noise level must lie in [0, 1)");
  }
}

RelationDiagnostics relation_diagnostics(std::span<const std::vector<Detection>> scenes,
                                         const ParamStore& params,
                                         const std::vector<std::string>& concepts) {
  RelationDiagnostics out;
  std::map<std::string, std::array<double, 2>> norms;
  std::map<std::string, std::array<std::size_t, 2>> counts;
  for (const auto& scene : scenes) {
    if (scene.size() < 2) continue;
    ad::Tape tape(ad::Tape::Mode::kInference);
    SceneFeatures f = encode_scene(tape, scene, params);
    for (const auto& c : concepts) {
      if (!params.has_concept(c, 2)) continue;
      const Tensor& p = tape.value(binary_scores(tape, f, c, params));
      auto& nm = norms[c];
      auto& ct = counts[c];
      for (std::size_t i = 0; i < f.n; ++i) {
        for (std::size_t j = 0; j < f.n; ++j) {
          if (i == j) continue;
          const double d = p.at(i, j) - p.at(j, i);
          nm[0] += d * d;
          nm[1] += p.at(i, j) * p.at(i, j);
          ct[0] += (p.at(i, j) > 0.0 && p.at(j, i) > 0.0) ? 1 : 0;
          ct[1] += 1;
        }
      }
    }
  }
  for (const auto& [c, nm] : norms) {
    out.asymmetry[c] = nm[1] > 0.0 ? std::sqrt(nm[0]) / std::sqrt(nm[1]) : 0.0;
    const auto& ct = counts[c];
    out.co_positivity[c] = ct[1] ? static_cast<double>(ct[0]) / static_cast<double>(ct[1]) : 0.0;
  }
  return out;
}

std::string metrics_record(const EpochMetrics& m) {
  nlohmann::json j = {{"epoch", m.epoch},
                      {"steps", m.steps},
                      {"loss", m.loss},
                      {"loss_pred", m.prediction},
                      {"loss_sym", m.symmetry},
                      {"loss_excl", m.exclusivity},
                      {"loss_spar", m.sparsity},
                      {"train_acc", m.train_accuracy}};
  j["eval_acc"] = m.eval_accuracy ? nlohmann::json(*m.eval_accuracy) : nlohmann::json(nullptr);
  j["asymmetry"] = m.diagnostics.asymmetry;
  j["co_positivity"] = m.diagnostics.co_positivity;
  return j.dump();
}

LossTerms item_gradient(const std::vector<Detection>& scene, const TrainingItem& item,
                        const ParamStore& params, const RuleSet& rules,
                        const LossWeights& weights, ad::Gradients& grads) {
  ad::Tape tape(ad::Tape::Mode::kTrain);
  SceneFeatures f = encode_scene(tape, scene, params);
  const ExecutionTrace trace = execute(item.program, f, params, rules, tape);
  LossTerms terms = total_loss(tape, trace, item.target, rules, weights);
  if (!std::isfinite(terms.value)) {
    fail(ErrorCode::kNumericFailure, "loss is not finite");
  }
  tape.backward(terms.total, grads);
  return terms;
}

double accuracy(const TrainingSet& data, const ParamStore& params, const RuleSet& rules) {
  if (data.items.empty()) return 0.0;
  const std::size_t count = data.items.size();
  std::vector<char> correct(count, 0);
  const bool par = kernels::policy() == kernels::Policy::kParallel;
#pragma omp parallel for schedule(dynamic, 4) if (par)
  for (std::size_t q = 0; q < count; ++q) {
    const TrainingItem& item = data.items[q];
    try {
      ad::Tape tape(ad::Tape::Mode::kInference);
      SceneFeatures f = encode_scene(tape, data.scenes[item.scene], params);
      correct[q] = predict(execute(item.program, f, params, rules, tape)) == item.target;
    } catch (const Error&) {
      correct[q] = 0;
    }
  }
  const auto hits = std::count(correct.begin(), correct.end(), 1);
  return static_cast<double>(hits) / static_cast<double>(count);
}

TrainResult train(const TrainingSet& data, ParamStore params, const RuleSet& rules,
                  const LossWeights& weights, const TrainConfig& config,
                  const TrainingSet* eval, const EpochCallback& on_epoch) {
  weights.validate();
  config.validate();
  if (data.items.empty()) fail(ErrorCode::kInvalidConfig, "training set is empty");

  TrainResult result;
  ad::Gradients velocity(params.slot_count());
  for (std::size_t s = 0; s < params.slot_count(); ++s) {
    velocity[s].assign(params.tensor(s).size(), 0.0);
  }
  const std::vector<std::string> diag_concepts = diagnostic_concepts(params, rules);
  const bool par = kernels::policy() == kernels::Policy::kParallel;
  std::size_t step = 0;

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::vector<TrainingItem> items = augment_with_synonyms(
        std::span<const TrainingItem>(data.items), rules, weights.synonym_aug_prob,
        derive_seed(config.seed, "augment", epoch));
    Rng shuffle_rng = make_rng(config.seed, "shuffle", epoch);
    std::shuffle(items.begin(), items.end(), shuffle_rng);

    EpochMetrics m;
    m.epoch = epoch;
    std::size_t hits = 0;
    for (std::size_t start = 0; start < items.size(); start += config.batch_size) {
      const std::size_t stop = std::min(items.size(), start + config.batch_size);
      const std::size_t bsz = stop - start;
      std::vector<ItemOutcome> outcomes(bsz);
#pragma omp parallel for schedule(dynamic, 1) if (par)
      for (std::size_t b = 0; b < bsz; ++b) {
        const TrainingItem& item = items[start + b];
        ItemOutcome& o = outcomes[b];
        try {
          ad::Tape tape(ad::Tape::Mode::kTrain);
          SceneFeatures f = encode_scene(tape, data.scenes.at(item.scene), params);
          const ExecutionTrace trace = execute(item.program, f, params, rules, tape);
          o.terms = total_loss(tape, trace, item.target, rules, weights);
          o.correct = predict(trace) == item.target;
          if (!std::isfinite(o.terms.value)) fail(ErrorCode::kNumericFailure, "loss is not finite");
          tape.backward(o.terms.total, o.grads);
        } catch (const Error& e) {
          o.error = e.what();
        }
      }

      // Fixed-order reduction keeps results independent of the worker count.
      ad::Gradients total(params.slot_count());
      for (std::size_t s = 0; s < params.slot_count(); ++s) {
        total[s].assign(params.tensor(s).size(), 0.0);
      }
      for (const ItemOutcome& o : outcomes) {
        if (!o.error.empty()) {
          result.diverged = true;
          result.divergence = "epoch " + std::to_string(epoch) + ": " + o.error;
          break;
        }
        for (std::size_t s = 0; s < o.grads.size(); ++s) {
          for (std::size_t i = 0; i < o.grads[s].size(); ++i) total[s][i] += o.grads[s][i];
        }
        m.loss += o.terms.value;
        m.prediction += o.terms.prediction;
        m.symmetry += o.terms.symmetry;
        m.exclusivity += o.terms.exclusivity;
        m.sparsity += o.terms.sparsity;
        hits += o.correct ? 1 : 0;
      }
      if (result.diverged) break;

      const double inv = 1.0 / static_cast<double>(bsz);
      for (auto& slot : total) {
        for (double& v : slot) v *= inv;
      }
      if (!finite(total)) {
        result.diverged = true;
        result.divergence = "epoch " + std::to_string(epoch) + ": non-finite gradient";
        break;
      }
      double scale = 1.0;
      if (config.clip_norm > 0.0) {
        const double norm = global_norm(total);
        if (norm > config.clip_norm) scale = config.clip_norm / norm;
      }

      ParamStore next = params;
      const double mu = config.optimizer == OptimizerKind::kMomentum ? config.momentum : 0.0;
      for (std::size_t s = 0; s < params.slot_count(); ++s) {
        Tensor& w = next.mutable_tensor(s);
        for (std::size_t i = 0; i < w.size(); ++i) {
          velocity[s][i] = mu * velocity[s][i] + scale * total[s][i];
          w.data[i] -= config.learning_rate * velocity[s][i];
        }
      }
      if (!next.all_finite()) {
        result.diverged = true;
        result.divergence = "epoch " + std::to_string(epoch) + ": parameters became non-finite";
        break;
      }
      params = std::move(next);
      ++step;
    }
    if (result.diverged) break;

    const double count = static_cast<double>(items.size());
    m.steps = step;
    m.loss /= count;
    m.prediction /= count;
    m.symmetry /= count;
    m.exclusivity /= count;
    m.sparsity /= count;
    m.train_accuracy = static_cast<double>(hits) / count;
    if (eval != nullptr && !eval->items.empty()) {
      m.eval_accuracy = accuracy(*eval, params, rules);
      const std::size_t n = std::min(kDiagnosticScenes, eval->scenes.size());
      m.diagnostics = relation_diagnostics(
          std::span<const std::vector<Detection>>(eval->scenes.data(), n), params, diag_concepts);
    }
    if (on_epoch) on_epoch(m);
    result.history.push_back(std::move(m));
  }
  result.params = std::move(params);
  return result;
}

}  // namespace larc
