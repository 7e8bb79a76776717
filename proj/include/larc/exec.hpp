#pragma once

#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "larc/concepts.hpp"
#include "larc/dsl.hpp"
#include "larc/params.hpp"
#include "larc/rules.hpp"
#include "larc/scene.hpp"
#include "larc/tape.hpp"

namespace larc {

/// Supplies concept score tensors for one scene. Binary and ternary lookups
/// return nullopt for concepts the source does not know, which lets the
/// executor fall back on composition rules.
class ScoreSource {
 public:
  virtual ~ScoreSource() = default;
  virtual std::size_t size() const = 0;
  virtual ad::Var unary(ad::Tape& tape, std::string_view concept_name) = 0;
  virtual std::optional<ad::Var> binary(ad::Tape& tape, std::string_view concept_name) = 0;
  virtual std::optional<ad::Var> ternary(ad::Tape& tape, std::string_view concept_name) = 0;
};

/// Scores from the learned encoders and embeddings. An unknown unary concept
/// borrows the embedding of a learned member of its synonym group.
class LearnedScores : public ScoreSource {
 public:
  LearnedScores(SceneFeatures& features, const ParamStore& params, const RuleSet* rules = nullptr)
      : features_(features), params_(params), rules_(rules) {}

  std::size_t size() const override { return features_.n; }
  ad::Var unary(ad::Tape& tape, std::string_view concept_name) override;
  std::optional<ad::Var> binary(ad::Tape& tape, std::string_view concept_name) override;
  std::optional<ad::Var> ternary(ad::Tape& tape, std::string_view concept_name) override;

 private:
  SceneFeatures& features_;
  const ParamStore& params_;
  const RuleSet* rules_;
};

/// One-hot scores from ground truth: 0 where the category or relation holds,
/// -penalty elsewhere. Concepts in `withheld` are reported unknown.
class OracleScores : public ScoreSource {
 public:
  static constexpr double kDefaultPenalty = 1e5;

  OracleScores(const Scene& scene, const GeneratorConfig& config,
               std::set<std::string> withheld = {}, double penalty = kDefaultPenalty)
      : scene_(scene), config_(config), withheld_(std::move(withheld)), penalty_(penalty) {}

  std::size_t size() const override { return scene_.size(); }
  ad::Var unary(ad::Tape& tape, std::string_view concept_name) override;
  std::optional<ad::Var> binary(ad::Tape& tape, std::string_view concept_name) override;
  std::optional<ad::Var> ternary(ad::Tape& tape, std::string_view concept_name) override;

 private:
  const Scene& scene_;
  const GeneratorConfig& config_;
  std::set<std::string> withheld_;
  double penalty_;
};

struct TraceStep {
  NodeKind kind = NodeKind::kScene;
  /// Concept as written in the program.
  std::string concept_name;
  bool negated = false;
  /// Concept whose tensor was actually used (antonym or composition target).
  std::string resolved;
  std::vector<ad::Var> inputs;
  ad::Var output;
};

struct RelationUse {
  std::string concept_name;
  int arity = 2;
  ad::Var scores;
  /// Built from a composition rule rather than a learned embedding.
  bool composed = false;
};

struct ExecutionTrace {
  std::size_t n = 0;
  ad::Var final;
  std::vector<double> final_scores;
  std::vector<TraceStep> steps;
  std::vector<RelationUse> relation_uses;
};

/// Executes the program bottom-up, recording every intermediate on `tape`.
ExecutionTrace execute(const Program& program, ScoreSource& scores, const RuleSet& rules,
                       ad::Tape& tape);
ExecutionTrace execute(const Program& program, SceneFeatures& features,
                       const ParamStore& params, const RuleSet& rules, ad::Tape& tape);

/// argmax with the lowest index winning ties.
std::size_t predict(std::span<const double> scores);
std::size_t predict(const ExecutionTrace& trace);

/// Text dump of each step: node, tensor shapes and top-k scores.
std::string dump_trace(const ExecutionTrace& trace, const ad::Tape& tape, std::size_t top_k = 3);

}  // namespace larc
