#include "larc/exec.hpp"

#include <algorithm>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "larc/error.hpp"

namespace larc {

ad::Var LearnedScores::unary(ad::Tape& tape, std::string_view name) {
  if (!params_.has_concept(name, 1) && rules_ != nullptr) {
    if (const auto* group = rules_->synonym_group(name)) {
      for (const auto& other : *group) {
        if (params_.has_concept(other, 1)) return unary_scores(tape, features_, other, params_);
      }
    }
  }
  return unary_scores(tape, features_, name, params_);
}

std::optional<ad::Var> LearnedScores::binary(ad::Tape& tape, std::string_view name) {
  if (!params_.has_concept(name, 2)) return std::nullopt;
  return binary_scores(tape, features_, name, params_);
}

std::optional<ad::Var> LearnedScores::ternary(ad::Tape& tape, std::string_view name) {
  if (!params_.has_concept(name, 3)) return std::nullopt;
  return ternary_scores(tape, features_, name, params_);
}

ad::Var OracleScores::unary(ad::Tape& tape, std::string_view name) {
  const std::string category = canonical_category(config_, name);
  Tensor y({scene_.size()});
  for (std::size_t i = 0; i < scene_.size(); ++i) {
    y[i] = scene_.objects[i].category == category ? 0.0 : -penalty_;
  }
  return tape.constant(std::move(y));
}

std::optional<ad::Var> OracleScores::binary(ad::Tape& tape, std::string_view name) {
  if (withheld_.contains(std::string(name)) || !is_binary_relation(name)) return std::nullopt;
  const std::size_t n = scene_.size();
  Tensor p = masked_relation(n, 2);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      p.at(i, j) = oracle_relation(scene_, name, i, j, std::nullopt, config_.rulebook) ? 0.0
                                                                                      : -penalty_;
    }
  }
  return tape.constant(std::move(p));
}

std::optional<ad::Var> OracleScores::ternary(ad::Tape& tape, std::string_view name) {
  if (withheld_.contains(std::string(name)) || !is_ternary_relation(name)) return std::nullopt;
  const std::size_t n = scene_.size();
  Tensor t = masked_relation(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        if (is_masked_slot(i, j, k)) continue;
        t.at(i, j, k) = oracle_relation(scene_, name, i, j, k, config_.rulebook) ? 0.0 : -penalty_;
      }
    }
  }
  return tape.constant(std::move(t));
}

namespace {

class Executor {
 public:
  Executor(ScoreSource& scores, const RuleSet& rules, ad::Tape& tape, ExecutionTrace& trace)
      : scores_(scores), rules_(rules), tape_(tape), trace_(trace) {}

  ad::Var run(const Program& p) {
    TraceStep step;
    step.kind = p.kind();
    step.concept_name = p.name();
    step.negated = p.negated();
    const auto kids = p.children();
    for (const Program& child : kids) step.inputs.push_back(run(child));

    switch (p.kind()) {
      case NodeKind::kScene:
        step.output = tape_.constant(Tensor({scores_.size()}));
        break;
      case NodeKind::kFilter:
        step.resolved = p.name();
        step.output = tape_.minimum(step.inputs[0], scores_.unary(tape_, p.name()));
        break;
      case NodeKind::kRelate: {
        step.resolved = p.negated() ? resolve_antonym(rules_, p.name()) : p.name();
        auto rel = scores_.binary(tape_, step.resolved);
        if (!rel) unresolvable(step.resolved, 2);
        trace_.relation_uses.push_back({step.resolved, 2, *rel, false});
        const ad::Var pooled = tape_.masked_matvec(*rel, tape_.softmax(step.inputs[1]));
        step.output = tape_.minimum(step.inputs[0], pooled);
        break;
      }
      case NodeKind::kRelateTernary: {
        step.resolved = p.negated() ? resolve_antonym(rules_, p.name()) : p.name();
        bool composed = false;
        auto rel = scores_.ternary(tape_, step.resolved);
        if (!rel) {
          auto spec = rules_.compositions.find(step.resolved);
          if (spec == rules_.compositions.end()) unresolvable(step.resolved, 3);
          auto first = scores_.binary(tape_, spec->second.first);
          auto second = scores_.binary(tape_, spec->second.second);
          if (!first) unresolvable(spec->second.first, 2);
          if (!second) unresolvable(spec->second.second, 2);
          rel = tape_.compose_max(*first, *second);
          composed = true;
        }
        trace_.relation_uses.push_back({step.resolved, 3, *rel, composed});
        const ad::Var pooled = tape_.masked_bilinear(*rel, tape_.softmax(step.inputs[1]),
                                                     tape_.softmax(step.inputs[2]));
        step.output = tape_.minimum(step.inputs[0], pooled);
        break;
      }
    }
    const ad::Var out = step.output;
    trace_.steps.push_back(std::move(step));
    return out;
  }

 private:
  [[noreturn]] static void unresolvable(const std::string& name, int arity) {
    fail(ErrorCode::kUnresolvableConcept,
         "'" + name + "' is not a learned " + (arity == 2 ? std::string("binary") : "ternary") +
             " concept and no rule derives it");
  }

  ScoreSource& scores_;
  const RuleSet& rules_;
  ad::Tape& tape_;
  ExecutionTrace& trace_;
};

}  // namespace

ExecutionTrace execute(const Program& program, ScoreSource& scores, const RuleSet& rules,
                       ad::Tape& tape) {
  if (scores.size() == 0) fail(ErrorCode::kEmptyScene, "cannot execute over an empty scene");
  ExecutionTrace trace;
  trace.n = scores.size();
  Executor exec(scores, rules, tape, trace);
  trace.final = exec.run(program);
  trace.final_scores = tape.value(trace.final).data;
  return trace;
}

ExecutionTrace execute(const Program& program, SceneFeatures& features,
                       const ParamStore& params, const RuleSet& rules, ad::Tape& tape) {
  LearnedScores scores(features, params, &rules);
  return execute(program, scores, rules, tape);
}

std::size_t predict(std::span<const double> scores) {
  if (scores.empty()) fail(ErrorCode::kEmptyScene, "no scores to rank");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

std::size_t predict(const ExecutionTrace& trace) { return predict(trace.final_scores); }

std::string dump_trace(const ExecutionTrace& trace, const ad::Tape& tape, std::size_t top_k) {
  static constexpr std::string_view kNames[] = {"scene", "filter", "relate", "relate_ternary"};
  std::ostringstream out;
  out << std::setprecision(4);
  std::size_t rel = 0;
  for (std::size_t s = 0; s < trace.steps.size(); ++s) {
    const TraceStep& step = trace.steps[s];
    out << "step " << s << ' ' << kNames[static_cast<int>(step.kind)];
    if (!step.concept_name.empty()) {
      out << ' ' << (step.negated ? "not " : "") << step.concept_name;
    }
    if (!step.resolved.empty() && step.resolved != step.concept_name) {
      out << " -> " << step.resolved;
    }
    if (step.kind == NodeKind::kRelate || step.kind == NodeKind::kRelateTernary) {
      const RelationUse& use = trace.relation_uses.at(rel++);
      out << " relation[";
      const auto& shape = tape.value(use.scores).shape;
      for (std::size_t d = 0; d < shape.size(); ++d) out << (d ? "x" : "") << shape[d];
      out << (use.composed ? "] composed" : "]");
    }
    const auto& v = tape.value(step.output).data;
    out << " shape[" << v.size() << "] top:";
    std::vector<std::size_t> order(v.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return v[a] > v[b]; });
    for (std::size_t r = 0; r < std::min(top_k, order.size()); ++r) {
      out << ' ' << order[r] << '=' << v[order[r]];
    }
    out << '\n';
  }
  out << "answer " << predict(trace) << '\n';
  return out.str();
}

}  // namespace larc
