#include "larc/eval.hpp"

#include <cmath>
#include <iomanip>
#include <sstream>

#include "json.hpp"
#include "larc/error.hpp"
#include "larc/exec.hpp"
#include "larc/kernels.hpp"
#include "larc/learn.hpp"
#include "larc/random.hpp"

namespace larc {
namespace {

struct Outcome {
  bool correct = false;
  std::string failure;
};

struct QueryInfo {
  std::size_t n = 0;
  const Program* program = nullptr;
};

/// Reduces per-query outcomes in index order.
Metrics summarize(const std::vector<Outcome>& outcomes, const std::vector<QueryInfo>& info,
                  const RuleSet& rules) {
  Metrics m;
  m.total = outcomes.size();
  std::size_t sym_hits = 0;
  std::size_t excl_hits = 0;
  std::map<std::string, std::array<std::size_t, 2>> per_concept;
  double var = 0.0;
  for (std::size_t q = 0; q < outcomes.size(); ++q) {
    const Outcome& o = outcomes[q];
    if (o.correct) ++m.correct;
    if (!o.failure.empty()) m.failures.push_back({q, o.failure});
    const double p = info[q].n ? 1.0 / static_cast<double>(info[q].n) : 0.0;
    m.chance += p;
    var += p * (1.0 - p);

    bool sym = false;
    bool excl = false;
    std::set<std::string> keys;
    visit(*info[q].program, [&](const Program& node) {
      if (node.kind() != NodeKind::kRelate && node.kind() != NodeKind::kRelateTernary) return;
      sym = sym || rules.is_symmetric(node.name());
      excl = excl || rules.is_exclusive(node.name());
      keys.insert(node.negated() ? "not " + node.name() : node.name());
    });
    if (sym) {
      ++m.symmetric_total;
      sym_hits += o.correct;
    }
    if (excl) {
      ++m.exclusive_total;
      excl_hits += o.correct;
    }
    for (const auto& k : keys) {
      auto& c = per_concept[k];
      c[0] += o.correct;
      c[1] += 1;
    }
  }
  if (m.total > 0) {
    const double total = static_cast<double>(m.total);
    m.overall_acc = static_cast<double>(m.correct) / total;
    m.chance /= total;
    m.chance_sigma = std::sqrt(var) / total;
  }
  if (m.symmetric_total > 0) {
    m.symmetric_subset_acc = static_cast<double>(sym_hits) / static_cast<double>(m.symmetric_total);
  }
  if (m.exclusive_total > 0) {
    m.exclusive_subset_acc = static_cast<double>(excl_hits) / static_cast<double>(m.exclusive_total);
  }
  for (const auto& [k, c] : per_concept) {
    m.per_concept_acc[k] = static_cast<double>(c[0]) / static_cast<double>(c[1]);
  }
  return m;
}

Program spell_out_negations(const Program& p) {
  switch (p.kind()) {
    case NodeKind::kScene:
      return p;
    case NodeKind::kFilter:
      return Program::filter(spell_out_negations(p.children()[0]), p.name());
    case NodeKind::kRelate:
      return Program::relate(spell_out_negations(p.children()[0]),
                             spell_out_negations(p.children()[1]),
                             p.negated() ? "not_" + p.name() : p.name());
    case NodeKind::kRelateTernary:
      return Program::relate_ternary(spell_out_negations(p.children()[0]),
                                     spell_out_negations(p.children()[1]),
                                     spell_out_negations(p.children()[2]),
                                     p.negated() ? "not_" + p.name() : p.name());
  }
  return p;
}

}  // namespace

std::string metrics_json(const Metrics& m) {
  nlohmann::json j = {{"total", m.total},
                      {"correct", m.correct},
                      {"overall_acc", m.overall_acc},
                      {"chance", m.chance},
                      {"chance_sigma", m.chance_sigma},
                      {"symmetric_total", m.symmetric_total},
                      {"exclusive_total", m.exclusive_total},
                      {"per_concept_acc", m.per_concept_acc},
                      {"asymmetry_ratio", m.asymmetry_ratio},
                      {"co_positivity", m.co_positivity},
                      {"failures", m.failures.size()}};
  j["symmetric_subset_acc"] =
      m.symmetric_subset_acc ? nlohmann::json(*m.symmetric_subset_acc) : nlohmann::json(nullptr);
  j["exclusive_subset_acc"] =
      m.exclusive_subset_acc ? nlohmann::json(*m.exclusive_subset_acc) : nlohmann::json(nullptr);
  if (!m.warnings.empty()) j["warnings"] = m.warnings;
  return j.dump();
}

Metrics evaluate(const TrainingSet& data, const ParamStore& params, const RuleSet& rules,
                 const EvalOptions& options) {
  const std::size_t count = data.items.size();
  std::vector<Outcome> outcomes(count);
  std::vector<QueryInfo> info(count);
  const bool par = kernels::policy() == kernels::Policy::kParallel;
#pragma omp parallel for schedule(dynamic, 4) if (par)
  for (std::size_t q = 0; q < count; ++q) {
    const TrainingItem& item = data.items[q];
    const auto& scene = data.scenes.at(item.scene);
    info[q] = {scene.size(), &item.program};
    try {
      ad::Tape tape(ad::Tape::Mode::kInference);
      SceneFeatures f = encode_scene(tape, scene, params);
      outcomes[q].correct = predict(execute(item.program, f, params, rules, tape)) == item.target;
    } catch (const Error& e) {
      outcomes[q].failure = std::string(to_string(e.code())) + ": " + e.what();
    }
  }
  Metrics m = summarize(outcomes, info, rules);
  if (options.diagnostics && !data.scenes.empty()) {
    std::vector<std::string> concepts;
    for (const auto& key : params.concepts()) {
      if (key.arity == 2 && (rules.is_symmetric(key.name) || rules.is_exclusive(key.name))) {
        concepts.push_back(key.name);
      }
    }
    const std::size_t n = std::min(options.diagnostic_scenes, data.scenes.size());
    RelationDiagnostics d = relation_diagnostics(
        std::span<const std::vector<Detection>>(data.scenes.data(), n), params, concepts);
    for (const auto& [c, v] : d.asymmetry) {
      if (rules.is_symmetric(c)) m.asymmetry_ratio[c] = v;
    }
    for (const auto& [c, v] : d.co_positivity) {
      if (rules.is_exclusive(c)) m.co_positivity[c] = v;
    }
  }
  return m;
}

Metrics evaluate_oracle(const Dataset& data, const GeneratorConfig& generator,
                        const RuleSet& rules, const std::set<std::string>& withheld) {
  const std::size_t count = data.queries.size();
  std::vector<Outcome> outcomes(count);
  std::vector<QueryInfo> info(count);
  for (std::size_t q = 0; q < count; ++q) {
    const GroundingQuery& query = data.queries[q];
    const Scene& scene = data.scenes.at(query.scene_index).source;
    info[q] = {scene.size(), &query.program};
    try {
      ad::Tape tape(ad::Tape::Mode::kInference);
      OracleScores scores(scene, generator, withheld);
      outcomes[q].correct = predict(execute(query.program, scores, rules, tape)) == query.answer;
    } catch (const Error& e) {
      outcomes[q].failure = std::string(to_string(e.code())) + ": " + e.what();
    }
  }
  return summarize(outcomes, info, rules);
}

bool Holdout::covers(const Program& program) const {
  bool hit = false;
  visit(program, [&](const Program& node) {
    if (node.kind() == NodeKind::kScene) return;
    if (concepts.contains(node.name())) hit = true;
    if (negations && node.negated()) hit = true;
  });
  return hit;
}

Holdout Holdout::parse(std::string_view text) {
  Holdout h;
  std::string item;
  auto flush = [&] {
    std::string t;
    for (char c : item) {
      if (!std::isspace(static_cast<unsigned char>(c))) t.push_back(c);
    }
    item.clear();
    if (t.empty()) return;
    if (t == "not" || t == "negated") {
      h.negations = true;
    } else {
      h.concepts.insert(normalize_concept(t));
    }
  };
  for (char c : text) {
    if (c == ',') {
      flush();
    } else {
      item.push_back(c);
    }
  }
  flush();
  return h;
}

std::string Holdout::to_string() const {
  std::string out;
  for (const auto& c : concepts) out += (out.empty() ? "" : ",") + c;
  if (negations) out += out.empty() ? "not" : ",not";
  return out;
}

Metrics zero_shot_eval(const TrainingSet& data, const ParamStore& params, const RuleSet& rules,
                       const Holdout& holdout) {
  for (const auto& c : holdout.concepts) {
    for (int arity = 1; arity <= 3; ++arity) {
      if (params.has_concept(c, arity)) {
        fail(ErrorCode::kInvalidConfig,
             "held-out concept '" + c + "' has a learned embedding; it was seen in training");
      }
    }
  }
  return evaluate(data, params, rules, EvalOptions{.diagnostics = false});
}

Metrics no_rules_eval(const TrainingSet& data, ParamStore params, std::uint64_t seed) {
  TrainingSet spelled;
  spelled.scenes = data.scenes;
  for (const auto& item : data.items) {
    spelled.items.push_back({item.scene, spell_out_negations(item.program), item.target});
  }
  std::vector<Program> programs;
  for (const auto& item : spelled.items) programs.push_back(item.program);
  ConceptVocabulary vocab = extract_concepts(programs);
  extend_params(params, vocab, derive_seed(seed, "no-rules"));
  return evaluate(spelled, params, RuleSet{}, EvalOptions{.diagnostics = false});
}

Metrics transfer_eval(const ParamStore& params, const RuleSet& rules,
                      std::span<const DetectedScene> scenes,
                      std::span<const TemplateSpec> templates, const GeneratorConfig& generator,
                      std::uint64_t seed, std::size_t queries_per_scene,
                      const QueryOptions& options) {
  if (templates.empty()) {
    Metrics m;
    m.warnings.push_back("transfer evaluation over an empty template set");
    return m;
  }
  Dataset data;
  data.scenes.assign(scenes.begin(), scenes.end());
  data.queries = generate_queries(scenes, templates, generator, seed, queries_per_scene, options);
  return evaluate(make_training_set(data), params, rules, EvalOptions{.diagnostics = false});
}

std::string emit_matrices(const std::vector<Detection>& scene, const ParamStore& params) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  ad::Tape tape(ad::Tape::Mode::kInference);
  SceneFeatures f = encode_scene(tape, scene, params);
  for (const auto& key : params.concepts()) {
    if (key.arity != 2) continue;
    const Tensor& p = tape.value(binary_scores(tape, f, key.name, params));
    out << "# " << key.name << ' ' << f.n << 'x' << f.n << '\n';
    for (std::size_t i = 0; i < f.n; ++i) {
      for (std::size_t j = 0; j < f.n; ++j) {
        out << (j ? " " : "");
        if (i == j) {
          out << "nan";
        } else {
          out << p.at(i, j);
        }
      }
      out << '\n';
    }
  }
  return out.str();
}

}  // namespace larc
