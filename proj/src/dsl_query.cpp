#include <algorithm>
#include <map>

#include "larc/dsl.hpp"
#include "larc/error.hpp"
#include "larc/random.hpp"

namespace larc {
namespace {

struct Phrase {
  std::string_view relation;
  std::string_view surface;
  std::string_view paraphrase;
};

constexpr Phrase kBinaryPhrases[] = {
    {"near", "near", "that is close to"},
    {"far", "far from", "a long way from"},
    {"beside", "beside", "next to"},
    {"left", "to the left of", "on the left side of"},
    {"right", "to the right of", "on the right side of"},
    {"front", "in front of", "located before"},
    {"behind", "behind", "at the back of"},
    {"above", "above", "on top of"},
    {"below", "below", "underneath"},
};

constexpr Phrase kTernaryPhrases[] = {
    {"center", "in the center of", "in the middle of"},
    {"between", "between", "in between"},
};

std::string fill(std::string pattern, std::string_view slot, const std::string& value) {
  const std::string key = "{" + std::string(slot) + "}";
  for (std::size_t at = pattern.find(key); at != std::string::npos;
       at = pattern.find(key, at + value.size())) {
    pattern.replace(at, key.size(), value);
  }
  return pattern;
}

std::string surface_name(const std::string& concept_name) {
  std::string s = concept_name;
  std::replace(s.begin(), s.end(), '_', ' ');
  return s;
}

}  // namespace

std::vector<TemplateSpec> default_templates() {
  std::vector<TemplateSpec> out;
  for (const auto& p : kBinaryPhrases) {
    out.push_back({std::string(p.relation) + ".v1", std::string(p.relation), false, 2,
                   "the {target} " + std::string(p.surface) + " the {anchor}"});
  }
  for (const auto& p : kTernaryPhrases) {
    out.push_back({std::string(p.relation) + ".v1", std::string(p.relation), false, 3,
                   "the {target} " + std::string(p.surface) +
                       " the {anchor1} and the {anchor2}"});
  }
  return out;
}

std::vector<TemplateSpec> negated_templates() {
  std::vector<TemplateSpec> out;
  for (const auto& p : kBinaryPhrases) {
    if (!geometric_antonym(p.relation)) continue;
    out.push_back({"not_" + std::string(p.relation) + ".v1", std::string(p.relation),
                   true, 2,
                   "the {target} not " + std::string(p.surface) + " the {anchor}"});
  }
  return out;
}

std::vector<TemplateSpec> paraphrase_templates() {
  std::vector<TemplateSpec> out;
  for (const auto& p : kBinaryPhrases) {
    out.push_back({std::string(p.relation) + ".p1", std::string(p.relation), false, 2,
                   "find the {target} " + std::string(p.paraphrase) + " the {anchor}"});
  }
  for (const auto& p : kTernaryPhrases) {
    out.push_back({std::string(p.relation) + ".p1", std::string(p.relation), false, 3,
                   "pick the {target} " + std::string(p.paraphrase) +
                       " the {anchor1} and the {anchor2}"});
  }
  return out;
}

GroundingQuery generate_query(const Scene& scene, const TemplateSpec& spec,
                              std::uint64_t seed, const GeneratorConfig& config,
                              const QueryOptions& options) {
  if (spec.arity != 2 && spec.arity != 3) {
    fail(ErrorCode::kInvalidArguments, "template arity must be 2 or 3");
  }
  std::string oracle_rel = spec.relation;
  if (spec.negated) {
    auto opposite = geometric_antonym(spec.relation);
    if (!opposite) {
      fail(ErrorCode::kNotRealizable,
           "template '" + spec.name + "': relation has no opposite to realize 'not'");
    }
    oracle_rel = std::string(*opposite);
  }

  const std::size_t n = scene.size();
  std::map<std::string, std::vector<std::size_t>> by_category;
  for (std::size_t i = 0; i < n; ++i) by_category[scene.objects[i].category].push_back(i);

  std::map<std::string, std::vector<std::string>> aliases_of;
  for (const auto& [alias, canonical] : config.aliases) aliases_of[canonical].push_back(alias);

  std::vector<std::size_t> anchors;
  for (const auto& [cat, members] : by_category) {
    if (members.size() == 1) anchors.push_back(members.front());
  }
  std::sort(anchors.begin(), anchors.end());

  struct Candidate {
    std::size_t target;
    std::size_t anchor1;
    std::size_t anchor2;
  };
  std::vector<Candidate> candidates;

  auto holds = [&](std::size_t t, std::size_t a1, std::size_t a2) {
    if (spec.arity == 2) return oracle_relation(scene, oracle_rel, t, a1, std::nullopt, config.rulebook);
    return oracle_relation(scene, oracle_rel, t, a1, a2, config.rulebook);
  };

  auto consider = [&](std::size_t a1, std::size_t a2) {
    for (const auto& [cat, members] : by_category) {
      if (options.require_distractor && members.size() < 2) continue;
      if (options.alias_targets_only && !aliases_of.contains(cat)) continue;
      std::vector<std::size_t> hits;
      for (std::size_t t : members) {
        if (t == a1 || (spec.arity == 3 && t == a2)) continue;
        if (holds(t, a1, a2)) hits.push_back(t);
      }
      if (hits.size() == 1) candidates.push_back({hits.front(), a1, a2});
    }
  };

  for (std::size_t a1 : anchors) {
    if (spec.arity == 2) {
      consider(a1, a1);
      continue;
    }
    for (std::size_t a2 : anchors) {
      if (a2 != a1) consider(a1, a2);
    }
  }
  if (candidates.empty()) {
    fail(ErrorCode::kNotRealizable,
         "template '" + spec.name + "' has no uniquely answerable tuple in scene " +
             std::to_string(scene.seed));
  }

  Rng rng = make_rng(seed, "query");
  const Candidate pick =
      candidates[std::uniform_int_distribution<std::size_t>(0, candidates.size() - 1)(rng)];
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  auto name_of = [&](std::size_t object, bool is_target) {
    const std::string& canonical = scene.objects[object].category;
    auto it = aliases_of.find(canonical);
    if (it == aliases_of.end()) return canonical;
    const bool use_alias = (is_target && options.alias_targets_only) ||
                           unit(rng) < options.alias_probability;
    if (!use_alias) return canonical;
    return it->second[std::uniform_int_distribution<std::size_t>(0, it->second.size() - 1)(rng)];
  };

  const std::string target_name = name_of(pick.target, true);
  const std::string anchor1_name = name_of(pick.anchor1, false);
  GroundingQuery q;
  q.answer = pick.target;
  q.template_name = spec.name;
  std::string text = fill(spec.pattern, "target", surface_name(target_name));
  const Program target = Program::filter(Program::scene(), target_name);
  const Program anchor1 = Program::filter(Program::scene(), anchor1_name);
  if (spec.arity == 2) {
    text = fill(text, "anchor", surface_name(anchor1_name));
    q.program = Program::relate(target, anchor1, spec.relation, spec.negated);
  } else {
    const std::string anchor2_name = name_of(pick.anchor2, false);
    text = fill(text, "anchor1", surface_name(anchor1_name));
    text = fill(text, "anchor2", surface_name(anchor2_name));
    q.program = Program::relate_ternary(target, anchor1,
                                        Program::filter(Program::scene(), anchor2_name),
                                        spec.relation, spec.negated);
  }
  q.utterance = std::move(text);
  return q;
}

}  // namespace larc
