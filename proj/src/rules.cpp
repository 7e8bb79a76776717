#include "larc/rules.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <regex>
#include <sstream>

#include "larc/error.hpp"
#include "larc/kernels.hpp"

namespace larc {
namespace {

constexpr std::string_view kDefaultRules = R"(# larc rule file v1
[symmetric]
beside
close
far
near

[exclusive]
above
behind
below
beneath
front
left
right

[synonyms]
dresser, wardrobe
dining_table, table

[antonyms]
above = below
behind = front
left = right

[compositions]
between = left + right
center = left + right
)";

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::vector<std::string> split(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t at = s.find(sep, start);
    out.push_back(trim(s.substr(start, at == std::string_view::npos ? s.npos : at - start)));
    if (at == std::string_view::npos) break;
    start = at + 1;
  }
  return out;
}

std::string join(const std::set<std::string>& items, std::string_view sep) {
  std::string out;
  for (const auto& item : items) {
    if (!out.empty()) out += sep;
    out += item;
  }
  return out;
}

/// Normalizes a loosely formatted concept mention; nullopt when it is not
/// a plausible identifier.
std::optional<std::string> loose_concept(std::string_view raw) {
  std::string s = trim(raw);
  const std::string strip = "*_`\"'.,;[]()#";
  while (!s.empty() && strip.find(s.front()) != std::string::npos) s.erase(s.begin());
  while (!s.empty() && strip.find(s.back()) != std::string::npos) s.pop_back();
  if (s.empty()) return std::nullopt;
  try {
    return normalize_concept(s);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

const std::set<std::string>* RuleSet::synonym_group(std::string_view c) const {
  for (const auto& g : synonym_groups) {
    if (g.contains(std::string(c))) return &g;
  }
  return nullptr;
}

bool RuleSet::empty() const {
  return symmetric.empty() && exclusive.empty() && synonym_groups.empty() &&
         antonyms.empty() && compositions.empty();
}

void RuleSet::add_antonym_pair(const std::string& a, const std::string& b) {
  antonyms[a] = b;
  antonyms[b] = a;
}

void RuleSet::validate(const std::set<std::string>* binary_vocab) const {
  std::vector<std::string> problems;
  for (const auto& c : symmetric) {
    if (exclusive.contains(c)) problems.push_back("'" + c + "' is both symmetric and exclusive");
  }
  for (const auto& [a, b] : antonyms) {
    if (a == b) {
      problems.push_back("'" + a + "' is its own antonym");
      continue;
    }
    auto back = antonyms.find(b);
    if (back == antonyms.end() || back->second != a) {
      problems.push_back("antonym '" + a + "' -> '" + b + "' is not mutual");
    }
  }
  std::map<std::string, std::size_t> group_of;
  for (std::size_t g = 0; g < synonym_groups.size(); ++g) {
    if (synonym_groups[g].size() < 2) {
      problems.push_back("synonym group " + std::to_string(g) + " has fewer than two members");
    }
    for (const auto& c : synonym_groups[g]) {
      auto [it, inserted] = group_of.emplace(c, g);
      if (!inserted) problems.push_back("'" + c + "' appears in two synonym groups");
    }
  }
  std::set<std::string> known;
  if (binary_vocab) known = *binary_vocab;
  known.insert(symmetric.begin(), symmetric.end());
  known.insert(exclusive.begin(), exclusive.end());
  for (const auto& [a, b] : antonyms) known.insert(a);
  for (const auto& [name, spec] : compositions) {
    for (const auto& part : {spec.first, spec.second}) {
      if (!known.contains(part)) {
        problems.push_back("composition '" + name + "' uses unknown binary concept '" + part + "'");
      }
    }
    if (known.contains(name)) {
      problems.push_back("composition '" + name + "' names a binary concept");
    }
  }
  if (!problems.empty()) {
    std::string msg = "inconsistent rules:";
    for (const auto& p : problems) msg += "\n  " + p;
    fail(ErrorCode::kInconsistentRules, msg);
  }
}

std::string_view default_rule_text() { return kDefaultRules; }

RuleSet default_rules() { return parse_rule_file(kDefaultRules); }

RuleSet parse_rule_file(std::string_view text) {
  RuleSet rules;
  std::string section;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  auto bad = [&](const std::string& why) {
    fail(ErrorCode::kFormat, "rule file line " + std::to_string(line_no) + ": " + why);
  };
  auto concept_at = [&](std::string_view s) -> std::string {
    std::string name;
    try {
      name = normalize_concept(trim(s));
    } catch (const Error&) {
      bad("'" + trim(s) + "' is not a concept name");
    }
    return name;
  };
  while (std::getline(in, raw)) {
    ++line_no;
    std::string line = trim(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') bad("unterminated section header");
      section = lower(trim(std::string_view(line).substr(1, line.size() - 2)));
      if (section != "symmetric" && section != "exclusive" && section != "synonyms" &&
          section != "antonyms" && section != "compositions") {
        bad("unknown section '" + section + "'");
      }
      continue;
    }
    if (section.empty()) bad("entry outside of a section");
    if (section == "symmetric") {
      rules.symmetric.insert(concept_at(line));
    } else if (section == "exclusive") {
      rules.exclusive.insert(concept_at(line));
    } else if (section == "synonyms") {
      std::set<std::string> group;
      for (const auto& item : split(line, ',')) group.insert(concept_at(item));
      rules.synonym_groups.push_back(std::move(group));
    } else if (section == "antonyms") {
      const auto parts = split(line, '=');
      if (parts.size() != 2) bad("expected 'a = b'");
      const std::string a = concept_at(parts[0]);
      const std::string b = concept_at(parts[1]);
      if (rules.antonyms.contains(a) || rules.antonyms.contains(b)) {
        bad("concept listed in two antonym pairs");
      }
      rules.add_antonym_pair(a, b);
    } else {
      const auto parts = split(line, '=');
      if (parts.size() != 2) bad("expected 'name = first + second'");
      const auto terms = split(parts[1], '+');
      if (terms.size() != 2) bad("a composition combines exactly two binary concepts");
      rules.compositions[concept_at(parts[0])] = {concept_at(terms[0]), concept_at(terms[1])};
    }
  }
  return rules;
}

std::string format_rule_file(const RuleSet& rules) {
  std::ostringstream out;
  out << "# larc rule file v1\n[symmetric]\n";
  for (const auto& c : rules.symmetric) out << c << '\n';
  out << "\n[exclusive]\n";
  for (const auto& c : rules.exclusive) out << c << '\n';
  out << "\n[synonyms]\n";
  for (const auto& g : rules.synonym_groups) out << join(g, ", ") << '\n';
  out << "\n[antonyms]\n";
  for (const auto& [a, b] : rules.antonyms) {
    if (a < b) out << a << " = " << b << '\n';
  }
  out << "\n[compositions]\n";
  for (const auto& [name, spec] : rules.compositions) {
    out << name << " = " << spec.first << " + " << spec.second << '\n';
  }
  return out.str();
}

RuleSet load_rule_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot read rule file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_rule_file(buf.str());
}

void save_rule_file(const RuleSet& rules, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write rule file '" + path + "'");
  out << format_rule_file(rules);
}

std::string resolve_antonym(const RuleSet& rules, std::string_view relation) {
  auto it = rules.antonyms.find(std::string(relation));
  if (it == rules.antonyms.end()) {
    fail(ErrorCode::kUnresolvableConcept,
         "no antonym known for '" + std::string(relation) + "'");
  }
  return it->second;
}

Tensor compose_ternary(const RuleSet& rules, std::string_view concept_name,
                       const Tensor& first, const Tensor& second) {
  if (!rules.compositions.contains(std::string(concept_name))) {
    fail(ErrorCode::kUnresolvableConcept,
         "no composition rule for '" + std::string(concept_name) + "'");
  }
  if (first.rank() != 2 || first.dim(0) != first.dim(1) || first.shape != second.shape) {
    fail(ErrorCode::kNonSquare, "composition inputs must be matching n×n matrices");
  }
  const std::size_t n = first.dim(0);
  Tensor out({n, n, n});
  std::vector<std::uint8_t> branch(n * n * n);
  kernels::compose_max(first.data, second.data, n, out.data, branch);
  return out;
}

// ---------------------------------------------------------------------------

Prompts build_prompts(const ConceptVocabulary& vocab) {
  Prompts p;
  if (vocab.binary.empty()) p.warnings.push_back("relation prompt built with an empty relation list");
  if (vocab.unary.empty()) p.warnings.push_back("synonym prompt built with an empty category list");
  p.relations =
      "We define two kinds of spatial relations: Asymmetric relations are relations that "
      "don't exhibit reciprocity when the order of the objects is reversed. Symmetric "
      "relations are relations that exhibit reciprocity when the order of the objects is "
      "reversed. Here are some relations: " +
      join(vocab.binary, ", ") +
      ". For each relation, specify whether it is a symmetric relation or an asymmetric "
      "relation.";
  p.synonyms_round1 = "Here are some object categories: " + join(vocab.unary, ", ") +
                      ". List categories that have similar meanings.";
  p.synonyms_round2 = "Within each group, list categories that have similar appearances.";
  return p;
}

std::string synonym_followup_prompt(const Prompts& prompts, std::string_view round1_reply) {
  return prompts.synonyms_round1 + "\n\n" + trim(round1_reply) + "\n\n" +
         prompts.synonyms_round2;
}

ParsedResponse parse_response(ResponseKind kind, std::string_view text,
                              const ConceptVocabulary& vocab) {
  ParsedResponse out;
  if (kind == ResponseKind::kRelations) {
    std::set<std::string> seen;
    std::istringstream in{std::string(text)};
    std::string raw;
    static const std::regex kBullet(R"(^\s*(?:[-*+•]|\d+[.)])\s*)");
    while (std::getline(in, raw)) {
      const std::string line = lower(std::regex_replace(raw, kBullet, ""));
      std::size_t sep = line.find(':');
      std::size_t skip = 1;
      if (sep == std::string::npos) {
        sep = line.find(" - ");
        skip = 3;
      }
      if (sep == std::string::npos) {
        sep = line.find(" is ");
        skip = 4;
      }
      if (sep == std::string::npos) continue;
      const std::string rest = line.substr(sep + skip);
      const bool asym = rest.find("asymmetric") != std::string::npos ||
                        rest.find("non-symmetric") != std::string::npos ||
                        rest.find("not symmetric") != std::string::npos;
      const bool sym = !asym && rest.find("symmetric") != std::string::npos;
      if (!asym && !sym) continue;
      auto name = loose_concept(line.substr(0, sep));
      if (!name) continue;
      if (!vocab.binary.contains(*name)) {
        out.warnings.push_back("response names '" + *name + "', which is not a known relation; dropped");
        continue;
      }
      seen.insert(*name);
      if (sym) {
        out.rules.symmetric.insert(*name);
        if (rest.find("exclusive") != std::string::npos) out.rules.exclusive.insert(*name);
      } else {
        out.asymmetric.insert(*name);
        const bool excl = rest.find("exclusive") != std::string::npos &&
                          rest.find("not exclusive") == std::string::npos &&
                          rest.find("non-exclusive") == std::string::npos;
        if (excl) out.rules.exclusive.insert(*name);
      }
    }
    for (const auto& r : vocab.binary) {
      if (!seen.contains(r)) {
        out.warnings.push_back("no classification found for '" + r + "'; left unconstrained");
      }
    }
    return out;
  }

  static const std::regex kGroup(R"(\[([^\]]*)\])");
  const std::string body(text);
  for (auto it = std::sregex_iterator(body.begin(), body.end(), kGroup);
       it != std::sregex_iterator(); ++it) {
    std::set<std::string> group;
    for (const auto& item : split((*it)[1].str(), ',')) {
      auto name = loose_concept(item);
      if (!name) continue;
      if (!vocab.unary.contains(*name)) {
        out.warnings.push_back("response names '" + *name + "', which is not a known category; dropped");
        continue;
      }
      group.insert(*name);
    }
    if (group.size() < 2) continue;
    // Merge with every overlapping group so the result stays disjoint.
    for (auto g = out.rules.synonym_groups.begin(); g != out.rules.synonym_groups.end();) {
      const bool overlaps = std::any_of(g->begin(), g->end(),
                                        [&](const std::string& c) { return group.contains(c); });
      if (overlaps) {
        group.insert(g->begin(), g->end());
        g = out.rules.synonym_groups.erase(g);
      } else {
        ++g;
      }
    }
    out.rules.synonym_groups.push_back(std::move(group));
  }
  std::sort(out.rules.synonym_groups.begin(), out.rules.synonym_groups.end());
  return out;
}

}  // namespace larc
