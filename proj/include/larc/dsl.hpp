#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "larc/scene.hpp"

namespace larc {

enum class NodeKind { kScene, kFilter, kRelate, kRelateTernary };

/// Immutable program tree. Copies share structure; equality is structural.
class Program {
 public:
  static Program scene();
  static Program filter(Program child, std::string name);
  static Program relate(Program target, Program anchor, std::string name,
                        bool negated = false);
  static Program relate_ternary(Program target, Program anchor1, Program anchor2,
                                std::string name, bool negated = false);

  NodeKind kind() const { return node_->kind; }
  /// Concept name; empty for scene().
  const std::string& name() const { return node_->name; }
  bool negated() const { return node_->negated; }
  std::span<const Program> children() const { return node_->children; }

  /// Number of nodes in the tree.
  std::size_t size() const;
  std::size_t depth() const;

  friend bool operator==(const Program& a, const Program& b);

 private:
  struct Node {
    NodeKind kind = NodeKind::kScene;
    std::string name;
    bool negated = false;
    std::vector<Program> children;
  };
  explicit Program(std::shared_ptr<const Node> node) : node_(std::move(node)) {}

  std::shared_ptr<const Node> node_;
};

/// Lowercases and maps spaces/hyphens to underscores; throws on anything that
/// is not a valid identifier afterwards.
std::string normalize_concept(std::string_view raw);
bool is_concept_identifier(std::string_view name);

Program parse_program(std::string_view text);
std::string print_program(const Program& program);

struct ConceptVocabulary {
  std::set<std::string> unary;
  std::set<std::string> binary;
  std::set<std::string> ternary;

  bool empty() const { return unary.empty() && binary.empty() && ternary.empty(); }
  std::size_t size() const { return unary.size() + binary.size() + ternary.size(); }
  bool operator==(const ConceptVocabulary&) const = default;
};

ConceptVocabulary extract_concepts(std::span<const Program> corpus);

/// Visits every node, parents before children.
template <typename Fn>
void visit(const Program& program, Fn&& fn) {
  fn(program);
  for (const Program& child : program.children()) visit(child, fn);
}

struct TemplateSpec {
  std::string name;
  std::string relation;
  bool negated = false;
  /// 2 for relate, 3 for relate_ternary.
  int arity = 2;
  /// Surface pattern with {target}, {anchor} / {anchor1}, {anchor2} slots.
  std::string pattern;
};

/// In-distribution surface templates for every binary and ternary relation.
std::vector<TemplateSpec> default_templates();
/// "not r" templates for every relation with a geometric antonym.
std::vector<TemplateSpec> negated_templates();
/// Paraphrased surfaces that compile to the same programs as default_templates().
std::vector<TemplateSpec> paraphrase_templates();

struct GroundingQuery {
  std::string utterance;
  Program program = Program::scene();
  std::size_t scene_index = 0;
  /// Ground-truth object id in the source scene.
  std::size_t answer = 0;
  std::string template_name;
};

struct QueryOptions {
  /// Only accept targets whose category has at least one other instance.
  bool require_distractor = false;
  /// Probability of naming a category by one of its aliases.
  double alias_probability = 0.0;
  /// Only accept targets whose category has an alias, and always name it by the alias.
  bool alias_targets_only = false;
};

/// Picks a (target, anchors) tuple that realizes the template with a unique
/// answer among same-category objects. Anchors always have a category that
/// is unique in the scene. Throws kNotRealizable when no tuple qualifies.
GroundingQuery generate_query(const Scene& scene, const TemplateSpec& spec,
                              std::uint64_t seed, const GeneratorConfig& config,
                              const QueryOptions& options = {});

}  // namespace larc
