#pragma once

// Brute-force set semantics over ground-truth scenes, written without the
// executor or the kernels. Used as the reference the executor must agree with.
//
// A denotation is the set of objects a (sub)program can refer to. For
// relate(t, a, r) an object i of t is kept when r(i, j) holds for every
// anchor j != i in a; negated relations use the geometric opposite. The
// ternary form quantifies over every pair of distinct anchors.

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "larc/dsl.hpp"
#include "larc/scene.hpp"

namespace larc::testing {

using ObjectSet = std::set<std::size_t>;

inline const std::map<std::string, std::string>& opposite_relations() {
  static const std::map<std::string, std::string> kOpposite{
      {"left", "right"}, {"right", "left"},   {"front", "behind"},
      {"behind", "front"}, {"above", "below"}, {"below", "above"}};
  return kOpposite;
}

/// Holds for center/between when the target is left of one anchor and right
/// of the other, spelled out on box centers with the rulebook margin.
inline bool between_anchors(const Scene& scene, std::size_t i, std::size_t j, std::size_t k,
                            const GeometryRulebook& rules) {
  const double xi = scene.objects[i].box.center[0];
  const double xj = scene.objects[j].box.center[0];
  const double xk = scene.objects[k].box.center[0];
  const double m = rules.axis_margin;
  const bool left_j = xi < xj - m, right_j = xi > xj + m;
  const bool left_k = xi < xk - m, right_k = xi > xk + m;
  return (left_j && right_k) || (right_j && left_k);
}

struct SetEvaluator {
  const Scene& scene;
  const GeneratorConfig& config;
  /// Set when some anchor set along the way came out empty.
  bool empty_anchor = false;

  ObjectSet run(const Program& p) {
    ObjectSet out;
    const std::size_t n = scene.size();
    switch (p.kind()) {
      case NodeKind::kScene:
        for (std::size_t i = 0; i < n; ++i) out.insert(i);
        break;
      case NodeKind::kFilter: {
        const ObjectSet child = run(p.children()[0]);
        std::string category = p.name();
        if (auto it = config.aliases.find(category); it != config.aliases.end()) {
          category = it->second;
        }
        for (std::size_t i : child) {
          if (scene.objects[i].category == category) out.insert(i);
        }
        break;
      }
      case NodeKind::kRelate: {
        const ObjectSet target = run(p.children()[0]);
        const ObjectSet anchor = run(p.children()[1]);
        if (anchor.empty()) empty_anchor = true;
        std::string rel = p.name();
        if (p.negated()) rel = opposite_relations().at(rel);
        for (std::size_t i : target) {
          bool all = true;
          for (std::size_t j : anchor) {
            if (j != i && !oracle_relation(scene, rel, i, j, std::nullopt, config.rulebook)) {
              all = false;
            }
          }
          if (all) out.insert(i);
        }
        break;
      }
      case NodeKind::kRelateTernary: {
        const ObjectSet target = run(p.children()[0]);
        const ObjectSet a1 = run(p.children()[1]);
        const ObjectSet a2 = run(p.children()[2]);
        if (a1.empty() || a2.empty()) empty_anchor = true;
        for (std::size_t i : target) {
          bool all = true;
          for (std::size_t j : a1) {
            for (std::size_t k : a2) {
              if (j == i || k == i || j == k) continue;
              if (!between_anchors(scene, i, j, k, config.rulebook)) all = false;
            }
          }
          if (all) out.insert(i);
        }
        break;
      }
    }
    return out;
  }
};

/// Random program over the scene's categories (and their aliases), up to
/// `depth` relate levels.
inline Program random_program(std::mt19937_64& rng, const Scene& scene,
                              const GeneratorConfig& config, int depth) {
  std::vector<std::string> names;
  for (const auto& o : scene.objects) names.push_back(o.category);
  for (const auto& [alias, canonical] : config.aliases) {
    if (std::find(names.begin(), names.end(), canonical) != names.end()) names.push_back(alias);
  }
  auto pick = [&](const auto& v) { return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)]; };
  auto leaf = [&] {
    return Program::filter(Program::scene(), pick(names));
  };
  if (depth <= 0) return leaf();
  static const std::vector<std::string> kBinary{"near", "far",   "beside", "left",  "right",
                                                "front", "behind", "above", "below", "beneath"};
  static const std::vector<std::string> kNegatable{"left", "right", "front", "behind", "above", "below"};
  static const std::vector<std::string> kTernary{"center", "between"};
  std::uniform_int_distribution<int> kind(0, 3);
  auto sub = [&] {
    return std::bernoulli_distribution(0.3)(rng) ? random_program(rng, scene, config, depth - 1)
                                                  : leaf();
  };
  switch (kind(rng)) {
    case 0:
      return leaf();
    case 1:
      return Program::relate(sub(), sub(), pick(kBinary));
    case 2:
      return Program::relate(sub(), sub(), pick(kNegatable), true);
    default:
      return Program::relate_ternary(sub(), leaf(), leaf(), pick(kTernary));
  }
}

}  // namespace larc::testing
