#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace larc {

using Vec3 = std::array<double, 3>;

/// Axis-aligned box; `extent` holds positive half-sizes.
struct Box3 {
  Vec3 center{0.0, 0.0, 0.0};
  Vec3 extent{0.5, 0.5, 0.5};

  double lo(std::size_t axis) const { return center[axis] - extent[axis]; }
  double hi(std::size_t axis) const { return center[axis] + extent[axis]; }
  double volume() const { return 8.0 * extent[0] * extent[1] * extent[2]; }
  /// Mean half-size over the three axes.
  double mean_extent() const { return (extent[0] + extent[1] + extent[2]) / 3.0; }

  bool operator==(const Box3&) const = default;
};

/// Intersection volume over union volume, in [0, 1].
double iou(const Box3& a, const Box3& b);

struct SceneObject {
  int id = 0;
  Box3 box;
  std::string category;
  std::vector<double> attributes;

  bool operator==(const SceneObject&) const = default;
};

struct Scene {
  std::vector<SceneObject> objects;
  std::uint64_t seed = 0;

  std::size_t size() const { return objects.size(); }
  bool operator==(const Scene&) const = default;
};

/// What a detector reports for one box. Deliberately carries no category.
struct Detection {
  Box3 box;
  std::vector<double> attributes;

  bool operator==(const Detection&) const = default;
};

struct DetectedScene {
  Scene source;
  std::vector<Detection> detections;
  /// match[g] is the detection index assigned to ground-truth object g.
  std::vector<std::optional<std::size_t>> match;
  double noise_level = 0.0;

  bool operator==(const DetectedScene&) const = default;
};

/// Thresholds of the geometric predicates, in scene units or as factors of
/// the pair's mean full size (ē_i + ē_j).
struct GeometryRulebook {
  double axis_margin = 0.05;
  double near_factor = 1.5;
  double far_factor = 3.0;
  double beside_gap_factor = 0.5;

  bool operator==(const GeometryRulebook&) const = default;
};

/// Relation names the geometric oracle understands.
std::span<const std::string_view> binary_relation_names();
std::span<const std::string_view> ternary_relation_names();
bool is_binary_relation(std::string_view name);
bool is_ternary_relation(std::string_view name);

/// Geometric opposite (left/right, front/behind, above/below, beneath/above).
std::optional<std::string_view> geometric_antonym(std::string_view relation);

struct NoiseModel {
  /// Per-object probability of a spurious box is level * spurious_rate.
  double spurious_rate = 0.5;
  /// Per-object probability of a missed detection is level * drop_rate.
  double drop_rate = 0.25;
  double spurious_attribute_sigma = 0.5;

  bool operator==(const NoiseModel&) const = default;
};

struct GeneratorConfig {
  /// Canonical object categories.
  std::vector<std::string> vocabulary{"chair",  "table", "shelf", "lamp",
                                      "desk",   "couch", "box",   "cabinet",
                                      "wardrobe", "bed"};
  /// Alternate names referring to a canonical category (alias -> canonical).
  std::map<std::string, std::string> aliases{{"dresser", "wardrobe"},
                                             {"dining_table", "table"}};
  std::size_t min_objects = 5;
  std::size_t max_objects = 8;
  Vec3 layout_min{0.0, 0.0, 0.0};
  Vec3 layout_max{8.0, 8.0, 3.0};
  bool allow_collisions = false;
  bool distractors = true;
  double stack_probability = 0.2;
  std::size_t shape_dims = 4;
  double attribute_sigma = 0.15;
  std::uint64_t prototype_seed = 2024;
  GeometryRulebook rulebook;
  NoiseModel noise;

  /// Attribute vector length: extent (3) + color (3) + shape descriptor.
  std::size_t attribute_dim() const { return 6 + shape_dims; }
  void validate() const;
};

/// Resolves a surface concept name (canonical or alias) to its canonical category.
std::string canonical_category(const GeneratorConfig& config, std::string_view name);

Scene generate_scene(const GeneratorConfig& config, std::uint64_t seed);

DetectedScene apply_detector_noise(const Scene& scene, double level,
                                   std::uint64_t seed,
                                   const NoiseModel& model = {});

/// Greedy one-to-one assignment by descending IoU; pairs with IoU 0 never match.
std::vector<std::optional<std::size_t>> match_by_iou(
    std::span<const Box3> truth, std::span<const Box3> detected);

/// Ground-truth relation predicate on the scene's boxes. `k` must be given
/// exactly for ternary relations.
bool oracle_relation(const Scene& scene, std::string_view relation,
                     std::size_t i, std::size_t j,
                     std::optional<std::size_t> k = std::nullopt,
                     const GeometryRulebook& rules = {});

/// Same predicates over bare boxes.
bool box_relation(std::span<const Box3> boxes, std::string_view relation,
                  std::size_t i, std::size_t j, std::optional<std::size_t> k,
                  const GeometryRulebook& rules);

}  // namespace larc
