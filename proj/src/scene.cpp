#include "larc/scene.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <tuple>

#include "larc/error.hpp"
#include "larc/random.hpp"

namespace larc {
namespace {

constexpr std::array<std::string_view, 10> kBinary{
    "near", "far",    "beside", "left",  "right",
    "front", "behind", "above", "below", "beneath"};
constexpr std::array<std::string_view, 2> kTernary{"center", "between"};

struct Prototype {
  Vec3 extent;
  Vec3 color;
  std::vector<double> shape;
};

Prototype make_prototype(const GeneratorConfig& config, const std::string& category) {
  Rng rng = make_rng(config.prototype_seed, "prototype:" + category);
  std::uniform_real_distribution<double> size(0.25, 0.9);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  Prototype p;
  for (auto& e : p.extent) e = size(rng);
  for (auto& c : p.color) c = unit(rng);
  p.shape.resize(config.shape_dims);
  for (auto& s : p.shape) s = normal(rng);
  return p;
}

double overlap_1d(double lo_a, double hi_a, double lo_b, double hi_b) {
  return std::max(0.0, std::min(hi_a, hi_b) - std::max(lo_a, lo_b));
}

double intersection_volume(const Box3& a, const Box3& b) {
  double v = 1.0;
  for (std::size_t axis = 0; axis < 3; ++axis) {
    v *= overlap_1d(a.lo(axis), a.hi(axis), b.lo(axis), b.hi(axis));
  }
  return v;
}

double pair_size(const Box3& a, const Box3& b) {
  return a.mean_extent() + b.mean_extent();
}

double center_distance(const Box3& a, const Box3& b, std::size_t axes = 3) {
  double sq = 0.0;
  for (std::size_t axis = 0; axis < axes; ++axis) {
    const double d = a.center[axis] - b.center[axis];
    sq += d * d;
  }
  return std::sqrt(sq);
}

bool footprints_overlap(const Box3& a, const Box3& b, double margin) {
  for (std::size_t axis = 0; axis < 2; ++axis) {
    if (a.hi(axis) + margin <= b.lo(axis) || b.hi(axis) + margin <= a.lo(axis)) {
      return false;
    }
  }
  return true;
}

bool above(const Box3& a, const Box3& b, double margin) {
  return a.lo(2) >= b.hi(2) - margin && footprints_overlap(a, b, margin);
}

bool binary_predicate(const Box3& a, const Box3& b, std::string_view rel,
                      const GeometryRulebook& r) {
  if (rel == "left") return a.center[0] < b.center[0] - r.axis_margin;
  if (rel == "right") return a.center[0] > b.center[0] + r.axis_margin;
  if (rel == "front") return a.center[1] < b.center[1] - r.axis_margin;
  if (rel == "behind") return a.center[1] > b.center[1] + r.axis_margin;
  if (rel == "above") return above(a, b, r.axis_margin);
  if (rel == "below" || rel == "beneath") return above(b, a, r.axis_margin);
  if (rel == "near") return center_distance(a, b) < r.near_factor * pair_size(a, b);
  if (rel == "far") return center_distance(a, b) > r.far_factor * pair_size(a, b);
  if (rel == "beside") {
    const bool vertical_overlap =
        overlap_1d(a.lo(2), a.hi(2), b.lo(2), b.hi(2)) > 0.0;
    double gap = 0.0;
    for (std::size_t axis = 0; axis < 2; ++axis) {
      gap = std::max(gap, std::abs(a.center[axis] - b.center[axis]) -
                              (a.extent[axis] + b.extent[axis]));
    }
    return vertical_overlap && !above(a, b, r.axis_margin) &&
           !above(b, a, r.axis_margin) &&
           gap <= r.beside_gap_factor * pair_size(a, b);
  }
  fail(ErrorCode::kUnknownRelation, "unknown relation '" + std::string(rel) + "'");
}

}  // namespace

double iou(const Box3& a, const Box3& b) {
  const double inter = intersection_volume(a, b);
  const double uni = a.volume() + b.volume() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::span<const std::string_view> binary_relation_names() { return kBinary; }
std::span<const std::string_view> ternary_relation_names() { return kTernary; }

bool is_binary_relation(std::string_view name) {
  return std::find(kBinary.begin(), kBinary.end(), name) != kBinary.end();
}
bool is_ternary_relation(std::string_view name) {
  return std::find(kTernary.begin(), kTernary.end(), name) != kTernary.end();
}

std::optional<std::string_view> geometric_antonym(std::string_view relation) {
  static constexpr std::array<std::pair<std::string_view, std::string_view>, 4>
      kPairs{{{"left", "right"}, {"front", "behind"}, {"above", "below"},
              {"beneath", "above"}}};
  for (const auto& [a, b] : kPairs) {
    if (relation == a) return b;
  }
  for (const auto& [a, b] : kPairs) {
    if (relation == b && a != "beneath") return a;
  }
  return std::nullopt;
}

void GeneratorConfig::validate() const {
  if (vocabulary.empty()) fail(ErrorCode::kInvalidConfig, "empty vocabulary");
  if (min_objects < 2) fail(ErrorCode::kInvalidConfig, "scenes need at least 2 objects");
  if (max_objects < min_objects) {
    fail(ErrorCode::kInvalidConfig, "max_objects < min_objects");
  }
  for (std::size_t a = 0; a < 3; ++a) {
    if (!(layout_max[a] > layout_min[a])) {
      fail(ErrorCode::kInvalidConfig, "empty layout bounds");
    }
  }
  std::set<std::string> seen;
  for (const auto& c : vocabulary) {
    if (!seen.insert(c).second) {
      fail(ErrorCode::kInvalidConfig, "duplicate category '" + c + "'");
    }
  }
  for (const auto& [alias, canonical] : aliases) {
    if (!seen.contains(canonical)) {
      fail(ErrorCode::kInvalidConfig,
           "alias '" + alias + "' points to unknown category '" + canonical + "'");
    }
    if (seen.contains(alias)) {
      fail(ErrorCode::kInvalidConfig, "alias '" + alias + "' shadows a category");
    }
  }
}

std::string canonical_category(const GeneratorConfig& config, std::string_view name) {
  if (auto it = config.aliases.find(std::string(name)); it != config.aliases.end()) {
    return it->second;
  }
  return std::string(name);
}

Scene generate_scene(const GeneratorConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(splitmix64(seed));
  std::uniform_int_distribution<std::size_t> count(config.min_objects,
                                                   config.max_objects);
  std::uniform_int_distribution<std::size_t> pick(0, config.vocabulary.size() - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> noise(0.0, config.attribute_sigma);

  const std::size_t n = count(rng);
  std::vector<std::string> categories;
  categories.reserve(n);
  if (config.distractors) {
    const auto& twin = config.vocabulary[pick(rng)];
    categories.push_back(twin);
    categories.push_back(twin);
  }
  while (categories.size() < n) categories.push_back(config.vocabulary[pick(rng)]);
  std::shuffle(categories.begin(), categories.end(), rng);

  std::map<std::string, Prototype> prototypes;
  Scene scene;
  scene.seed = seed;
  std::vector<std::size_t> floor_objects;

  auto collides = [&](const Box3& box, std::optional<std::size_t> except) {
    for (const auto& other : scene.objects) {
      if (except && static_cast<std::size_t>(other.id) == *except) continue;
      if (intersection_volume(box, other.box) > 1e-12) return true;
    }
    return false;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const std::string& category = categories[i];
    auto [it, inserted] = prototypes.try_emplace(category);
    if (inserted) it->second = make_prototype(config, category);
    const Prototype& proto = it->second;

    Box3 box;
    for (std::size_t a = 0; a < 3; ++a) {
      box.extent[a] = proto.extent[a] * (0.8 + 0.4 * unit(rng));
    }
    bool placed = false;
    if (!floor_objects.empty() && unit(rng) < config.stack_probability) {
      const std::size_t base =
          floor_objects[std::uniform_int_distribution<std::size_t>(
              0, floor_objects.size() - 1)(rng)];
      const Box3& b = scene.objects[base].box;
      for (std::size_t a = 0; a < 2; ++a) {
        const double slack = std::max(0.0, b.extent[a] - box.extent[a]);
        box.center[a] = b.center[a] + (2.0 * unit(rng) - 1.0) * slack;
      }
      box.center[2] = b.hi(2) + box.extent[2];
      placed = box.hi(2) <= config.layout_max[2] &&
               (config.allow_collisions || !collides(box, base));
    }
    for (int attempt = 0; !placed && attempt < 200; ++attempt) {
      for (std::size_t a = 0; a < 2; ++a) {
        const double lo = config.layout_min[a] + box.extent[a];
        const double hi = std::max(lo, config.layout_max[a] - box.extent[a]);
        box.center[a] = lo + (hi - lo) * unit(rng);
      }
      box.center[2] = config.layout_min[2] + box.extent[2];
      placed = config.allow_collisions || !collides(box, std::nullopt);
      if (placed) floor_objects.push_back(i);
    }
    // Crowded layouts keep the last attempt even if it overlaps.
    if (!placed) floor_objects.push_back(i);

    SceneObject obj;
    obj.id = static_cast<int>(i);
    obj.box = box;
    obj.category = category;
    obj.attributes.reserve(config.attribute_dim());
    for (std::size_t a = 0; a < 3; ++a) obj.attributes.push_back(box.extent[a]);
    for (std::size_t a = 0; a < 3; ++a) obj.attributes.push_back(proto.color[a] + noise(rng));
    for (double s : proto.shape) obj.attributes.push_back(s + noise(rng));
    scene.objects.push_back(std::move(obj));
  }
  return scene;
}

std::vector<std::optional<std::size_t>> match_by_iou(std::span<const Box3> truth,
                                                     std::span<const Box3> detected) {
  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  for (std::size_t g = 0; g < truth.size(); ++g) {
    for (std::size_t d = 0; d < detected.size(); ++d) {
      const double v = iou(truth[g], detected[d]);
      if (v > 0.0) candidates.emplace_back(v, g, d);
    }
  }
  std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
    if (std::get<0>(a) != std::get<0>(b)) return std::get<0>(a) > std::get<0>(b);
    if (std::get<1>(a) != std::get<1>(b)) return std::get<1>(a) < std::get<1>(b);
    return std::get<2>(a) < std::get<2>(b);
  });
  std::vector<std::optional<std::size_t>> match(truth.size());
  std::vector<bool> used(detected.size(), false);
  for (const auto& [v, g, d] : candidates) {
    if (match[g] || used[d]) continue;
    match[g] = d;
    used[d] = true;
  }
  return match;
}

DetectedScene apply_detector_noise(const Scene& scene, double level,
                                   std::uint64_t seed, const NoiseModel& model) {
  if (!(level >= 0.0 && level < 1.0)) {
    fail(ErrorCode::kInvalidArguments, "noise level must lie in [0, 1)");
  }
  if (scene.objects.empty()) fail(ErrorCode::kEmptyScene, "scene has no objects");

  DetectedScene out;
  out.source = scene;
  out.noise_level = level;
  if (level == 0.0) {
    for (std::size_t g = 0; g < scene.size(); ++g) {
      out.detections.push_back({scene.objects[g].box, scene.objects[g].attributes});
      out.match.emplace_back(g);
    }
    return out;
  }

  Rng rng(splitmix64(seed ^ 0x5eedd37ec7ULL));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::normal_distribution<double> attr_noise(0.5, model.spurious_attribute_sigma);

  Vec3 lo = scene.objects.front().box.center;
  Vec3 hi = lo;
  for (const auto& obj : scene.objects) {
    for (std::size_t a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], obj.box.lo(a));
      hi[a] = std::max(hi[a], obj.box.hi(a));
    }
  }
  const std::size_t attr_dim = scene.objects.front().attributes.size();

  std::vector<Detection> spurious;
  for (const auto& obj : scene.objects) {
    const bool dropped = unit(rng) < level * model.drop_rate;
    Detection det{obj.box, obj.attributes};
    for (std::size_t a = 0; a < 3; ++a) {
      det.box.center[a] += (2.0 * unit(rng) - 1.0) * level * obj.box.extent[a];
      det.box.extent[a] *= 1.0 + (2.0 * unit(rng) - 1.0) * level;
    }
    if (!dropped) out.detections.push_back(std::move(det));

    if (unit(rng) < level * model.spurious_rate) {
      Detection fake;
      for (std::size_t a = 0; a < 3; ++a) {
        fake.box.extent[a] = 0.2 + 0.6 * unit(rng);
        fake.box.center[a] = lo[a] + (hi[a] - lo[a]) * unit(rng);
      }
      fake.attributes.resize(attr_dim);
      for (auto& v : fake.attributes) v = attr_noise(rng);
      spurious.push_back(std::move(fake));
    }
  }
  for (auto& s : spurious) out.detections.push_back(std::move(s));

  std::vector<Box3> truth_boxes;
  std::vector<Box3> det_boxes;
  for (const auto& obj : scene.objects) truth_boxes.push_back(obj.box);
  for (const auto& det : out.detections) det_boxes.push_back(det.box);
  out.match = match_by_iou(truth_boxes, det_boxes);
  return out;
}

bool box_relation(std::span<const Box3> boxes, std::string_view relation,
                  std::size_t i, std::size_t j, std::optional<std::size_t> k,
                  const GeometryRulebook& rules) {
  const bool ternary = is_ternary_relation(relation);
  if (!ternary && !is_binary_relation(relation)) {
    fail(ErrorCode::kUnknownRelation, "unknown relation '" + std::string(relation) + "'");
  }
  if (ternary != k.has_value()) {
    fail(ErrorCode::kInvalidArguments,
         "relation '" + std::string(relation) + "' takes " +
             (ternary ? "three" : "two") + " objects");
  }
  const std::size_t n = boxes.size();
  if (i >= n || j >= n || (k && *k >= n)) {
    fail(ErrorCode::kInvalidArguments, "object index out of range");
  }
  if (i == j || (k && (*k == i || *k == j))) {
    fail(ErrorCode::kInvalidArguments, "relation arguments must be distinct objects");
  }
  if (!ternary) return binary_predicate(boxes[i], boxes[j], relation, rules);
  // center and between share the left/right decomposition.
  const Box3& a = boxes[i];
  const Box3& b = boxes[j];
  const Box3& c = boxes[*k];
  return (binary_predicate(a, b, "left", rules) && binary_predicate(a, c, "right", rules)) ||
         (binary_predicate(a, b, "right", rules) && binary_predicate(a, c, "left", rules));
}

bool oracle_relation(const Scene& scene, std::string_view relation, std::size_t i,
                     std::size_t j, std::optional<std::size_t> k,
                     const GeometryRulebook& rules) {
  std::vector<Box3> boxes;
  boxes.reserve(scene.size());
  for (const auto& obj : scene.objects) boxes.push_back(obj.box);
  return box_relation(boxes, relation, i, j, k, rules);
}

}  // namespace larc
