#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "larc/dsl.hpp"
#include "larc/scene.hpp"

namespace larc {

/// Generated scenes (with their detector output) and the queries over them.
struct Dataset {
  std::vector<DetectedScene> scenes;
  std::vector<GroundingQuery> queries;
};

/// One supervised item as the learner sees it: a program and the index of
/// the target among the scene's detections.
struct TrainingItem {
  std::size_t scene = 0;
  Program program = Program::scene();
  std::size_t target = 0;
};

/// Detector output only. Ground-truth categories are not representable here,
/// which is what keeps them off the training path.
struct TrainingSet {
  std::vector<std::vector<Detection>> scenes;
  std::vector<TrainingItem> items;
};

/// Strips a dataset down to detections and target detection indices.
/// Queries whose target was not detected are skipped.
TrainingSet make_training_set(const Dataset& data);

std::string scene_record(const DetectedScene& scene);
DetectedScene parse_scene_record(const std::string& line);
std::string query_record(const GroundingQuery& query);
GroundingQuery parse_query_record(const std::string& line);

void save_scenes(const std::vector<DetectedScene>& scenes, const std::string& path);
std::vector<DetectedScene> load_scenes(const std::string& path);
void save_queries(const std::vector<GroundingQuery>& queries, const std::string& path);
std::vector<GroundingQuery> load_queries(const std::string& path);

}  // namespace larc

namespace larc {

/// Draws up to `per_scene` queries per scene from `templates`, resampling
/// templates that are not realizable. Queries whose target went undetected
/// are dropped. Scene indices are offset by `first_index`.
std::vector<GroundingQuery> generate_queries(std::span<const DetectedScene> scenes,
                                             std::span<const TemplateSpec> templates,
                                             const GeneratorConfig& generator,
                                             std::uint64_t seed, std::size_t per_scene,
                                             const QueryOptions& options = {},
                                             std::size_t first_index = 0);

}  // namespace larc
