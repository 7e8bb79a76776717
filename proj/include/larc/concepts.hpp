#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "larc/params.hpp"
#include "larc/scene.hpp"
#include "larc/tape.hpp"

namespace larc {

/// Encoded object, pair and (lazily) triple features for one observed scene.
struct SceneFeatures {
  std::size_t n = 0;
  /// n × d.
  ad::Var object;
  /// n(n-1) × d, one row per ordered pair i != j in lexicographic order.
  ad::Var pair;
  /// n(n-1)(n-2) × d, built on first use by ensure_triple_features().
  std::optional<ad::Var> triple;

  std::vector<double> attributes;  // n × attr_dim
  std::vector<double> centers;     // n × 3
};

/// Runs the unary and pair encoders over the detections. Reads only boxes
/// and attributes.
SceneFeatures encode_scene(ad::Tape& tape, std::span<const Detection> detections,
                           const ParamStore& params);
SceneFeatures encode_scene(ad::Tape& tape, const DetectedScene& detected,
                           const ParamStore& params);

ad::Var ensure_triple_features(ad::Tape& tape, SceneFeatures& features,
                               const ParamStore& params);

/// y_i = <object_i, e_c> / tau.
ad::Var unary_scores(ad::Tape& tape, const SceneFeatures& features,
                     std::string_view concept_name, const ParamStore& params);
/// n × n relation logits with the diagonal masked.
ad::Var binary_scores(ad::Tape& tape, const SceneFeatures& features,
                      std::string_view concept_name, const ParamStore& params);
/// n × n × n relation logits with repeated-index slots masked.
ad::Var ternary_scores(ad::Tape& tape, SceneFeatures& features,
                       std::string_view concept_name, const ParamStore& params);

}  // namespace larc
