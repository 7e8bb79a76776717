#include "larc/concepts.hpp"

#include <string>

#include "larc/error.hpp"
#include "larc/kernels.hpp"

namespace larc {
namespace {

ad::Var mlp(ad::Tape& tape, ad::Var input, const ParamStore& params, EncoderSlot first) {
  const std::size_t s = slot_index(first);
  const ad::Var w1 = tape.parameter(params.tensor(s), s);
  const ad::Var b1 = tape.parameter(params.tensor(s + 1), s + 1);
  const ad::Var w2 = tape.parameter(params.tensor(s + 2), s + 2);
  const ad::Var b2 = tape.parameter(params.tensor(s + 3), s + 3);
  return tape.affine(tape.tanh(tape.affine(input, w1, b1)), w2, b2);
}

ad::Var embedding(ad::Tape& tape, std::string_view name, int arity, const ParamStore& params) {
  auto slot = params.embedding_slot(name, arity);
  if (!slot) {
    fail(ErrorCode::kUnknownConcept, "no learned " + std::to_string(arity) +
                                         "-ary concept '" + std::string(name) + "'");
  }
  return tape.parameter(params.tensor(*slot), *slot);
}

}  // namespace

SceneFeatures encode_scene(ad::Tape& tape, std::span<const Detection> detections,
                           const ParamStore& params) {
  if (detections.empty()) fail(ErrorCode::kEmptyScene, "nothing detected in scene");
  const std::size_t n = detections.size();
  const std::size_t attr_dim = params.attr_dim();

  SceneFeatures f;
  f.n = n;
  f.attributes.reserve(n * attr_dim);
  f.centers.reserve(n * 3);
  for (const auto& det : detections) {
    if (det.attributes.size() != attr_dim) {
      fail(ErrorCode::kInvalidArguments,
           "detection has " + std::to_string(det.attributes.size()) +
               " attributes, encoder expects " + std::to_string(attr_dim));
    }
    f.attributes.insert(f.attributes.end(), det.attributes.begin(), det.attributes.end());
    f.centers.insert(f.centers.end(), det.box.center.begin(), det.box.center.end());
  }

  f.object = mlp(tape, tape.constant(Tensor({n, attr_dim}, f.attributes)), params,
                 EncoderSlot::kUnaryW1);

  const std::size_t pairs = n * (n - 1);
  const std::size_t width = 2 * attr_dim + kernels::kPairGeometry;
  Tensor rows({pairs, width});
  kernels::pair_inputs(f.attributes, n, attr_dim, f.centers, params.geometry_scale(), rows.data);
  f.pair = mlp(tape, tape.constant(std::move(rows)), params, EncoderSlot::kPairW1);
  return f;
}

SceneFeatures encode_scene(ad::Tape& tape, const DetectedScene& detected,
                           const ParamStore& params) {
  return encode_scene(tape, std::span<const Detection>(detected.detections), params);
}

ad::Var ensure_triple_features(ad::Tape& tape, SceneFeatures& f, const ParamStore& params) {
  if (f.triple) return *f.triple;
  const std::size_t attr_dim = params.attr_dim();
  const std::size_t count = valid_relation_slots(f.n, 3);
  const std::size_t width = 3 * attr_dim + kernels::kTripleGeometry;
  Tensor rows({count, width});
  if (count > 0) {
    kernels::triple_inputs(f.attributes, f.n, attr_dim, f.centers, params.geometry_scale(),
                           rows.data);
  }
  f.triple = mlp(tape, tape.constant(std::move(rows)), params, EncoderSlot::kTripleW1);
  return *f.triple;
}

ad::Var unary_scores(ad::Tape& tape, const SceneFeatures& f, std::string_view name,
                     const ParamStore& params) {
  const ad::Var e = embedding(tape, name, 1, params);
  return tape.rowdot(f.object, e, 1.0 / params.temperature());
}

ad::Var binary_scores(ad::Tape& tape, const SceneFeatures& f, std::string_view name,
                      const ParamStore& params) {
  const ad::Var e = embedding(tape, name, 2, params);
  return tape.scatter_relation(tape.rowdot(f.pair, e, 1.0 / params.temperature()), f.n, 2);
}

ad::Var ternary_scores(ad::Tape& tape, SceneFeatures& f, std::string_view name,
                       const ParamStore& params) {
  const ad::Var e = embedding(tape, name, 3, params);
  const ad::Var rows = ensure_triple_features(tape, f, params);
  return tape.scatter_relation(tape.rowdot(rows, e, 1.0 / params.temperature()), f.n, 3);
}

}  // namespace larc
