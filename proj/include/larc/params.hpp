#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "larc/dsl.hpp"
#include "larc/tensor.hpp"

namespace larc {

struct ConceptKey {
  std::string name;
  int arity = 1;
  auto operator<=>(const ConceptKey&) const = default;
};

/// Fixed slots of the three 2-layer encoders; concept embeddings follow.
enum class EncoderSlot : std::size_t {
  kUnaryW1, kUnaryB1, kUnaryW2, kUnaryB2,
  kPairW1, kPairB1, kPairW2, kPairB2,
  kTripleW1, kTripleB1, kTripleW2, kTripleB2,
  kCount
};

inline constexpr std::size_t slot_index(EncoderSlot s) { return static_cast<std::size_t>(s); }

struct InitOptions {
  std::size_t attr_dim = 10;
  double geometry_scale = 0.25;
  double temperature = 1.0;
};

/// Every learnable tensor: encoder weights plus one embedding per
/// (concept, arity). Tensors are addressed by slot so gradients can be flat.
class ParamStore {
 public:
  ParamStore() = default;
  ParamStore(std::size_t attr_dim, std::size_t dim, double temperature,
             double geometry_scale);

  std::size_t dim() const { return dim_; }
  std::size_t attr_dim() const { return attr_dim_; }
  double temperature() const { return temperature_; }
  void set_temperature(double t);
  double geometry_scale() const { return geometry_scale_; }

  std::size_t slot_count() const { return tensors_.size(); }
  const Tensor& tensor(std::size_t slot) const { return tensors_.at(slot); }
  Tensor& mutable_tensor(std::size_t slot) { return tensors_.at(slot); }
  const Tensor& tensor(EncoderSlot s) const { return tensors_.at(slot_index(s)); }
  std::string slot_name(std::size_t slot) const;

  bool has_concept(std::string_view name, int arity) const;
  std::optional<std::size_t> embedding_slot(std::string_view name, int arity) const;
  /// Concepts in (name, arity) order.
  std::vector<ConceptKey> concepts() const;
  ConceptVocabulary vocabulary() const;

  std::size_t add_concept(const std::string& name, int arity, Tensor embedding);
  void rename_concept(const std::string& from, const std::string& to, int arity);

  bool all_finite() const;

  bool operator==(const ParamStore&) const = default;

 private:
  std::size_t attr_dim_ = 0;
  std::size_t dim_ = 0;
  double temperature_ = 1.0;
  double geometry_scale_ = 1.0;
  std::vector<Tensor> tensors_;
  std::map<ConceptKey, std::size_t> embeddings_;
};

/// Scaled-uniform initialization, U(-1/sqrt(fan_in), 1/sqrt(fan_in)); biases zero.
ParamStore init_params(const ConceptVocabulary& vocab, std::size_t dim,
                       std::uint64_t seed, const InitOptions& options = {});

/// Adds fresh embeddings for concepts of `vocab` missing from `store`.
void extend_params(ParamStore& store, const ConceptVocabulary& vocab, std::uint64_t seed);

void save_checkpoint(const ParamStore& store, const std::string& path);
std::string checkpoint_text(const ParamStore& store);
ParamStore parse_checkpoint(std::string_view text);

/// Loads a checkpoint. When `expected` is given, a vocabulary mismatch is a
/// kInvalidConfig error unless `extend_vocab` is set, in which case missing
/// concepts get fresh embeddings.
ParamStore load_checkpoint(const std::string& path,
                           const std::optional<ConceptVocabulary>& expected = std::nullopt,
                           bool extend_vocab = false, std::uint64_t seed = 0);

}  // namespace larc
