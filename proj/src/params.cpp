#include "larc/params.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "larc/error.hpp"
#include "larc/random.hpp"

namespace larc {
namespace {

constexpr const char* kFormat = "larc-checkpoint";
constexpr int kVersion = 1;

constexpr const char* kEncoderNames[] = {
    "unary.w1",  "unary.b1",  "unary.w2",  "unary.b2",
    "pair.w1",   "pair.b1",   "pair.w2",   "pair.b2",
    "triple.w1", "triple.b1", "triple.w2", "triple.b2"};

void fill_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.data) v = dist(rng);
}

std::size_t pair_input_dim(std::size_t attr_dim) { return 2 * attr_dim + 4; }
std::size_t triple_input_dim(std::size_t attr_dim) { return 3 * attr_dim + 8; }

Tensor fresh_embedding(std::size_t dim, std::uint64_t seed, const ConceptKey& key) {
  Rng rng = make_rng(seed, "embedding:" + key.name, static_cast<std::uint64_t>(key.arity));
  Tensor e({dim});
  fill_uniform(e, dim, rng);
  return e;
}

}  // namespace

ParamStore::ParamStore(std::size_t attr_dim, std::size_t dim, double temperature,
                       double geometry_scale)
    : attr_dim_(attr_dim), dim_(dim), geometry_scale_(geometry_scale) {
  if (dim == 0) fail(ErrorCode::kInvalidConfig, "embedding dimension must be >= 1");
  if (attr_dim == 0) fail(ErrorCode::kInvalidConfig, "attribute dimension must be >= 1");
  set_temperature(temperature);
  const std::size_t inputs[] = {attr_dim, pair_input_dim(attr_dim), triple_input_dim(attr_dim)};
  for (std::size_t in : inputs) {
    tensors_.emplace_back(std::vector<std::size_t>{in, dim});
    tensors_.emplace_back(std::vector<std::size_t>{dim});
    tensors_.emplace_back(std::vector<std::size_t>{dim, dim});
    tensors_.emplace_back(std::vector<std::size_t>{dim});
  }
}

void ParamStore::set_temperature(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) {
    fail(ErrorCode::kInvalidConfig, "temperature must be positive and finite");
  }
  temperature_ = t;
}

std::string ParamStore::slot_name(std::size_t slot) const {
  if (slot < slot_index(EncoderSlot::kCount)) return kEncoderNames[slot];
  for (const auto& [key, s] : embeddings_) {
    if (s == slot) return "embedding." + key.name + "/" + std::to_string(key.arity);
  }
  return "slot." + std::to_string(slot);
}

bool ParamStore::has_concept(std::string_view name, int arity) const {
  return embedding_slot(name, arity).has_value();
}

std::optional<std::size_t> ParamStore::embedding_slot(std::string_view name, int arity) const {
  auto it = embeddings_.find(ConceptKey{std::string(name), arity});
  if (it == embeddings_.end()) return std::nullopt;
  return it->second;
}

std::vector<ConceptKey> ParamStore::concepts() const {
  std::vector<ConceptKey> out;
  for (const auto& [key, slot] : embeddings_) out.push_back(key);
  return out;
}

ConceptVocabulary ParamStore::vocabulary() const {
  ConceptVocabulary v;
  for (const auto& [key, slot] : embeddings_) {
    (key.arity == 1 ? v.unary : key.arity == 2 ? v.binary : v.ternary).insert(key.name);
  }
  return v;
}

std::size_t ParamStore::add_concept(const std::string& name, int arity, Tensor embedding) {
  if (arity < 1 || arity > 3) fail(ErrorCode::kInvalidArguments, "arity must be 1, 2 or 3");
  if (embedding.rank() != 1 || embedding.size() != dim_) {
    fail(ErrorCode::kInvalidArguments, "embedding for '" + name + "' has the wrong length");
  }
  for (const auto& [key, slot] : embeddings_) {
    if (key.name == name) {
      fail(key.arity == arity ? ErrorCode::kInvalidArguments : ErrorCode::kConflictingArity,
           "concept '" + name + "' already present");
    }
  }
  tensors_.push_back(std::move(embedding));
  embeddings_.emplace(ConceptKey{name, arity}, tensors_.size() - 1);
  return tensors_.size() - 1;
}

void ParamStore::rename_concept(const std::string& from, const std::string& to, int arity) {
  auto it = embeddings_.find(ConceptKey{from, arity});
  if (it == embeddings_.end()) {
    fail(ErrorCode::kUnknownConcept, "no concept '" + from + "'");
  }
  const std::size_t slot = it->second;
  embeddings_.erase(it);
  embeddings_.emplace(ConceptKey{to, arity}, slot);
}

bool ParamStore::all_finite() const {
  for (const auto& t : tensors_)
    for (double v : t.data)
      if (!std::isfinite(v)) return false;
  return true;
}

ParamStore init_params(const ConceptVocabulary& vocab, std::size_t dim, std::uint64_t seed,
                       const InitOptions& options) {
  if (vocab.empty()) fail(ErrorCode::kInvalidConfig, "cannot initialize an empty vocabulary");
  ParamStore store(options.attr_dim, dim, options.temperature, options.geometry_scale);
  Rng rng = make_rng(seed, "encoders");
  for (std::size_t s = 0; s < slot_index(EncoderSlot::kCount); ++s) {
    Tensor& t = store.mutable_tensor(s);
    if (t.rank() == 2) fill_uniform(t, t.dim(0), rng);
  }
  extend_params(store, vocab, seed);
  return store;
}

void extend_params(ParamStore& store, const ConceptVocabulary& vocab, std::uint64_t seed) {
  auto add = [&](const std::set<std::string>& names, int arity) {
    for (const auto& name : names) {
      if (store.has_concept(name, arity)) continue;
      store.add_concept(name, arity, fresh_embedding(store.dim(), seed, {name, arity}));
    }
  };
  add(vocab.unary, 1);
  add(vocab.binary, 2);
  add(vocab.ternary, 3);
}

std::string checkpoint_text(const ParamStore& store) {
  nlohmann::json j;
  j["format"] = kFormat;
  j["version"] = kVersion;
  j["dim"] = store.dim();
  j["attr_dim"] = store.attr_dim();
  j["temperature"] = store.temperature();
  j["geometry_scale"] = store.geometry_scale();
  nlohmann::json weights = nlohmann::json::object();
  for (std::size_t s = 0; s < slot_index(EncoderSlot::kCount); ++s) {
    weights[kEncoderNames[s]] = {{"shape", store.tensor(s).shape},
                                 {"data", store.tensor(s).data}};
  }
  j["weights"] = std::move(weights);
  nlohmann::json concepts = nlohmann::json::array();
  // Slot order, so a parsed checkpoint has the same layout.
  std::vector<ConceptKey> keys = store.concepts();
  std::sort(keys.begin(), keys.end(), [&](const ConceptKey& a, const ConceptKey& b) {
    return *store.embedding_slot(a.name, a.arity) < *store.embedding_slot(b.name, b.arity);
  });
  for (const auto& key : keys) {
    concepts.push_back({{"name", key.name},
                        {"arity", key.arity},
                        {"embedding", store.tensor(*store.embedding_slot(key.name, key.arity)).data}});
  }
  j["concepts"] = std::move(concepts);
  return j.dump(1) + "\n";
}

void save_checkpoint(const ParamStore& store, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write checkpoint '" + path + "'");
  out << checkpoint_text(store);
}

ParamStore parse_checkpoint(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("checkpoint is not valid JSON: ") + e.what());
  }
  if (j.value("format", "") != kFormat || j.value("version", 0) != kVersion) {
    fail(ErrorCode::kFormat, "not a version-1 larc checkpoint");
  }
  try {
    ParamStore store(j.at("attr_dim").get<std::size_t>(), j.at("dim").get<std::size_t>(),
                     j.at("temperature").get<double>(), j.at("geometry_scale").get<double>());
    for (std::size_t s = 0; s < slot_index(EncoderSlot::kCount); ++s) {
      const auto& w = j.at("weights").at(kEncoderNames[s]);
      Tensor t(w.at("shape").get<std::vector<std::size_t>>(),
               w.at("data").get<std::vector<double>>());
      if (t.shape != store.tensor(s).shape || t.size() != Tensor::element_count(t.shape)) {
        fail(ErrorCode::kFormat, std::string("weight '") + kEncoderNames[s] + "' has the wrong shape");
      }
      store.mutable_tensor(s) = std::move(t);
    }
    for (const auto& c : j.at("concepts")) {
      store.add_concept(c.at("name").get<std::string>(), c.at("arity").get<int>(),
                        Tensor::vector(c.at("embedding").get<std::vector<double>>()));
    }
    return store;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kFormat, std::string("malformed checkpoint: ") + e.what());
  }
}

ParamStore load_checkpoint(const std::string& path,
                           const std::optional<ConceptVocabulary>& expected,
                           bool extend_vocab, std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot read checkpoint '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  ParamStore store = parse_checkpoint(buf.str());
  if (expected && store.vocabulary() != *expected) {
    if (!extend_vocab) {
      fail(ErrorCode::kInvalidConfig,
           "checkpoint vocabulary differs from the requested one (use --extend-vocab)");
    }
    extend_params(store, *expected, seed);
  }
  return store;
}

}  // namespace larc
