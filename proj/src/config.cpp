#include "larc/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "larc/error.hpp"

namespace larc {
namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  for (std::string item; std::getline(in, item, ',');) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

const std::map<std::string, std::string>& defaults() {
  static const std::map<std::string, std::string> kDefaults = [] {
    const GeneratorConfig g;
    const BenchmarkConfig b;
    const ExperimentConfig e;
    const RemoteOptions r;
    auto num = [](double v) {
      std::ostringstream o;
      o << v;
      return o.str();
    };
    std::string vocab;
    for (const auto& c : g.vocabulary) vocab += (vocab.empty() ? "" : ",") + c;
    std::string aliases;
    for (const auto& [a, c] : g.aliases) aliases += (aliases.empty() ? "" : ",") + a + ":" + c;
    return std::map<std::string, std::string>{
        {"seed", "1"},
        {"gen.vocabulary", vocab},
        {"gen.aliases", aliases},
        {"gen.min_objects", std::to_string(g.min_objects)},
        {"gen.max_objects", std::to_string(g.max_objects)},
        {"gen.layout_max", num(g.layout_max[0]) + "," + num(g.layout_max[1]) + "," + num(g.layout_max[2])},
        {"gen.allow_collisions", g.allow_collisions ? "true" : "false"},
        {"gen.distractors", g.distractors ? "true" : "false"},
        {"gen.stack_probability", num(g.stack_probability)},
        {"gen.shape_dims", std::to_string(g.shape_dims)},
        {"gen.attribute_sigma", num(g.attribute_sigma)},
        {"gen.prototype_seed", std::to_string(g.prototype_seed)},
        {"rulebook.axis_margin", num(g.rulebook.axis_margin)},
        {"rulebook.near_factor", num(g.rulebook.near_factor)},
        {"rulebook.far_factor", num(g.rulebook.far_factor)},
        {"rulebook.beside_gap_factor", num(g.rulebook.beside_gap_factor)},
        {"noise.spurious_rate", num(g.noise.spurious_rate)},
        {"noise.drop_rate", num(g.noise.drop_rate)},
        {"noise.spurious_attribute_sigma", num(g.noise.spurious_attribute_sigma)},
        {"data.train_scenes", std::to_string(b.train_scenes)},
        {"data.eval_scenes", std::to_string(b.eval_scenes)},
        {"data.queries_per_scene", std::to_string(b.queries_per_scene)},
        {"data.noise_level", num(b.noise_level)},
        {"data.fraction", num(b.data_fraction)},
        {"data.negated_queries", b.negated_queries ? "true" : "false"},
        {"data.require_distractor", b.query_options.require_distractor ? "true" : "false"},
        {"data.alias_probability", num(b.query_options.alias_probability)},
        {"data.holdout", ""},
        {"model.dim", std::to_string(e.dim)},
        {"model.temperature", num(e.init.temperature)},
        {"model.geometry_scale", num(e.init.geometry_scale)},
        {"train.epochs", std::to_string(e.train.epochs)},
        {"train.batch_size", std::to_string(e.train.batch_size)},
        {"train.learning_rate", num(e.train.learning_rate)},
        {"train.optimizer", e.train.optimizer == OptimizerKind::kMomentum ? "momentum" : "sgd"},
        {"train.momentum", num(e.train.momentum)},
        {"train.clip_norm", num(e.train.clip_norm)},
        {"train.track_eval", e.track_eval ? "true" : "false"},
        {"eval.diagnostic_scenes", std::to_string(e.eval.diagnostic_scenes)},
        {"loss.alpha", num(e.weights.alpha)},
        {"loss.beta", num(e.weights.beta)},
        {"loss.gamma", num(e.weights.gamma)},
        {"loss.synonym_aug_prob", num(e.weights.synonym_aug_prob)},
        {"rules.file", ""},
        {"rules.backend", "fixture"},
        {"rules.fixture", ""},
        {"rules.cache_dir", ""},
        {"rules.endpoint", r.endpoint},
        {"rules.model", r.model},
        {"rules.token_env", r.token_env},
        {"rules.timeout", num(r.timeout_seconds)},
        {"rules.retries", std::to_string(r.retries)},
        {"run.workers", "0"},
    };
  }();
  return kDefaults;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* want) {
  fail(ErrorCode::kConfiguration,
       "config key '" + key + "': '" + value + "' is not " + want);
}

double as_double(const ConfigMap& c, const std::string& key) {
  const std::string& v = c.get(key);
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a number");
  return out;
}

std::uint64_t as_uint(const ConfigMap& c, const std::string& key) {
  const std::string& v = c.get(key);
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

bool as_bool(const ConfigMap& c, const std::string& key) {
  const std::string& v = c.get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "a boolean");
}

}  // namespace

ConfigMap ConfigMap::parse(std::string_view text) {
  ConfigMap out;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kConfiguration, "config line " + std::to_string(line_no) + ": expected key = value");
    }
    out.set(trim(std::string_view(t).substr(0, eq)), trim(std::string_view(t).substr(eq + 1)));
  }
  return out;
}

ConfigMap ConfigMap::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kConfiguration, "cannot read config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  ConfigMap base = default_config();
  for (const auto& [k, v] : parse(buf.str()).values()) base.set(k, v);
  return base;
}

void ConfigMap::set(const std::string& key, const std::string& value) {
  if (!defaults().contains(key)) fail(ErrorCode::kConfiguration, "unknown config key '" + key + "'");
  values_[key] = value;
}

void ConfigMap::apply_override(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos) {
    fail(ErrorCode::kConfiguration, "override '" + std::string(assignment) + "' is not key=value");
  }
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

const std::string& ConfigMap::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  auto d = defaults().find(key);
  if (d == defaults().end()) fail(ErrorCode::kConfiguration, "unknown config key '" + key + "'");
  return d->second;
}

std::string ConfigMap::text() const {
  std::ostringstream out;
  for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
  return out.str();
}

ConfigMap default_config() {
  ConfigMap c;
  for (const auto& [k, v] : defaults()) c.set(k, v);
  return c;
}

RunSettings resolve_settings(const ConfigMap& c) {
  RunSettings s;
  ExperimentConfig& e = s.experiment;
  GeneratorConfig& g = e.benchmark.generator;
  e.seed = as_uint(c, "seed");

  g.vocabulary = split_list(c.get("gen.vocabulary"));
  g.aliases.clear();
  for (const auto& pair : split_list(c.get("gen.aliases"))) {
    const auto colon = pair.find(':');
    if (colon == std::string::npos) bad_value("gen.aliases", pair, "an alias:category pair");
    g.aliases[trim(pair.substr(0, colon))] = trim(pair.substr(colon + 1));
  }
  g.min_objects = as_uint(c, "gen.min_objects");
  g.max_objects = as_uint(c, "gen.max_objects");
  const auto layout = split_list(c.get("gen.layout_max"));
  if (layout.size() != 3) bad_value("gen.layout_max", c.get("gen.layout_max"), "three numbers");
  for (std::size_t a = 0; a < 3; ++a) {
    try {
      g.layout_max[a] = std::stod(layout[a]);
    } catch (const std::exception&) {
      bad_value("gen.layout_max", layout[a], "a number");
    }
  }
  g.allow_collisions = as_bool(c, "gen.allow_collisions");
  g.distractors = as_bool(c, "gen.distractors");
  g.stack_probability = as_double(c, "gen.stack_probability");
  g.shape_dims = as_uint(c, "gen.shape_dims");
  g.attribute_sigma = as_double(c, "gen.attribute_sigma");
  g.prototype_seed = as_uint(c, "gen.prototype_seed");
  g.rulebook.axis_margin = as_double(c, "rulebook.axis_margin");
  g.rulebook.near_factor = as_double(c, "rulebook.near_factor");
  g.rulebook.far_factor = as_double(c, "rulebook.far_factor");
  g.rulebook.beside_gap_factor = as_double(c, "rulebook.beside_gap_factor");
  g.noise.spurious_rate = as_double(c, "noise.spurious_rate");
  g.noise.drop_rate = as_double(c, "noise.drop_rate");
  g.noise.spurious_attribute_sigma = as_double(c, "noise.spurious_attribute_sigma");

  BenchmarkConfig& b = e.benchmark;
  b.train_scenes = as_uint(c, "data.train_scenes");
  b.eval_scenes = as_uint(c, "data.eval_scenes");
  b.queries_per_scene = as_uint(c, "data.queries_per_scene");
  b.noise_level = as_double(c, "data.noise_level");
  b.data_fraction = as_double(c, "data.fraction");
  b.negated_queries = as_bool(c, "data.negated_queries");
  b.query_options.require_distractor = as_bool(c, "data.require_distractor");
  b.query_options.alias_probability = as_double(c, "data.alias_probability");
  b.holdout = Holdout::parse(c.get("data.holdout"));

  e.dim = as_uint(c, "model.dim");
  e.init.temperature = as_double(c, "model.temperature");
  e.init.geometry_scale = as_double(c, "model.geometry_scale");
  e.train.epochs = as_uint(c, "train.epochs");
  e.train.batch_size = as_uint(c, "train.batch_size");
  e.train.learning_rate = as_double(c, "train.learning_rate");
  const std::string& opt = c.get("train.optimizer");
  if (opt == "sgd") {
    e.train.optimizer = OptimizerKind::kSgd;
  } else if (opt == "momentum") {
    e.train.optimizer = OptimizerKind::kMomentum;
  } else {
    bad_value("train.optimizer", opt, "sgd or momentum");
  }
  e.train.momentum = as_double(c, "train.momentum");
  e.train.clip_norm = as_double(c, "train.clip_norm");
  e.track_eval = as_bool(c, "train.track_eval");
  e.eval.diagnostic_scenes = as_uint(c, "eval.diagnostic_scenes");
  e.weights.alpha = as_double(c, "loss.alpha");
  e.weights.beta = as_double(c, "loss.beta");
  e.weights.gamma = as_double(c, "loss.gamma");
  e.weights.synonym_aug_prob = as_double(c, "loss.synonym_aug_prob");

  s.rules_path = c.get("rules.file");
  try {
    s.backend.kind = parse_backend_kind(c.get("rules.backend"));
  } catch (const Error&) {
    bad_value("rules.backend", c.get("rules.backend"), "remote, replay or fixture");
  }
  s.backend.fixture_path = c.get("rules.fixture");
  s.backend.cache_dir = c.get("rules.cache_dir");
  s.backend.remote.endpoint = c.get("rules.endpoint");
  s.backend.remote.model = c.get("rules.model");
  s.backend.remote.token_env = c.get("rules.token_env");
  s.backend.remote.timeout_seconds = as_double(c, "rules.timeout");
  s.backend.remote.retries = static_cast<int>(as_uint(c, "rules.retries"));
  s.workers = static_cast<int>(as_uint(c, "run.workers"));

  try {
    e.validate();
  } catch (const Error& err) {
    fail(ErrorCode::kConfiguration, err.what());
  }
  return s;
}

}  // namespace larc
