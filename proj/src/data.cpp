#include "larc/data.hpp"

#include <fstream>

#include "json.hpp"
#include "larc/error.hpp"
#include "larc/random.hpp"

namespace larc {
namespace {

using nlohmann::json;

constexpr const char* kSceneFormat = "larc-scenes";
constexpr const char* kQueryFormat = "larc-queries";
constexpr int kVersion = 1;

json box_json(const Box3& b) { return {{"center", b.center}, {"extent", b.extent}}; }

Box3 box_from(const json& j) {
  Box3 b;
  b.center = j.at("center").get<Vec3>();
  b.extent = j.at("extent").get<Vec3>();
  return b;
}

void write_lines(const std::string& path, const char* format, const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::kIo, "cannot write '" + path + "'");
  out << json{{"format", format}, {"version", kVersion}, {"records", lines.size()}}.dump() << '\n';
  for (const auto& line : lines) out << line << '\n';
}

std::vector<std::string> read_lines(const std::string& path, const char* format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot read '" + path + "'");
  std::string header;
  if (!std::getline(in, header)) fail(ErrorCode::kFormat, "'" + path + "' is empty");
  try {
    const json h = json::parse(header);
    if (h.at("format") != format || h.at("version") != kVersion) {
      fail(ErrorCode::kFormat, "'" + path + "' is not a " + format + " v1 file");
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, "'" + path + "': bad header: " + e.what());
  }
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) lines.push_back(std::move(line));
  }
  return lines;
}

}  // namespace

TrainingSet make_training_set(const Dataset& data) {
  TrainingSet set;
  set.scenes.reserve(data.scenes.size());
  for (const auto& s : data.scenes) set.scenes.push_back(s.detections);
  for (const auto& q : data.queries) {
    const auto& match = data.scenes.at(q.scene_index).match;
    if (q.answer >= match.size() || !match[q.answer]) continue;
    set.items.push_back({q.scene_index, q.program, *match[q.answer]});
  }
  return set;
}

std::string scene_record(const DetectedScene& scene) {
  json objects = json::array();
  for (const auto& o : scene.source.objects) {
    objects.push_back({{"id", o.id},
                       {"category", o.category},
                       {"box", box_json(o.box)},
                       {"attributes", o.attributes}});
  }
  json detections = json::array();
  for (const auto& d : scene.detections) {
    detections.push_back({{"box", box_json(d.box)}, {"attributes", d.attributes}});
  }
  json match = json::array();
  for (const auto& m : scene.match) match.push_back(m ? json(*m) : json(nullptr));
  return json{{"seed", scene.source.seed},
              {"objects", objects},
              {"detections", detections},
              {"match", match},
              {"noise_level", scene.noise_level}}
      .dump();
}

DetectedScene parse_scene_record(const std::string& line) {
  try {
    const json j = json::parse(line);
    DetectedScene s;
    s.source.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& o : j.at("objects")) {
      s.source.objects.push_back({o.at("id").get<int>(), box_from(o.at("box")),
                                  o.at("category").get<std::string>(),
                                  o.at("attributes").get<std::vector<double>>()});
    }
    for (const auto& d : j.at("detections")) {
      s.detections.push_back({box_from(d.at("box")), d.at("attributes").get<std::vector<double>>()});
    }
    for (const auto& m : j.at("match")) {
      s.match.push_back(m.is_null() ? std::nullopt : std::optional<std::size_t>(m.get<std::size_t>()));
    }
    s.noise_level = j.at("noise_level").get<double>();
    return s;
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("bad scene record: ") + e.what());
  }
}

std::string query_record(const GroundingQuery& q) {
  return json{{"utterance", q.utterance},
              {"program", print_program(q.program)},
              {"scene", q.scene_index},
              {"answer", q.answer},
              {"template", q.template_name}}
      .dump();
}

GroundingQuery parse_query_record(const std::string& line) {
  try {
    const json j = json::parse(line);
    GroundingQuery q;
    q.utterance = j.at("utterance").get<std::string>();
    q.program = parse_program(j.at("program").get<std::string>());
    q.scene_index = j.at("scene").get<std::size_t>();
    q.answer = j.at("answer").get<std::size_t>();
    q.template_name = j.value("template", "");
    return q;
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, std::string("bad query record: ") + e.what());
  }
}

void save_scenes(const std::vector<DetectedScene>& scenes, const std::string& path) {
  std::vector<std::string> lines;
  for (const auto& s : scenes) lines.push_back(scene_record(s));
  write_lines(path, kSceneFormat, lines);
}

std::vector<DetectedScene> load_scenes(const std::string& path) {
  std::vector<DetectedScene> out;
  for (const auto& line : read_lines(path, kSceneFormat)) out.push_back(parse_scene_record(line));
  return out;
}

void save_queries(const std::vector<GroundingQuery>& queries, const std::string& path) {
  std::vector<std::string> lines;
  for (const auto& q : queries) lines.push_back(query_record(q));
  write_lines(path, kQueryFormat, lines);
}

std::vector<GroundingQuery> load_queries(const std::string& path) {
  std::vector<GroundingQuery> out;
  for (const auto& line : read_lines(path, kQueryFormat)) out.push_back(parse_query_record(line));
  return out;
}

}  // namespace larc

namespace larc {

std::vector<GroundingQuery> generate_queries(std::span<const DetectedScene> scenes,
                                             std::span<const TemplateSpec> templates,
                                             const GeneratorConfig& generator,
                                             std::uint64_t seed, std::size_t per_scene,
                                             const QueryOptions& options,
                                             std::size_t first_index) {
  std::vector<GroundingQuery> out;
  if (templates.empty()) return out;
  const std::size_t attempts = 4 * templates.size();
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    const DetectedScene& scene = scenes[s];
    Rng rng = make_rng(seed, "query-templates", s + first_index);
    std::uniform_int_distribution<std::size_t> pick(0, templates.size() - 1);
    std::size_t made = 0;
    for (std::size_t a = 0; a < attempts * per_scene && made < per_scene; ++a) {
      const TemplateSpec& spec = templates[pick(rng)];
      GroundingQuery q;
      try {
        q = generate_query(scene.source, spec, derive_seed(seed, "query", (s + first_index) * 4096 + a),
                           generator, options);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::kNotRealizable) continue;
        throw;
      }
      ++made;
      if (q.answer >= scene.match.size() || !scene.match[q.answer]) continue;
      q.scene_index = s + first_index;
      out.push_back(std::move(q));
    }
  }
  return out;
}

}  // namespace larc
