#include <doctest.h>

#include <random>

#include "larc/error.hpp"
#include "larc/exec.hpp"
#include "larc/dsl.hpp"
#include "larc/rules.hpp"
#include "larc/scene.hpp"

using namespace larc;

namespace {

Program random_ast(std::mt19937_64& rng, int depth) {
  static const std::vector<std::string> kNames{"chair", "shelf", "dining_table", "lamp", "x1"};
  static const std::vector<std::string> kRel{"left", "near", "behind", "close_to"};
  std::uniform_int_distribution<int> kind(0, depth <= 0 ? 1 : 4);
  auto name = [&](const std::vector<std::string>& v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  };
  switch (kind(rng)) {
    case 0: return Program::scene();
    case 1: return Program::filter(depth <= 0 ? Program::scene() : random_ast(rng, depth - 1), name(kNames));
    case 2: return Program::filter(random_ast(rng, depth - 1), name(kNames));
    case 3:
      return Program::relate(random_ast(rng, depth - 1), random_ast(rng, depth - 1), name(kRel),
                             std::bernoulli_distribution(0.3)(rng));
    default:
      return Program::relate_ternary(random_ast(rng, depth - 1), random_ast(rng, depth - 1),
                                     random_ast(rng, depth - 1), "between",
                                     std::bernoulli_distribution(0.2)(rng));
  }
}

Scene line_scene(std::vector<std::pair<std::string, double>> objects) {
  Scene s;
  int id = 0;
  for (const auto& [cat, x] : objects) {
    SceneObject o;
    o.id = id++;
    o.category = cat;
    o.box = Box3{{x, 1.0, 0.5}, {0.5, 0.5, 0.5}};
    o.attributes.assign(GeneratorConfig{}.attribute_dim(), 0.0);
    s.objects.push_back(o);
  }
  return s;
}

TemplateSpec template_for(const std::string& relation) {
  for (const auto& t : default_templates()) {
    if (t.relation == relation) return t;
  }
  FAIL("no template for " << relation);
  return {};
}

}  // namespace

TEST_SUITE("dsl") {

TEST_CASE("parse the chair beside the shelf") {
  const Program p = parse_program("relate(filter(scene(), chair), filter(scene(), shelf), beside)");
  REQUIRE(p.kind() == NodeKind::kRelate);
  CHECK(p.name() == "beside");
  CHECK_FALSE(p.negated());
  CHECK(p.children()[0] == Program::filter(Program::scene(), "chair"));
  CHECK(p.children()[1] == Program::filter(Program::scene(), "shelf"));
}

TEST_CASE("parse leaf and negation") {
  CHECK(parse_program("scene()") == Program::scene());
  CHECK(parse_program("  scene ( ) ") == Program::scene());
  const Program p =
      parse_program("relate(filter(scene(), box), filter(scene(), cabinet), not behind)");
  CHECK(p.negated());
  CHECK(p.name() == "behind");
}

TEST_CASE("print canonical text") {
  CHECK(print_program(Program::scene()) == "scene()");
  CHECK(print_program(Program::filter(Program::scene(), "chair")) == "filter(scene(), chair)");
  CHECK(print_program(Program::relate(Program::scene(), Program::scene(), "left", true)) ==
        "relate(scene(), scene(), not left)");
}

TEST_CASE("round trip over random trees") {
  std::mt19937_64 rng(17);
  for (int t = 0; t < 10000; ++t) {
    const Program p = random_ast(rng, 4);
    const std::string text = print_program(p);
    const Program q = parse_program(text);
    CHECK(q == p);
    CHECK(print_program(q) == text);
  }
}

TEST_CASE("syntax errors carry offsets") {
  const char* bad[] = {"",
                       "scene(",
                       "filter(scene())",
                       "relate(filter(scene(), chair), beside)",
                       "relate(scene(), scene(), scene())",
                       "filter(scene(), not chair)",
                       "frobnicate(scene())",
                       "scene() scene()",
                       "filter(scene(), 9lives)"};
  for (const char* text : bad) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse_program(text), ParseError);
  }
  try {
    parse_program("filter(scene(), chair");
  } catch (const ParseError& e) {
    CHECK(e.offset() == 21);
    CHECK(e.code() == ErrorCode::kParse);
  }
}

TEST_CASE("concept normalization") {
  CHECK(normalize_concept("Dining Table") == "dining_table");
  CHECK(normalize_concept("night-stand") == "night_stand");
  CHECK_THROWS_AS(normalize_concept("a/b"), Error);
  CHECK(is_concept_identifier("left"));
  CHECK_FALSE(is_concept_identifier("Left"));
}

TEST_CASE("extract concepts") {
  const std::vector<Program> corpus{
      parse_program("relate(filter(scene(), chair), filter(scene(), shelf), beside)")};
  const ConceptVocabulary v = extract_concepts(corpus);
  CHECK(v.unary == std::set<std::string>{"chair", "shelf"});
  CHECK(v.binary == std::set<std::string>{"beside"});
  CHECK(v.ternary.empty());

  CHECK(extract_concepts(std::vector<Program>{}).empty());

  const std::vector<Program> conflict{
      parse_program("relate(scene(), scene(), near)"),
      parse_program("relate_ternary(scene(), scene(), scene(), near)")};
  try {
    extract_concepts(conflict);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kConflictingArity);
  }
}

TEST_CASE("extract concepts is order-insensitive and idempotent") {
  std::mt19937_64 rng(3);
  std::vector<Program> corpus;
  for (int i = 0; i < 50; ++i) corpus.push_back(random_ast(rng, 3));
  const ConceptVocabulary v = extract_concepts(corpus);
  std::vector<Program> reversed(corpus.rbegin(), corpus.rend());
  CHECK(extract_concepts(reversed) == v);
  std::vector<Program> doubled = corpus;
  doubled.insert(doubled.end(), corpus.begin(), corpus.end());
  CHECK(extract_concepts(doubled) == v);
}

TEST_CASE("query over a two-object scene") {
  const Scene s = line_scene({{"chair", 0.0}, {"shelf", 3.0}});
  const GeneratorConfig config;
  const GroundingQuery q = generate_query(s, template_for("left"), 1, config);
  CHECK(q.answer == 0);
  CHECK(q.program == parse_program("relate(filter(scene(), chair), filter(scene(), shelf), left)"));
  CHECK(q.utterance.find("chair") != std::string::npos);
  CHECK(q.utterance.find("shelf") != std::string::npos);
}

TEST_CASE("ambiguous target is not realizable") {
  const Scene s = line_scene({{"chair", 0.0}, {"shelf", 1.2}, {"chair", 2.4}});
  REQUIRE(oracle_relation(s, "beside", 0, 1));
  REQUIRE(oracle_relation(s, "beside", 2, 1));
  try {
    generate_query(s, template_for("beside"), 1, GeneratorConfig{});
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNotRealizable);
  }
}

TEST_CASE("generated queries are answered by the oracle executor") {
  const GeneratorConfig config;
  const RuleSet rules = default_rules();
  std::vector<TemplateSpec> templates = default_templates();
  for (const auto& t : negated_templates()) templates.push_back(t);
  std::size_t checked = 0;
  std::size_t mismatched = 0;
  for (std::uint64_t seed = 0; checked < 10000; ++seed) {
    const Scene s = generate_scene(config, seed);
    for (std::size_t t = 0; t < templates.size() && checked < 10000; ++t) {
      QueryOptions opts;
      opts.alias_probability = 0.3;
      GroundingQuery q;
      try {
        q = generate_query(s, templates[t], seed * 131 + t, config, opts);
      } catch (const Error& e) {
        REQUIRE(e.code() == ErrorCode::kNotRealizable);
        continue;
      }
      OracleScores oracle(s, config);
      ad::Tape tape(ad::Tape::Mode::kInference);
      const ExecutionTrace trace = execute(q.program, oracle, rules, tape);
      if (predict(trace) != q.answer) ++mismatched;
      ++checked;
    }
  }
  CHECK(mismatched == 0);
}

TEST_CASE("paraphrases compile to the same programs") {
  const auto base = default_templates();
  const auto para = paraphrase_templates();
  CHECK(para.size() >= 1);
  for (const auto& p : para) {
    bool found = false;
    for (const auto& b : base) found = found || (b.relation == p.relation && b.arity == p.arity);
    CHECK(found);
  }
}

}  // TEST_SUITE
