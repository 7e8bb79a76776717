#include <doctest.h>

#include <cmath>
#include <random>

#include "larc/error.hpp"
#include "larc/experiment.hpp"
#include "larc/kernels.hpp"
#include "larc/learn.hpp"

using namespace larc;

namespace {

Tensor pair_matrix(double p01, double p10) {
  Tensor p = masked_relation(2, 2);
  p.at(0, 1) = p01;
  p.at(1, 0) = p10;
  return p;
}

/// Fixed relation tensors, for checking the loss wiring without encoders.
class FixedScores : public ScoreSource {
 public:
  FixedScores(std::size_t n, Tensor binary) : n_(n), binary_(std::move(binary)) {}
  std::size_t size() const override { return n_; }
  ad::Var unary(ad::Tape& tape, std::string_view) override {
    return tape.constant(Tensor({n_}, 0.0));
  }
  std::optional<ad::Var> binary(ad::Tape& tape, std::string_view) override {
    return tape.constant(binary_);
  }
  std::optional<ad::Var> ternary(ad::Tape&, std::string_view) override { return std::nullopt; }

 private:
  std::size_t n_;
  Tensor binary_;
};

std::vector<Detection> line_detections(std::size_t n, std::size_t attr_dim, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> a(-1.0, 1.0);
  std::vector<Detection> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i].box = Box3{{1.5 * static_cast<double>(i), 0.3 * a(rng), 0.5}, {0.4, 0.4, 0.5}};
    out[i].attributes.resize(attr_dim);
    for (auto& x : out[i].attributes) x = a(rng);
  }
  return out;
}

ConceptVocabulary toy_vocab() {
  ConceptVocabulary v;
  v.unary = {"chair", "shelf", "wardrobe", "dresser"};
  v.binary = {"left", "near", "right"};
  return v;
}

TrainingSet toy_set() {
  TrainingSet t;
  t.scenes.push_back(line_detections(4, 10, 1));
  t.items.push_back({0, parse_program("relate(filter(scene(), chair), filter(scene(), shelf), left)"), 1});
  return t;
}

}  // namespace

TEST_SUITE("learn") {

TEST_CASE("prediction loss hand values") {
  CHECK(std::abs(prediction_loss(std::vector<double>{0, 0}, 0) - std::log(2.0)) < 1e-12);
  CHECK(prediction_loss(std::vector<double>{30, -30}, 0) < 1e-12);
  CHECK(prediction_loss(std::vector<double>{30, -30}, 0) >= 0.0);
  try {
    prediction_loss(std::vector<double>{0, 0}, 2);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kOutOfRange);
  }
  ad::Tape tape;
  const ad::Var x = tape.parameter(Tensor::vector({0.0, 0.0}), 0);
  ad::Gradients g(1);
  tape.backward(tape.cross_entropy(x, 1), g);
  CHECK(std::abs(g[0][0] - 0.5) < 1e-12);
  CHECK(std::abs(g[0][1] + 0.5) < 1e-12);
}

TEST_CASE("symmetry loss hand values") {
  CHECK(symmetry_loss(pair_matrix(1, 1)) == 0.0);
  CHECK(std::abs(symmetry_loss(pair_matrix(2, 0)) - 8.0) < 1e-12);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> d;
  for (int t = 0; t < 100; ++t) {
    Tensor p = masked_relation(4, 2);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) {
        if (i != j) p.at(i, j) = d(rng);
      }
    }
    Tensor q = p;
    const double c = d(rng);
    q.at(0, 2) += c;
    q.at(2, 0) += c;
    CHECK(std::abs(symmetry_loss(q) - symmetry_loss(p)) < 1e-12);
  }
  CHECK_THROWS_AS(symmetry_loss(Tensor({2, 3}, 0.0)), Error);
}

TEST_CASE("exclusivity loss hand values") {
  CHECK(exclusivity_loss(pair_matrix(3, -1)) == 0.0);
  CHECK(std::abs(exclusivity_loss(pair_matrix(2, 3)) - 12.0) < 1e-12);
  const Tensor neg = pair_matrix(-1, -4);
  CHECK(exclusivity_loss(neg) == 0.0);
  ad::Tape tape;
  const ad::Var x = tape.parameter(neg, 0);
  ad::Gradients g(1);
  tape.backward(tape.exclusivity_loss(x), g);
  for (double v : g[0]) CHECK(v == 0.0);
  try {
    exclusivity_loss(Tensor({3}, 0.0));
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kNonSquare);
  }
}

TEST_CASE("sparsity loss hand values") {
  CHECK(std::abs(sparsity_loss(pair_matrix(-2, 1)) - 3.0) < 1e-12);
  CHECK(sparsity_loss(pair_matrix(0, 0)) == 0.0);
  Tensor t = masked_relation(3, 3);
  double v = 0.5;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isnan(t[i])) t[i] = (v = -v * 1.5);
  }
  for (double s : {0.0, 0.5, 2.0, 7.25}) {
    Tensor u = t;
    for (auto& x : u.data) x *= s;
    CHECK(std::abs(sparsity_loss(u) - s * sparsity_loss(t)) < 1e-12);
  }
}

TEST_CASE("tape losses equal the plain ones") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> d;
  for (int t = 0; t < 50; ++t) {
    Tensor p = masked_relation(5, 2);
    for (auto& x : p.data) {
      if (!std::isnan(x)) x = d(rng);
    }
    ad::Tape tape(ad::Tape::Mode::kInference);
    const ad::Var v = tape.constant(p);
    CHECK(tape.value(tape.symmetry_loss(v))[0] == doctest::Approx(symmetry_loss(p)).epsilon(1e-14));
    CHECK(tape.value(tape.exclusivity_loss(v))[0] == doctest::Approx(exclusivity_loss(p)).epsilon(1e-14));
    CHECK(tape.value(tape.sparsity_loss(v))[0] == doctest::Approx(sparsity_loss(p)).epsilon(1e-14));
  }
}

TEST_CASE("total loss at zero weights is the prediction loss") {
  const ParamStore params = init_params(toy_vocab(), 8, 3);
  const TrainingSet data = toy_set();
  ad::Tape tape;
  SceneFeatures f = encode_scene(tape, data.scenes[0], params);
  const ExecutionTrace trace = execute(data.items[0].program, f, params, default_rules(), tape);
  const LossTerms terms = total_loss(tape, trace, 1, default_rules(), LossWeights{0, 0, 0, 0});
  CHECK(terms.value == prediction_loss(trace.final_scores, 1));
  CHECK(terms.sparsity > 0.0);

  const LossTerms weighted = total_loss(tape, trace, 1, default_rules(), LossWeights{});
  CHECK(weighted.value == doctest::Approx(terms.prediction + LossWeights{}.alpha * weighted.symmetry +
                                          LossWeights{}.beta * weighted.exclusivity +
                                          LossWeights{}.gamma * weighted.sparsity));
}

TEST_CASE("trace without relations has zero regularizers") {
  const ParamStore params = init_params(toy_vocab(), 8, 3);
  ad::Tape tape;
  SceneFeatures f = encode_scene(tape, line_detections(3, 10, 4), params);
  const ExecutionTrace trace =
      execute(parse_program("filter(scene(), chair)"), f, params, default_rules(), tape);
  const LossTerms terms = total_loss(tape, trace, 0, default_rules(), LossWeights{1, 1, 1, 0});
  CHECK(terms.symmetry == 0.0);
  CHECK(terms.exclusivity == 0.0);
  CHECK(terms.sparsity == 0.0);
  CHECK(terms.value == terms.prediction);
}

TEST_CASE("symmetrized matrix has no symmetry term") {
  Tensor p = masked_relation(3, 2);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      if (i != j) p.at(i, j) = 0.25 * static_cast<double>(i + j + 1);
    }
  }
  FixedScores scores(3, p);
  ad::Tape tape;
  const RuleSet rules = default_rules();
  const ExecutionTrace trace = execute(
      parse_program("relate(filter(scene(), chair), filter(scene(), shelf), near)"), scores, rules, tape);
  const LossTerms terms = total_loss(tape, trace, 0, rules, LossWeights{1, 1, 1, 0});
  CHECK(terms.symmetry == 0.0);
  CHECK(terms.sparsity == doctest::Approx(sparsity_loss(p)));
}

TEST_CASE("overlapping rule sets are rejected") {
  RuleSet bad;
  bad.symmetric = {"near"};
  bad.exclusive = {"near"};
  const ParamStore params = init_params(toy_vocab(), 8, 3);
  ad::Tape tape;
  SceneFeatures f = encode_scene(tape, line_detections(3, 10, 4), params);
  const ExecutionTrace trace =
      execute(parse_program("filter(scene(), chair)"), f, params, RuleSet{}, tape);
  CHECK_THROWS_AS(total_loss(tape, trace, 0, bad, LossWeights{}), Error);
}

TEST_CASE("synonym augmentation") {
  const RuleSet rules = default_rules();
  GroundingQuery q;
  q.program = parse_program("filter(scene(), wardrobe)");
  q.answer = 3;
  const std::vector<GroundingQuery> batch{q};
  const auto aug = augment_with_synonyms(batch, rules, 1.0, 1);
  REQUIRE(aug.size() == 2);
  CHECK(aug[0].program == q.program);
  CHECK(aug[1].program == parse_program("filter(scene(), dresser)"));
  CHECK(aug[1].answer == 3);

  CHECK(augment_with_synonyms(batch, rules, 0.0, 1).size() == 1);

  GroundingQuery plain;
  plain.program = parse_program("relate(filter(scene(), chair), filter(scene(), lamp), near)");
  const std::vector<GroundingQuery> other{plain};
  CHECK(augment_with_synonyms(other, rules, 1.0, 1).size() == 1);

  const std::vector<TrainingItem> items{{0, q.program, 2}};
  const auto aug_items = augment_with_synonyms(items, rules, 1.0, 1);
  REQUIRE(aug_items.size() == 2);
  CHECK(aug_items[1].target == 2);
}

TEST_CASE("config validation") {
  LossWeights w;
  w.alpha = -1;
  CHECK_THROWS_AS(w.validate(), Error);
  TrainConfig c;
  c.learning_rate = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  TrainConfig b;
  b.batch_size = 0;
  CHECK_THROWS_AS(b.validate(), Error);
}

TEST_CASE("small steps decrease the loss") {
  const TrainingSet data = toy_set();
  ParamStore params = init_params(toy_vocab(), 8, 3);
  const RuleSet rules = default_rules();
  const LossWeights w{0.1, 0.1, 0.01, 0.0};
  double last = 0.0;
  for (int step = 0; step < 10; ++step) {
    ad::Gradients g(params.slot_count());
    const LossTerms terms = item_gradient(data.scenes[0], data.items[0], params, rules, w, g);
    if (step > 0) CHECK(terms.value < last);
    last = terms.value;
    for (std::size_t s = 0; s < params.slot_count(); ++s) {
      if (g[s].empty()) continue;
      Tensor& t = params.mutable_tensor(s);
      for (std::size_t i = 0; i < t.size(); ++i) t[i] -= 1e-3 * g[s][i];
    }
  }
}

TEST_CASE("training is deterministic and finite") {
  BenchmarkConfig bc;
  bc.train_scenes = 20;
  bc.eval_scenes = 5;
  bc.queries_per_scene = 3;
  bc.noise_level = 0.1;
  const Benchmark bench = build_benchmark(bc, 4);
  const TrainingSet train_set = make_training_set(bench.train);
  const TrainingSet eval_set = make_training_set(bench.eval);
  const RuleSet rules = default_rules();
  TrainConfig tc;
  tc.epochs = 3;
  tc.seed = 9;
  auto run = [&] {
    std::string stream;
    ParamStore init = init_params(training_vocabulary(bench.train, rules, LossWeights{}), 8, 2);
    const TrainResult r = train(train_set, init, rules, LossWeights{}, tc, &eval_set,
                                [&](const EpochMetrics& m) { stream += metrics_record(m) + "\n"; });
    CHECK_FALSE(r.diverged);
    CHECK(r.history.size() == 3);
    CHECK(r.params.all_finite());
    return std::make_pair(stream, checkpoint_text(r.params));
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);

  const int workers = kernels::max_workers();
  kernels::set_max_workers(1);
  const auto c = run();
  kernels::set_max_workers(workers);
  CHECK(c.first == a.first);
}

TEST_CASE("divergence keeps the last finite parameters") {
  const TrainingSet data = toy_set();
  const ParamStore init = init_params(toy_vocab(), 8, 3);
  TrainConfig tc;
  tc.epochs = 50;
  tc.learning_rate = 1e150;
  tc.clip_norm = 0.0;
  tc.optimizer = OptimizerKind::kSgd;
  const TrainResult r = train(data, init, default_rules(), LossWeights{}, tc);
  CHECK(r.diverged);
  CHECK_FALSE(r.divergence.empty());
  CHECK(r.params.all_finite());
}

TEST_CASE("relation diagnostics") {
  ConceptVocabulary v = toy_vocab();
  const ParamStore params = init_params(v, 8, 5);
  std::vector<std::vector<Detection>> scenes{line_detections(4, 10, 1), line_detections(5, 10, 2)};
  const RelationDiagnostics d = relation_diagnostics(scenes, params, {"left", "near"});
  REQUIRE(d.asymmetry.contains("left"));
  REQUIRE(d.co_positivity.contains("near"));
  for (const auto& [c, r] : d.asymmetry) {
    CHECK(r >= 0.0);
    CHECK(r <= 2.0);
  }
  for (const auto& [c, r] : d.co_positivity) {
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
  }
}

}  // TEST_SUITE
