// larc: data generation, rule distillation, training, evaluation and sweeps.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "larc/config.hpp"
#include "larc/data.hpp"
#include "larc/error.hpp"
#include "larc/eval.hpp"
#include "larc/exec.hpp"
#include "larc/experiment.hpp"
#include "larc/kernels.hpp"
#include "larc/learn.hpp"
#include "larc/rules.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out = "larc_out";
  std::optional<double> noise_level;
  std::optional<double> data_fraction;
  std::string weights;
  std::optional<std::string> holdout;
  std::string backend;
  std::optional<int> workers;
  std::vector<std::string> overrides;
  std::string rules_path;
  std::string data_dir;
  std::string checkpoint;
  bool extend_vocab = false;
  bool emit_matrices = false;
  std::size_t dump_trace = 0;
  std::string axis = "noise";
  std::string values;
};

class Run {
 public:
  Run(std::string command, const Options& opt) : command_(std::move(command)), opt_(opt) {
    config_ = opt.config_path.empty() ? larc::default_config() : larc::ConfigMap::load(opt.config_path);
    for (const auto& o : opt.overrides) config_.apply_override(o);
    auto num = [](double v) {
      std::ostringstream s;
      s << v;
      return s.str();
    };
    if (opt.seed) config_.set("seed", std::to_string(*opt.seed));
    if (opt.noise_level) config_.set("data.noise_level", num(*opt.noise_level));
    if (opt.data_fraction) config_.set("data.fraction", num(*opt.data_fraction));
    if (opt.holdout) config_.set("data.holdout", *opt.holdout);
    if (!opt.backend.empty()) config_.set("rules.backend", opt.backend);
    if (!opt.rules_path.empty()) config_.set("rules.file", opt.rules_path);
    if (opt.workers) config_.set("run.workers", std::to_string(*opt.workers));
    if (!opt.weights.empty()) {
      std::vector<std::string> parts;
      std::stringstream in(opt.weights);
      for (std::string p; std::getline(in, p, ',');) parts.push_back(p);
      if (parts.size() != 3) {
        larc::fail(larc::ErrorCode::kConfiguration, "--weights expects alpha,beta,gamma");
      }
      config_.set("loss.alpha", parts[0]);
      config_.set("loss.beta", parts[1]);
      config_.set("loss.gamma", parts[2]);
    }
    settings_ = larc::resolve_settings(config_);
    if (settings_.workers > 0) larc::kernels::set_max_workers(settings_.workers);

    fs::create_directories(opt.out);
    write("config.resolved", config_.text());
  }

  const larc::RunSettings& settings() const { return settings_; }
  const Options& options() const { return opt_; }

  void write(const std::string& name, const std::string& text) {
    std::ofstream out(fs::path(opt_.out) / name, std::ios::binary);
    if (!out) larc::fail(larc::ErrorCode::kIo, "cannot write '" + name + "' under " + opt_.out);
    out << text;
    files_.push_back(name);
  }

  void finish(json extra = json::object()) {
    json manifest = {{"command", command_},
                     {"seed", settings_.experiment.seed},
                     {"config", "config.resolved"},
                     {"files", files_}};
    manifest.update(extra);
    std::ofstream out(fs::path(opt_.out) / "manifest.json");
    out << manifest.dump(2) << '\n';
  }

  larc::RuleSet rules_for(const larc::ConceptVocabulary& vocab, bool save = true) {
    larc::RuleSet rules;
    if (!settings_.rules_path.empty()) {
      rules = larc::load_rule_file(settings_.rules_path);
      rules.validate();
    } else {
      larc::BackendConfig backend = settings_.backend;
      if (backend.cache_dir.empty()) backend.cache_dir = (fs::path(opt_.out) / "prompt_cache").string();
      larc::DistillResult d = larc::distill_rules(vocab, backend);
      for (const auto& w : d.warnings) std::cerr << "warning: " << w << '\n';
      rules = std::move(d.rules);
    }
    if (save) write("rules.txt", larc::format_rule_file(rules));
    return rules;
  }

  larc::Benchmark benchmark() {
    const auto& cfg = settings_.experiment;
    if (opt_.data_dir.empty()) return larc::build_benchmark(cfg.benchmark, cfg.seed);
    const fs::path dir(opt_.data_dir);
    larc::Benchmark b;
    b.train.scenes = larc::load_scenes((dir / "scenes_train.jsonl").string());
    b.train.queries = larc::load_queries((dir / "queries_train.jsonl").string());
    b.eval.scenes = larc::load_scenes((dir / "scenes_eval.jsonl").string());
    b.eval.queries = larc::load_queries((dir / "queries_eval.jsonl").string());
    b.heldout.scenes = b.eval.scenes;
    if (fs::exists(dir / "queries_heldout.jsonl")) {
      b.heldout.queries = larc::load_queries((dir / "queries_heldout.jsonl").string());
    }
    return b;
  }

 private:
  std::string command_;
  Options opt_;
  larc::ConfigMap config_;
  larc::RunSettings settings_;
  std::vector<std::string> files_;
};

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream in(text);
  for (std::string item; std::getline(in, item, ',');) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      larc::fail(larc::ErrorCode::kConfiguration, "'" + item + "' is not a number");
    }
  }
  return out;
}

larc::ConceptVocabulary vocab_of(const larc::Dataset& data) {
  std::vector<larc::Program> programs;
  for (const auto& q : data.queries) programs.push_back(q.program);
  return larc::extract_concepts(programs);
}

void emit_extras(Run& run, const larc::Benchmark& bench, const larc::ParamStore& params,
                 const larc::RuleSet& rules) {
  const auto& opt = run.options();
  const larc::TrainingSet eval_set = larc::make_training_set(bench.eval);
  if (opt.emit_matrices && !eval_set.scenes.empty()) {
    std::string text;
    for (std::size_t s = 0; s < std::min<std::size_t>(3, eval_set.scenes.size()); ++s) {
      text += "## scene " + std::to_string(s) + "\n" + larc::emit_matrices(eval_set.scenes[s], params);
    }
    run.write("matrices.txt", text);
  }
  if (opt.dump_trace > 0) {
    std::string text;
    for (std::size_t q = 0; q < std::min(opt.dump_trace, eval_set.items.size()); ++q) {
      const auto& item = eval_set.items[q];
      larc::ad::Tape tape(larc::ad::Tape::Mode::kInference);
      larc::SceneFeatures f = larc::encode_scene(tape, eval_set.scenes[item.scene], params);
      text += "# query " + std::to_string(q) + ": " + larc::print_program(item.program) +
              " target " + std::to_string(item.target) + "\n";
      try {
        text += larc::dump_trace(larc::execute(item.program, f, params, rules, tape), tape);
      } catch (const larc::Error& e) {
        text += std::string("error ") + e.what() + "\n";
      }
    }
    run.write("trace.txt", text);
  }
}

int cmd_gen_data(Run& run) {
  const auto& cfg = run.settings().experiment;
  const larc::Benchmark b = larc::build_benchmark(cfg.benchmark, cfg.seed);
  if (b.train.queries.empty() && b.eval.queries.empty()) {
    std::string names;
    for (const auto& t : larc::default_templates()) names += " " + t.name;
    larc::fail(larc::ErrorCode::kNotRealizable, "no template could be realized:" + names);
  }
  const fs::path out(run.options().out);
  larc::save_scenes(b.train.scenes, (out / "scenes_train.jsonl").string());
  larc::save_queries(b.train.queries, (out / "queries_train.jsonl").string());
  larc::save_scenes(b.eval.scenes, (out / "scenes_eval.jsonl").string());
  larc::save_queries(b.eval.queries, (out / "queries_eval.jsonl").string());
  larc::save_queries(b.heldout.queries, (out / "queries_heldout.jsonl").string());
  const json split = {{"holdout", cfg.benchmark.holdout.to_string()},
                      {"removed_from_train", b.removed_train},
                      {"subsampled_out", b.subsampled_out},
                      {"train_queries", b.train.queries.size()},
                      {"eval_queries", b.eval.queries.size()},
                      {"heldout_queries", b.heldout.queries.size()}};
  run.write("split.json", split.dump(2) + "\n");
  run.finish({{"datasets",
               {"scenes_train.jsonl", "queries_train.jsonl", "scenes_eval.jsonl",
                "queries_eval.jsonl", "queries_heldout.jsonl"}}});
  std::cout << split.dump() << '\n';
  return 0;
}

int cmd_distill(Run& run) {
  const auto& cfg = run.settings().experiment;
  larc::ConceptVocabulary vocab;
  if (!run.options().data_dir.empty()) {
    vocab = vocab_of(run.benchmark().train);
  } else {
    for (const auto& c : cfg.benchmark.generator.vocabulary) vocab.unary.insert(c);
    for (const auto& [alias, c] : cfg.benchmark.generator.aliases) vocab.unary.insert(alias);
    for (auto r : larc::binary_relation_names()) vocab.binary.insert(std::string(r));
    for (auto r : larc::ternary_relation_names()) vocab.ternary.insert(std::string(r));
  }
  const larc::RuleSet rules = run.rules_for(vocab);
  std::cout << "symmetric: " << rules.symmetric.size() << "  exclusive: " << rules.exclusive.size()
            << "  synonym groups: " << rules.synonym_groups.size()
            << "  antonym pairs: " << rules.antonyms.size() / 2
            << "  compositions: " << rules.compositions.size() << '\n';
  run.finish();
  return 0;
}

int cmd_train(Run& run) {
  const auto& s = run.settings();
  larc::ExperimentConfig cfg = s.experiment;
  cfg.track_eval = true;
  const larc::Benchmark bench = run.benchmark();
  const larc::RuleSet rules = run.rules_for(vocab_of(bench.train));
  std::string metrics;
  const larc::ExperimentResult r = larc::run_experiment(
      cfg, rules, bench, [&](const larc::EpochMetrics& m) {
        metrics += larc::metrics_record(m) + "\n";
        std::cerr << "epoch " << m.epoch << " loss " << m.loss << " eval "
                  << m.eval_accuracy.value_or(0.0) << '\n';
      });
  run.write("metrics.jsonl", metrics);
  run.write("checkpoint.json", larc::checkpoint_text(r.training.params));
  run.write("eval.json", larc::metrics_json(r.eval) + "\n");
  if (r.heldout) run.write("heldout.json", larc::metrics_json(*r.heldout) + "\n");
  emit_extras(run, bench, r.training.params, rules);
  run.finish({{"diverged", r.training.diverged}});
  if (r.training.diverged) {
    larc::fail(larc::ErrorCode::kNumericFailure,
               "training diverged (" + r.training.divergence +
                   "); checkpoint.json holds the last finite parameters");
  }
  std::cout << larc::metrics_json(r.eval) << '\n';
  return 0;
}

int cmd_eval(Run& run) {
  const auto& opt = run.options();
  if (opt.checkpoint.empty()) larc::fail(larc::ErrorCode::kConfiguration, "eval needs --checkpoint");
  const larc::Benchmark bench = run.benchmark();
  const larc::RuleSet rules = run.rules_for(vocab_of(bench.train), false);
  larc::ConceptVocabulary expected = vocab_of(bench.eval);
  for (auto it = expected.ternary.begin(); it != expected.ternary.end();) {
    it = rules.compositions.contains(*it) ? expected.ternary.erase(it) : std::next(it);
  }
  larc::ParamStore params =
      opt.extend_vocab
          ? larc::load_checkpoint(opt.checkpoint, expected, true, run.settings().experiment.seed)
          : larc::load_checkpoint(opt.checkpoint);
  const larc::Metrics m = larc::evaluate(larc::make_training_set(bench.eval), params, rules,
                                         run.settings().experiment.eval);
  run.write("eval.json", larc::metrics_json(m) + "\n");
  if (!bench.heldout.queries.empty()) {
    const larc::Metrics h =
        larc::evaluate(larc::make_training_set(bench.heldout), params, rules, {.diagnostics = false});
    run.write("heldout.json", larc::metrics_json(h) + "\n");
  }
  emit_extras(run, bench, params, rules);
  run.finish();
  std::cout << larc::metrics_json(m) << '\n';
  return 0;
}

int cmd_sweep(Run& run) {
  const auto& opt = run.options();
  const larc::ExperimentConfig& cfg = run.settings().experiment;
  std::vector<double> values = parse_values(opt.values);
  larc::ExperimentConfig probe = cfg;
  const larc::Benchmark bench = larc::build_benchmark(probe.benchmark, probe.seed);
  const larc::RuleSet rules = run.rules_for(vocab_of(bench.train));
  larc::SweepResult sweep;
  if (opt.axis == "noise") {
    if (values.empty()) values = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5};
    sweep = larc::noise_sweep(values, cfg, rules);
  } else if (opt.axis == "data") {
    if (values.empty()) values = {0.05, 0.1, 0.15, 0.2, 0.25};
    sweep = larc::data_efficiency_sweep(values, cfg, rules);
  } else {
    larc::fail(larc::ErrorCode::kConfiguration, "--axis must be noise or data");
  }
  std::string records;
  for (std::size_t i = 0; i < sweep.points.size(); ++i) {
    json rec = json::parse(larc::metrics_json(sweep.points[i]));
    rec[sweep.axis] = sweep.values[i];
    records += rec.dump() + "\n";
  }
  run.write("sweep.jsonl", records);
  run.write("sweep.csv", larc::sweep_csv(sweep));
  run.finish({{"axis", sweep.axis}});
  std::cout << larc::sweep_csv(sweep);
  return 0;
}

int cmd_compose_demo(Run& run) {
  // lamp, couch and desk on a line along x; the couch sits between the other two.
  const larc::GeneratorConfig& gen = run.settings().experiment.benchmark.generator;
  larc::Scene scene;
  const char* names[] = {"lamp", "couch", "desk"};
  const double xs[] = {1.0, 4.0, 7.0};
  for (int i = 0; i < 3; ++i) {
    larc::SceneObject o;
    o.id = i;
    o.category = names[i];
    o.box.center = {xs[i], 4.0, 0.5};
    o.box.extent = {0.5, 0.5, 0.5};
    o.attributes.assign(gen.attribute_dim(), 0.0);
    scene.objects.push_back(o);
  }
  larc::RuleSet rules = run.rules_for({}, false);
  larc::ad::Tape tape(larc::ad::Tape::Mode::kInference);
  larc::OracleScores oracle(scene, gen, {"center"});
  const auto left = oracle.binary(tape, "left");
  const auto right = oracle.binary(tape, "right");
  const larc::Tensor composed = larc::compose_ternary(rules, "center", tape.value(*left), tape.value(*right));

  // Score of object i as the center of the other two, maximized over anchor orders.
  std::vector<double> score(3, -1e300);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t k = 0; k < 3; ++k) {
        if (!larc::is_masked_slot(i, j, k)) score[i] = std::max(score[i], composed.at(i, j, k));
      }
    }
  }
  const std::size_t composed_answer = larc::predict(score);
  std::size_t oracle_answer = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t j = (i + 1) % 3;
    const std::size_t k = (i + 2) % 3;
    if (larc::oracle_relation(scene, "center", i, j, k, gen.rulebook)) oracle_answer = i;
  }
  std::cout << "composed center argmax: " << composed_answer << " (" << names[composed_answer]
            << ")\noracle center:          " << oracle_answer << " (" << names[oracle_answer]
            << ")\n";
  run.write("compose_demo.json", json{{"composed", composed_answer}, {"oracle", oracle_answer}}.dump() + "\n");
  run.finish();
  return composed_answer == oracle_answer ? 0 : 1;
}

int exit_code(larc::ErrorCode code) {
  return (code == larc::ErrorCode::kConfiguration || code == larc::ErrorCode::kInvalidConfig) ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Language-regularized concept learner for referring-expression grounding"};
  app.require_subcommand(1);
  Options opt;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", opt.config_path, "Flat key = value config file");
    sub->add_option("--seed", opt.seed, "Root seed");
    sub->add_option("--out", opt.out, "Output directory")->capture_default_str();
    sub->add_option("--noise-level", opt.noise_level, "Detector noise level");
    sub->add_option("--data-fraction", opt.data_fraction, "Fraction of training queries kept");
    sub->add_option("--weights", opt.weights, "alpha,beta,gamma");
    sub->add_option("--holdout", opt.holdout, "Concepts kept out of training, e.g. center,between,not");
    sub->add_option("--backend", opt.backend, "Rule backend: remote, replay or fixture");
    sub->add_option("--workers", opt.workers, "Cap on worker threads");
    sub->add_option("--rules", opt.rules_path, "Rule file to use instead of distilling");
    sub->add_option("--data", opt.data_dir, "Directory written by gen-data");
    sub->add_option("--set", opt.overrides, "Config override key=value (repeatable)");
  };
  auto outputs = [&](CLI::App* sub) {
    sub->add_flag("--emit-matrices", opt.emit_matrices, "Write learned relation matrices");
    sub->add_option("--dump-trace", opt.dump_trace, "Write execution traces of the first N eval queries");
  };

  auto* gen = app.add_subcommand("gen-data", "Generate scenes and queries");
  auto* distill = app.add_subcommand("distill", "Distill the rule set");
  auto* train = app.add_subcommand("train", "Train and evaluate");
  auto* eval = app.add_subcommand("eval", "Evaluate a checkpoint");
  auto* sweep = app.add_subcommand("sweep", "Noise or data-fraction sweep");
  auto* demo = app.add_subcommand("compose-demo", "Zero-shot center composition on a toy scene");
  for (auto* sub : {gen, distill, train, eval, sweep, demo}) common(sub);
  outputs(train);
  outputs(eval);
  eval->add_option("--checkpoint", opt.checkpoint, "Checkpoint written by train");
  eval->add_flag("--extend-vocab", opt.extend_vocab, "Add fresh embeddings for unknown concepts");
  sweep->add_option("--axis", opt.axis, "noise or data")->capture_default_str();
  sweep->add_option("--values", opt.values, "Comma-separated axis values");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    CLI::App* chosen = app.get_subcommands().front();
    Run run(chosen->get_name(), opt);
    if (chosen == gen) return cmd_gen_data(run);
    if (chosen == distill) return cmd_distill(run);
    if (chosen == train) return cmd_train(run);
    if (chosen == eval) return cmd_eval(run);
    if (chosen == sweep) return cmd_sweep(run);
    return cmd_compose_demo(run);
  } catch (const larc::Error& e) {
    std::cerr << json{{"error", larc::to_string(e.code())}, {"message", e.what()}}.dump() << '\n';
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << json{{"error", "internal"}, {"message", e.what()}}.dump() << '\n';
    return 1;
  }
}
