#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "larc/dsl.hpp"
#include "larc/tensor.hpp"

namespace larc {

/// A ternary concept built from two binary ones:
///   t[i,j,k] = max(first[i,j] + second[i,k], second[i,j] + first[i,k]).
struct CompositionSpec {
  std::string first;
  std::string second;
  bool operator==(const CompositionSpec&) const = default;
};

struct RuleSet {
  std::set<std::string> symmetric;
  std::set<std::string> exclusive;
  std::vector<std::set<std::string>> synonym_groups;
  /// Stored in both directions.
  std::map<std::string, std::string> antonyms;
  std::map<std::string, CompositionSpec> compositions;

  bool is_symmetric(std::string_view c) const { return symmetric.contains(std::string(c)); }
  bool is_exclusive(std::string_view c) const { return exclusive.contains(std::string(c)); }
  const std::set<std::string>* synonym_group(std::string_view c) const;
  bool empty() const;

  /// Adds a→b and b→a.
  void add_antonym_pair(const std::string& a, const std::string& b);

  /// Throws kInconsistentRules naming every offender when an invariant fails:
  /// symmetric ∩ exclusive = ∅, antonyms form a fixed-point-free involution,
  /// synonym groups are disjoint with ≥ 2 members, compositions reference
  /// known binary concepts (those in `binary_vocab` or named by the rules).
  void validate(const std::set<std::string>* binary_vocab = nullptr) const;

  bool operator==(const RuleSet&) const = default;
};

/// The curated rule file shipped with the project.
std::string_view default_rule_text();
RuleSet default_rules();

RuleSet parse_rule_file(std::string_view text);
std::string format_rule_file(const RuleSet& rules);
RuleSet load_rule_file(const std::string& path);
void save_rule_file(const RuleSet& rules, const std::string& path);

/// Antonym lookup for negated relations; kUnresolvableConcept when absent.
std::string resolve_antonym(const RuleSet& rules, std::string_view relation);

/// Plain-tensor composition of a ternary concept from two n×n matrices.
Tensor compose_ternary(const RuleSet& rules, std::string_view concept_name,
                       const Tensor& first, const Tensor& second);

// ---------------------------------------------------------------------------
// Distillation from a text-completion backend.

struct Prompts {
  std::string relations;
  std::string synonyms_round1;
  std::string synonyms_round2;
  std::vector<std::string> warnings;
};

Prompts build_prompts(const ConceptVocabulary& vocab);

/// Prompt sent for the second synonym round: the first exchange followed by
/// the follow-up question.
std::string synonym_followup_prompt(const Prompts& prompts, std::string_view round1_reply);

enum class ResponseKind { kRelations, kSynonyms };

struct ParsedResponse {
  RuleSet rules;
  /// Relations classified asymmetric (exclusive ⊆ asymmetric).
  std::set<std::string> asymmetric;
  std::vector<std::string> warnings;
};

ParsedResponse parse_response(ResponseKind kind, std::string_view text,
                              const ConceptVocabulary& vocab);

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  virtual std::string complete(const std::string& prompt) = 0;
};

/// Hex SHA-256 of the prompt text; cache file name stem.
std::string prompt_hash(std::string_view prompt);

/// Reads completions from `<cache_dir>/<prompt_hash>.txt`; never touches the network.
class ReplayBackend : public CompletionBackend {
 public:
  explicit ReplayBackend(std::string cache_dir) : cache_dir_(std::move(cache_dir)) {}
  std::string complete(const std::string& prompt) override;

 private:
  std::string cache_dir_;
};

struct RemoteOptions {
  std::string endpoint;  // e.g. http://localhost:8080/v1/completions
  std::string model = "gpt-3.5-turbo-instruct";
  std::string token_env = "LARC_API_TOKEN";
  double timeout_seconds = 30.0;
  int retries = 3;
  double backoff_seconds = 0.5;
  std::string cache_dir;
};

/// POSTs {model, prompt, temperature: 0} with a bearer token read from the
/// environment. Responses are cached by prompt hash; a warm cache never
/// reaches the network.
class RemoteBackend : public CompletionBackend {
 public:
  explicit RemoteBackend(RemoteOptions options);
  std::string complete(const std::string& prompt) override;

 private:
  RemoteOptions options_;
  std::string token_;
};

enum class BackendKind { kRemote, kReplay, kFixture };

BackendKind parse_backend_kind(std::string_view name);

struct BackendConfig {
  BackendKind kind = BackendKind::kFixture;
  /// Rule file supplying antonyms, compositions and the exclusive screen;
  /// empty means the built-in default.
  std::string fixture_path;
  std::string cache_dir;
  RemoteOptions remote;
};

struct DistillResult {
  RuleSet rules;
  std::vector<std::string> warnings;
};

DistillResult distill_rules(const ConceptVocabulary& vocab, const BackendConfig& config);
/// Same pipeline over an already constructed backend (remote or replay).
DistillResult distill_rules(const ConceptVocabulary& vocab, CompletionBackend& backend,
                            const RuleSet& fixture);

}  // namespace larc
