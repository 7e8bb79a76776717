#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <openssl/sha.h>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "larc/error.hpp"
#include "larc/rules.hpp"

namespace larc {
namespace {

namespace fs = std::filesystem;

std::optional<std::string> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) fail(ErrorCode::kIo, "cannot write '" + tmp.string() + "'");
    out << text;
  }
  fs::rename(tmp, path);
}

fs::path cache_path(const std::string& dir, const std::string& prompt) {
  return fs::path(dir) / (prompt_hash(prompt) + ".txt");
}

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  const auto scheme = url.find("://");
  if (scheme == std::string::npos) {
    fail(ErrorCode::kConfiguration, "endpoint '" + url + "' has no scheme");
  }
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/"};
  return {url.substr(0, slash), url.substr(slash)};
}

}  // namespace

std::string prompt_hash(std::string_view prompt) {
  unsigned char digest[SHA256_DIGEST_LENGTH];
  SHA256(reinterpret_cast<const unsigned char*>(prompt.data()), prompt.size(), digest);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * SHA256_DIGEST_LENGTH);
  for (unsigned char byte : digest) {
    out.push_back(kHex[byte >> 4]);
    out.push_back(kHex[byte & 0xF]);
  }
  return out;
}

std::string ReplayBackend::complete(const std::string& prompt) {
  const fs::path path = cache_path(cache_dir_, prompt);
  auto text = read_file(path);
  if (!text) {
    fail(ErrorCode::kBackendUnavailable,
         "replay cache has no completion for prompt " + prompt_hash(prompt) + " (looked in '" +
             path.string() + "')");
  }
  return *text;
}

RemoteBackend::RemoteBackend(RemoteOptions options) : options_(std::move(options)) {
  if (options_.endpoint.empty()) {
    fail(ErrorCode::kConfiguration, "remote backend needs an endpoint");
  }
  split_endpoint(options_.endpoint);
  const char* token = std::getenv(options_.token_env.c_str());
  if (token == nullptr || *token == '\0') {
    fail(ErrorCode::kConfiguration,
         "remote backend needs an API token in $" + options_.token_env);
  }
  token_ = token;
}

std::string RemoteBackend::complete(const std::string& prompt) {
  if (!options_.cache_dir.empty()) {
    if (auto cached = read_file(cache_path(options_.cache_dir, prompt))) return *cached;
  }
  const Endpoint ep = split_endpoint(options_.endpoint);
  httplib::Client client(ep.origin);
  const auto secs = static_cast<time_t>(options_.timeout_seconds);
  const auto usecs = static_cast<time_t>((options_.timeout_seconds - secs) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);

  const nlohmann::json body = {
      {"model", options_.model}, {"prompt", prompt}, {"temperature", 0}, {"max_tokens", 512}};
  const httplib::Headers headers = {{"Authorization", "Bearer " + token_}};

  std::string last_error = "no attempt made";
  const int attempts = std::max(1, options_.retries);
  for (int attempt = 0; attempt < attempts; ++attempt) {
    if (attempt > 0) {
      const double wait = options_.backoff_seconds * static_cast<double>(1 << (attempt - 1));
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
    }
    auto res = client.Post(ep.path, headers, body.dump(), "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "HTTP " + std::to_string(res->status);
      if (res->status >= 400 && res->status < 500 && res->status != 429) break;
      continue;
    }
    try {
      const auto reply = nlohmann::json::parse(res->body);
      const auto& choice = reply.at("choices").at(0);
      std::string text = choice.contains("text") ? choice.at("text").get<std::string>()
                                                 : choice.at("message").at("content").get<std::string>();
      if (!options_.cache_dir.empty()) {
        write_file_atomic(cache_path(options_.cache_dir, prompt), text);
      }
      return text;
    } catch (const nlohmann::json::exception& e) {
      last_error = std::string("malformed completion response: ") + e.what();
    }
  }
  fail(ErrorCode::kBackendUnavailable,
       "completion request to " + options_.endpoint + " failed: " + last_error);
}

BackendKind parse_backend_kind(std::string_view name) {
  if (name == "remote") return BackendKind::kRemote;
  if (name == "replay") return BackendKind::kReplay;
  if (name == "fixture") return BackendKind::kFixture;
  fail(ErrorCode::kConfiguration,
       "unknown backend '" + std::string(name) + "' (expected remote, replay or fixture)");
}

DistillResult distill_rules(const ConceptVocabulary& vocab, CompletionBackend& backend,
                            const RuleSet& fixture) {
  DistillResult out;
  const Prompts prompts = build_prompts(vocab);
  out.warnings = prompts.warnings;

  const std::string rel_text = backend.complete(prompts.relations);
  ParsedResponse rel = parse_response(ResponseKind::kRelations, rel_text, vocab);
  out.warnings.insert(out.warnings.end(), rel.warnings.begin(), rel.warnings.end());

  const std::string syn1 = backend.complete(prompts.synonyms_round1);
  const std::string syn2 = backend.complete(synonym_followup_prompt(prompts, syn1));
  ParsedResponse syn = parse_response(ResponseKind::kSynonyms, syn2, vocab);
  if (syn.rules.synonym_groups.empty()) {
    syn = parse_response(ResponseKind::kSynonyms, syn1, vocab);
    if (!syn.rules.synonym_groups.empty()) {
      out.warnings.push_back("second synonym round gave no groups; using the first round");
    }
  }
  out.warnings.insert(out.warnings.end(), syn.warnings.begin(), syn.warnings.end());

  out.rules.symmetric = rel.rules.symmetric;
  out.rules.exclusive = rel.rules.exclusive;
  for (const auto& r : rel.asymmetric) {
    if (fixture.is_exclusive(r)) out.rules.exclusive.insert(r);
  }
  out.rules.synonym_groups = syn.rules.synonym_groups;
  out.rules.antonyms = fixture.antonyms;
  out.rules.compositions = fixture.compositions;
  out.rules.validate(&vocab.binary);
  return out;
}

DistillResult distill_rules(const ConceptVocabulary& vocab, const BackendConfig& config) {
  const RuleSet fixture =
      config.fixture_path.empty() ? default_rules() : load_rule_file(config.fixture_path);
  switch (config.kind) {
    case BackendKind::kFixture: {
      fixture.validate(vocab.binary.empty() ? nullptr : &vocab.binary);
      DistillResult out{fixture, {}};
      for (const auto& r : vocab.binary) {
        if (!fixture.is_symmetric(r) && !fixture.is_exclusive(r) &&
            !fixture.antonyms.contains(r)) {
          out.warnings.push_back("fixture leaves '" + r + "' unconstrained");
        }
      }
      return out;
    }
    case BackendKind::kReplay: {
      if (config.cache_dir.empty()) {
        fail(ErrorCode::kConfiguration, "replay backend needs a cache directory");
      }
      ReplayBackend backend(config.cache_dir);
      return distill_rules(vocab, backend, fixture);
    }
    case BackendKind::kRemote: {
      RemoteOptions options = config.remote;
      if (options.cache_dir.empty()) options.cache_dir = config.cache_dir;
      RemoteBackend backend(options);
      return distill_rules(vocab, backend, fixture);
    }
  }
  fail(ErrorCode::kConfiguration, "unknown backend kind");
}

}  // namespace larc
