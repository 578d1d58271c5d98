#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "respsel/clustering.hpp"
#include "respsel/embedding.hpp"

namespace respsel {

enum class Provenance { seed, generated };
enum class ReviewStatus { pending, approved, rejected };
enum class Verdict { approve, reject };

const char* to_string(Provenance p);
const char* to_string(ReviewStatus s);
const char* to_string(Verdict v);
Provenance provenance_from_string(const std::string& s);
ReviewStatus review_status_from_string(const std::string& s);
Verdict verdict_from_string(const std::string& s);

struct Script {
  std::string id;
  std::string text;
  std::string strategy;
  std::string purpose;
  Provenance provenance = Provenance::generated;
  std::optional<std::size_t> cluster_id;
  ReviewStatus review_status = ReviewStatus::pending;

  bool operator==(const Script&) const = default;
};

// Content hash of (text, purpose, strategy).
std::string script_id(const std::string& text, const std::string& purpose, const std::string& strategy);

Script make_script(std::string text, std::string strategy, std::string purpose, Provenance provenance,
                   std::optional<std::size_t> cluster_id = std::nullopt);

struct AuditEntry {
  std::string script_id;
  std::string reviewer;
  Verdict verdict = Verdict::approve;
  std::string timestamp;  // ISO-8601 UTC

  bool operator==(const AuditEntry&) const = default;
};

std::string utc_timestamp_now();

nlohmann::json to_json(const Script& s);
Script script_from_json(const nlohmann::json& j);

// Value type; see LibraryStore for the shared, single-writer wrapper.
class ScriptLibrary {
 public:
  // `purposes` is the vocabulary P; empty accepts any purpose in queries.
  explicit ScriptLibrary(std::set<std::string> purposes = {}) : purposes_(std::move(purposes)) {}

  // Returns false when a script with the same id is already present.
  bool add(Script s);

  // pending -> approved | rejected. Throws NotFoundError / StateError.
  const Script& review(const std::string& id, Verdict verdict, const std::string& reviewer,
                       const std::string& timestamp = utc_timestamp_now());

  // Approved scripts for `purpose` (and `strategy`), ordered by id.
  // Throws DomainError for a purpose outside the vocabulary.
  std::vector<Script> query(const std::string& purpose, const std::optional<std::string>& strategy = {}) const;

  std::vector<Script> list(const std::optional<std::string>& purpose = {},
                           const std::optional<ReviewStatus>& status = {}) const;

  const Script* find(const std::string& id) const;
  std::vector<Script> all() const;
  const std::vector<AuditEntry>& audit() const { return audit_; }
  const std::set<std::string>& purposes() const { return purposes_; }
  void set_purposes(std::set<std::string> p) { purposes_ = std::move(p); }
  std::size_t size() const { return scripts_.size(); }

  nlohmann::json to_json() const;
  static ScriptLibrary from_json(const nlohmann::json& j, std::set<std::string> purposes = {});
  void save(const std::filesystem::path& path) const;
  static ScriptLibrary load(const std::filesystem::path& path, std::set<std::string> purposes = {});

  bool operator==(const ScriptLibrary&) const = default;

 private:
  std::set<std::string> purposes_;
  std::map<std::string, Script> scripts_;  // keyed and ordered by id
  std::vector<AuditEntry> audit_;
};

// Readers take immutable snapshots; writers are serialized and swap in a
// modified copy, persisting it first when a path is set.
class LibraryStore {
 public:
  explicit LibraryStore(ScriptLibrary lib, std::optional<std::filesystem::path> path = std::nullopt);

  std::shared_ptr<const ScriptLibrary> snapshot() const;
  Script review(const std::string& id, Verdict verdict, const std::string& reviewer);

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const ScriptLibrary> current_;
  std::optional<std::filesystem::path> path_;
};

struct PurposeGuideline {
  std::string purpose;
  std::string guideline_text;
};

// One guideline per purpose; throws ValidationError on duplicates.
std::vector<PurposeGuideline> guidelines_from_json(const nlohmann::json& j);

enum class GeneratorKind { remote, mock };

struct GenerationClientSpec {
  GeneratorKind kind = GeneratorKind::mock;
  std::optional<std::string> endpoint;
  std::string model_name = "mock";
  double temperature = 0.7;
  std::uint64_t mock_seed = 0;

  void validate() const;
};

class TextGenerator {
 public:
  virtual ~TextGenerator() = default;
  virtual std::vector<std::string> generate(const std::string& prompt, int n, double temperature) const = 0;
};

// Answers with a numbered list recombining the prompt's seed lines.
class MockGenerator final : public TextGenerator {
 public:
  explicit MockGenerator(std::uint64_t seed) : seed_(seed) {}
  std::vector<std::string> generate(const std::string& prompt, int n, double temperature) const override;

 private:
  std::uint64_t seed_;
};

// POST {endpoint}/generate {"prompt","n","temperature"} -> {"completions"}.
class RemoteGenerator final : public TextGenerator {
 public:
  RemoteGenerator(std::string endpoint, HttpOptions http = {}) : endpoint_(std::move(endpoint)), http_(http) {}
  std::vector<std::string> generate(const std::string& prompt, int n, double temperature) const override;

 private:
  std::string endpoint_;
  HttpOptions http_;
};

std::shared_ptr<const TextGenerator> make_generator(const GenerationClientSpec& spec);

std::string build_generation_prompt(const std::vector<SeedScript>& seeds, const PurposeGuideline& guideline,
                                    std::size_t count);

// Items of "1. text" / "2) text" lines, in order.
std::vector<std::string> parse_numbered_list(const std::string& text);

struct GenerationResult {
  std::vector<Script> scripts;
  std::size_t requested = 0;
  int attempts = 0;
  bool partial = false;  // fewer than `requested` parseable scripts
};

// Throws PreconditionError when seeds are empty or span several
// (strategy, cluster) groups. Client failures surface as TransportError.
GenerationResult generate_scripts(const std::vector<SeedScript>& seeds, const PurposeGuideline& guideline,
                                  const TextGenerator& client, double temperature, std::size_t count = 3);

// Greedy in id order: drop a script whose cosine similarity to an earlier
// kept script of the same (purpose, strategy) exceeds `threshold`.
std::vector<Script> dedup_scripts(std::vector<Script> scripts, const Embedder& embedder, double threshold);

}  // namespace respsel
