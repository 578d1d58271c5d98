#pragma once

#include <array>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "respsel/corpus.hpp"
#include "respsel/http_json.hpp"

namespace respsel {

struct RubricAspect {
  std::string key;   // e.g. "empathetic_engagement"
  std::string name;  // e.g. "Empathetic Engagement"
  std::string description;
  std::map<int, std::string> levels;  // 3 excellent, 2 good, 1 poor
};

struct Rubric {
  std::array<RubricAspect, 3> aspects;

  // Throws ValidationError unless the three expected aspects are present
  // with nonempty criteria for levels 3, 2 and 1.
  void validate() const;
  std::string hash() const;

  static Rubric standard();
  static Rubric from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct AspectScores {
  int empathetic_engagement = 2;
  int effective_problem_solving = 2;
  int contextual_relevance = 2;
  std::string rationale;

  double overall() const { return (empathetic_engagement + effective_problem_solving + contextual_relevance) / 3.0; }
  nlohmann::json to_json() const;

  bool operator==(const AspectScores&) const = default;
};

struct Candidate {
  std::string script_id;
  std::string text;
  std::size_t recall_rank = 0;
};

struct ScoredCandidate {
  std::string script_id;
  std::string text;
  std::size_t recall_rank = 0;
  AspectScores scores;
  double overall = 0.0;
  bool unparseable = false;  // neutral fallback scores
};

// Last `turns` debtor-collector exchanges (2 * turns utterances).
std::vector<Utterance> last_turns(std::span<const Utterance> context, std::size_t turns = 3);

// Task statement plus every criterion of the rubric.
std::string rubric_instruction(const Rubric& rubric);
// Context transcript and the candidate script.
std::string rubric_input(std::span<const Utterance> context, const std::string& candidate, std::size_t turns = 3);

// rubric_instruction + rubric_input. Throws PreconditionError on an empty context.
std::string build_rubric_prompt(std::span<const Utterance> context, const std::string& candidate, const Rubric& rubric,
                                std::size_t turns = 3);

// First balanced JSON object in `raw`, validated. Throws ParseError.
AspectScores parse_scores(const std::string& raw);

class ScorerClient {
 public:
  virtual ~ScorerClient() = default;
  virtual std::string complete(const std::string& prompt, double temperature) const = 0;
};

// Deterministic keyword and overlap heuristic that answers in the
// structured format. Stands in for a judge model offline.
class MockScorer final : public ScorerClient {
 public:
  std::string complete(const std::string& prompt, double temperature) const override;
};

// POST {endpoint}/chat {"prompt","temperature"} -> {"text"}.
class RemoteScorer final : public ScorerClient {
 public:
  RemoteScorer(std::string endpoint, HttpOptions http = {}) : endpoint_(std::move(endpoint)), http_(http) {}
  std::string complete(const std::string& prompt, double temperature) const override;

 private:
  std::string endpoint_;
  HttpOptions http_;
};

class FunctionScorer final : public ScorerClient {
 public:
  explicit FunctionScorer(std::function<std::string(const std::string&)> fn) : fn_(std::move(fn)) {}
  std::string complete(const std::string& prompt, double) const override { return fn_(prompt); }

 private:
  std::function<std::string(const std::string&)> fn_;
};

enum class ScorerKind { remote, mock };

struct ScorerSpec {
  ScorerKind kind = ScorerKind::mock;
  std::optional<std::string> endpoint;
  double temperature = 0.0;
  int max_attempts = 3;

  void validate() const;
};

std::shared_ptr<const ScorerClient> make_scorer(const ScorerSpec& spec);

// Keyed by (context hash, script id, rubric hash). Concurrent readers,
// serialized writers.
class ScoreCache {
 public:
  static std::string key(std::span<const Utterance> context, const std::string& script_id, const Rubric& rubric);
  std::optional<AspectScores> get(const std::string& key) const;
  void put(const std::string& key, const AspectScores& s);
  std::size_t size() const;

 private:
  mutable std::shared_mutex mu_;
  std::map<std::string, AspectScores> entries_;
};

struct ScoreOptions {
  int retries = 2;
  double temperature = 0.0;
  std::size_t turns = 3;
  ScoreCache* cache = nullptr;
};

struct ScoreOutcome {
  AspectScores scores;
  bool unparseable = false;
  int attempts = 0;
};

// Retries parse and transport failures. After the last attempt a parse
// failure yields neutral (2,2,2) flagged "unparseable"; a transport failure
// is rethrown.
ScoreOutcome score_candidate(std::span<const Utterance> context, const Candidate& candidate,
                             const ScorerClient& scorer, const Rubric& rubric, const ScoreOptions& opts = {});

struct RankResult {
  ScoredCandidate best;
  std::vector<ScoredCandidate> ordering;
};

struct RankOptions {
  ScoreOptions score;
  std::size_t max_concurrency = 4;
};

// Orders by overall descending, ties by lower recall rank.
// Throws PreconditionError for empty input or duplicate recall ranks.
RankResult rank_candidates(std::span<const Utterance> context, std::span<const Candidate> candidates,
                           const ScorerClient& scorer, const Rubric& rubric, const RankOptions& opts = {});

// Ordering rule alone, for already-scored candidates.
void order_scored(std::vector<ScoredCandidate>& scored);

struct DistillationRecord {
  std::string instruction;
  std::string input;
  std::string output;
  nlohmann::json to_json() const { return {{"instruction", instruction}, {"input", input}, {"output", output}}; }
};

struct DistillCase {
  std::vector<Utterance> context;
  Candidate candidate;
};

struct ExportStats {
  std::size_t written = 0;
  std::size_t dropped = 0;
};

// One JSONL record per case whose teacher reply parses; the rest are
// dropped and counted. Throws IoError when the sink fails.
ExportStats export_distillation(std::span<const DistillCase> cases, const ScorerClient& teacher, const Rubric& rubric,
                                std::ostream& sink, const ScoreOptions& opts = {});

// items x categories matrix of rater counts. Throws DomainError on unequal
// or too-small row sums and on agreement that is degenerate (P_e = 1).
double fleiss_kappa(const std::vector<std::vector<double>>& counts);

struct LabeledCase {
  std::vector<Utterance> context;
  std::vector<Candidate> candidates;
  std::string chosen;
};

LabeledCase labeled_case_from_json(const nlohmann::json& j);
std::vector<LabeledCase> parse_labeled_cases(std::istream& in);

// Returns the script id a ranker picks for a case.
using Ranker = std::function<std::string(const LabeledCase&)>;

// Fraction of cases where the ranker picks the expert choice. Throws
// DataError when a case's choice is not among its candidates.
double eval_ranking_r1(std::span<const LabeledCase> cases, const Ranker& ranker);

}  // namespace respsel
