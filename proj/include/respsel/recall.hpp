#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "respsel/corpus.hpp"
#include "respsel/embedding.hpp"
#include "respsel/kernels.hpp"
#include "respsel/library.hpp"

namespace respsel {

// Linear map applied to frozen provider embeddings, shared by the context
// and response sides.
struct ProjectionHead {
  Matrix weights;  // d_out x d_in
  double temperature = 1.0;
  bool normalize_output = true;

  std::size_t d_in() const { return weights.cols; }
  std::size_t d_out() const { return weights.rows; }

  // Identity in the leading min(d_out, d_in) block, zero elsewhere.
  static ProjectionHead identity(std::size_t d_in, std::size_t d_out = 0, double temperature = 1.0);

  std::vector<double> project(const EmbeddingVector& x) const;

  nlohmann::json to_json() const;
  static ProjectionHead from_json(const nlohmann::json& j);
  void save(const std::filesystem::path& path) const;
  static ProjectionHead load(const std::filesystem::path& path);

  bool operator==(const ProjectionHead&) const = default;
};

struct TrainBatch {
  EmbeddingVector context;
  EmbeddingVector positive;
  std::vector<EmbeddingVector> negatives;
};

// Cosine with the zero convention: a zero operand scores 0.
double safe_cosine(std::span<const double> a, std::span<const double> b);

struct LossAndGradient {
  double loss = 0.0;
  Matrix gradient;               // d_out x d_in
  std::size_t zero_vectors = 0;  // projections that hit the zero convention
};

// Mean over items of logsumexp(w/t) - w+/t, w the cosine of projected
// context and responses. Throws PreconditionError on an empty batch and
// DomainError on dimension mismatch.
double contrastive_loss(std::span<const TrainBatch> batch, const ProjectionHead& head);

// Exact gradient of contrastive_loss with respect to the head weights.
LossAndGradient loss_gradient(std::span<const TrainBatch> batch, const ProjectionHead& head);

// n_neg responses drawn uniformly without replacement from pairs of other
// dialogues. Throws ConfigError when the pool is too small.
std::vector<Utterance> sample_negatives(const ContextResponse& pair, std::span<const ContextResponse> corpus,
                                        std::size_t n_neg, std::uint64_t seed);
// Index form of the same draw.
std::vector<std::size_t> sample_negative_indices(const std::string& dialogue_id,
                                                 std::span<const ContextResponse> corpus, std::size_t n_neg,
                                                 std::uint64_t seed);

inline constexpr const char* kContextSeparator = " [SEP] ";
std::string join_context(std::span<const Utterance> context, const std::string& separator = kContextSeparator);

struct TrainConfig {
  std::size_t epochs = 5;
  double lr = 5e-5;
  std::size_t batch_size = 64;
  std::size_t n_neg = 9;
  std::uint64_t seed = 0;
  std::size_t d_out = 0;  // 0 keeps the embedder dimension
  double temperature = 1.0;
  bool normalize_output = true;
  std::string separator = kContextSeparator;
};

struct TrainResult {
  ProjectionHead head;
  std::vector<double> train_loss;       // one per epoch
  std::vector<double> validation_loss;  // index 0 is the initial head
  std::size_t best_epoch = 0;           // 0 means the initial head won
};

// Mini-batch gradient descent with negatives resampled every epoch. The
// head with the lowest validation loss is returned (training loss on fixed
// negatives when no validation pairs are given).
TrainResult train_head(std::span<const ContextResponse> pairs, const Embedder& embedder, const TrainConfig& config,
                       std::span<const ContextResponse> validation = {});

struct IndexEntry {
  std::string script_id;
  std::string purpose;
  std::string strategy;
  std::string text;
};

class RecallIndex {
 public:
  struct Block {
    std::vector<IndexEntry> entries;
    Matrix embeddings;  // projected, one row per entry
  };

  RecallIndex() = default;
  RecallIndex(ProjectionHead head, std::set<std::string> purposes, std::string separator = kContextSeparator)
      : head_(std::move(head)), purposes_(std::move(purposes)), separator_(std::move(separator)) {}

  const ProjectionHead& head() const { return head_; }
  const std::set<std::string>& purposes() const { return purposes_; }
  const std::string& separator() const { return separator_; }
  const std::map<std::string, Block>& blocks() const { return blocks_; }
  std::size_t size() const;
  bool knows_purpose(const std::string& p) const;

  void add_block(const std::string& purpose, Block block) { blocks_[purpose] = std::move(block); }

  nlohmann::json to_json() const;
  static RecallIndex from_json(const nlohmann::json& j);

  bool operator==(const RecallIndex&) const;

 private:
  ProjectionHead head_;
  std::set<std::string> purposes_;  // empty accepts any purpose
  std::string separator_;
  std::map<std::string, Block> blocks_;
};

// Throws PreconditionError for non-approved scripts or a dimension mismatch.
RecallIndex build_index(std::span<const Script> scripts, const Embedder& embedder, const ProjectionHead& head,
                        std::set<std::string> purposes = {});

struct Recalled {
  std::string script_id;
  double similarity = 0.0;
  std::size_t recall_rank = 0;  // 1-based
};

// Exhaustive cosine scan over the purpose's scripts; similarity descending,
// ties by script id. Throws DomainError for an unknown purpose.
std::vector<Recalled> recall_top_n(const RecallIndex& index, const Embedder& embedder,
                                   std::span<const Utterance> context, const std::string& purpose, std::size_t n);

// Scores the candidates of one case; candidates[0] is the truth.
using CandidateScorer =
    std::function<std::vector<double>(const ContextResponse& query, std::span<const std::size_t> candidates)>;

// For each case, ranks the truth among itself plus size-1 seeded responses
// of other dialogues. Rank counts distractors scoring >= the truth, so ties
// go against the truth. R@k = fraction with rank <= k.
std::map<std::size_t, double> eval_recall_at_k(std::span<const ContextResponse> cases, const CandidateScorer& scorer,
                                               std::span<const std::size_t> k_values,
                                               std::size_t candidate_set_size, std::uint64_t seed);

std::map<std::size_t, double> eval_recall_at_k(const ProjectionHead& head, const Embedder& embedder,
                                               std::span<const ContextResponse> cases,
                                               std::span<const std::size_t> k_values,
                                               std::size_t candidate_set_size = 10, std::uint64_t seed = 0,
                                               const std::string& separator = kContextSeparator);

nlohmann::json recall_report_json(const std::map<std::size_t, double>& r_at_k);

}  // namespace respsel
