#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "respsel/embedding.hpp"
#include "respsel/text.hpp"

namespace respsel {

struct Clustering {
  std::size_t k = 0;
  std::vector<std::size_t> assignments;        // item -> cluster
  std::vector<EmbeddingVector> centers;        // member means
  std::vector<std::vector<std::size_t>> members;  // ascending item indices
  std::vector<double> objective_history;       // SSE after each Lloyd update
  std::size_t iterations = 0;
  bool converged = false;

  double objective() const { return objective_history.empty() ? 0.0 : objective_history.back(); }

  // Centers become member means. Throws DomainError if any cluster is empty.
  static Clustering from_assignments(std::span<const EmbeddingVector> vectors, std::vector<std::size_t> assignments,
                                     std::size_t k);
};

struct KMeansOptions {
  std::size_t k = 4;
  std::uint64_t seed = 0;
  std::size_t max_iter = 100;
  double tol = 1e-6;
  // Independent k-means++ restarts; the lowest final objective wins.
  std::size_t n_init = 10;
};

// Lloyd iterations from k-means++ seeding. Empty clusters take the point
// farthest from its center. Throws DomainError when k exceeds the item count.
Clustering kmeans(std::span<const EmbeddingVector> vectors, const KMeansOptions& opts);

// Mean member-to-own-center L2 distance per cluster, averaged over clusters.
double intra_distance(const Clustering& c, std::span<const EmbeddingVector> vectors);

// Mean member-to-foreign-center distance per ordered cluster pair, averaged
// over the k(k-1) pairs. Throws DomainError for k < 2.
double inter_distance(const Clustering& c, std::span<const EmbeddingVector> vectors);

struct SeedScript {
  std::string text;
  std::string strategy;
  std::size_t cluster_id = 0;
  double center_distance = 0.0;
  std::size_t source_index = 0;  // position in the clustered input
};

// Per cluster, the `per_cluster` members nearest the center (ties: lower index).
std::vector<SeedScript> select_seeds(const Clustering& c, std::span<const EmbeddingVector> vectors,
                                     std::span<const std::string> texts, const std::string& strategy,
                                     std::size_t per_cluster = 5);

// Pooled unique n-grams / total n-grams; n-grams never cross text boundaries.
// Throws DomainError when no text yields an n-gram.
double distinct_n(std::span<const std::string> texts, std::size_t n, Tokenizer tokenizer = Tokenizer::character);

struct StrategyClusterReport {
  std::string strategy;
  std::size_t k = 0;
  std::size_t items = 0;
  double intra = 0.0;
  std::optional<double> inter;  // absent when k == 1
  std::vector<std::string> seed_texts;
};

nlohmann::json cluster_report_json(const std::vector<StrategyClusterReport>& rows, Tokenizer distinct_tokenizer,
                                   std::optional<double> distinct1, std::optional<double> distinct2);
// Strategy | d_intra | d_inter table with an Average row.
std::string cluster_report_table(const std::vector<StrategyClusterReport>& rows);

}  // namespace respsel
