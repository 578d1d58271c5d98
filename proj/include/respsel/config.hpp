#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "respsel/clustering.hpp"
#include "respsel/corpus.hpp"
#include "respsel/embedding.hpp"
#include "respsel/library.hpp"
#include "respsel/ranking.hpp"
#include "respsel/recall.hpp"

namespace respsel {

struct PipelinePaths {
  std::filesystem::path corpus;
  std::filesystem::path labels;
  std::filesystem::path guidelines;
  std::filesystem::path work_dir;
  std::optional<std::filesystem::path> expert_labels;
  std::optional<std::filesystem::path> rater_counts;
  std::optional<std::filesystem::path> rubric;
};

struct PipelineConfig {
  PipelinePaths paths;
  EmbedderSpec library_embedder;
  EmbedderSpec recall_embedder;
  GenerationClientSpec generator;
  ScorerSpec scorer;

  KMeansOptions kmeans;  // k defaults to 4
  std::size_t per_cluster = 5;
  Tokenizer distinct_tokenizer = Tokenizer::character;

  std::size_t generate_count = 3;
  bool dedup = false;
  double dedup_threshold = 0.95;

  SplitRatios split;
  std::uint64_t split_seed = 0;

  TrainConfig train;
  std::size_t n_recall = 3;
  std::size_t candidate_set_size = 10;
  std::vector<std::size_t> k_values{1, 2, 3, 5};
  std::uint64_t eval_seed = 0;

  int score_retries = 2;
  std::size_t score_concurrency = 4;
  std::size_t context_turns = 3;
  std::size_t distill_max_cases = 100;

  std::string host = "127.0.0.1";
  int port = 8080;

  // Applies one seed to every stochastic stage.
  void override_seed(std::uint64_t seed);
  // Throws ConfigError when an invariant does not hold.
  void validate() const;
  // Throws ConfigError when a referenced input file does not exist.
  void check_paths() const;
};

// INI-style document: [section] headers with key = value lines. Relative
// paths resolve against the config file's directory. The environment
// variables RESPSEL_EMBEDDER_LIBRARY_ENDPOINT, RESPSEL_EMBEDDER_RECALL_ENDPOINT,
// RESPSEL_GENERATOR_ENDPOINT and RESPSEL_SCORER_ENDPOINT override endpoints.
PipelineConfig load_config(const std::filesystem::path& path);
PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir);

}  // namespace respsel
