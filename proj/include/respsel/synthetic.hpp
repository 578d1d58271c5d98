#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "respsel/corpus.hpp"
#include "respsel/embedding.hpp"
#include "respsel/library.hpp"
#include "respsel/ranking.hpp"

namespace respsel::synthetic {

const std::vector<std::string>& strategies();
const std::vector<std::string>& purposes();
std::vector<PurposeGuideline> guidelines();

struct CorpusOptions {
  std::size_t dialogues = 240;
  std::size_t min_exchanges = 4;  // collector+debtor pairs per dialogue
  std::size_t max_exchanges = 7;
  double label_rate = 0.9;
  std::size_t invalid_records = 2;  // alternation violations mixed in
  std::uint64_t seed = 2024;
};

// Dialogue JSONL lines; `invalid_records` of them break turn alternation.
std::vector<std::string> corpus_lines(const CorpusOptions& opts);

// Expert-label JSONL cases: a context and three recall-ordered candidates,
// exactly one of which is written as the best reply.
std::vector<LabeledCase> expert_cases(std::size_t n, std::uint64_t seed);

// items x 3 categories of rater counts with moderate agreement.
std::vector<std::vector<double>> rater_counts(std::size_t items, int raters, std::uint64_t seed);

// Writes corpus.jsonl, labels.json, guidelines.json, expert_labels.jsonl
// and rater_counts.json into `dir`.
void write_bundle(const std::filesystem::path& dir, const CorpusOptions& opts);

struct PlantedOptions {
  std::size_t pairs = 2400;
  std::size_t concepts = 40;
  std::size_t fillers = 60;
  std::uint64_t seed = 99;
};

// Context/response pairs where the context's last turn carries two concept
// tokens and the response carries their (different) partner tokens, amid
// shared filler. Token strings are chosen so that no two land in the same
// mock-embedder bucket. Each pair is its own dialogue.
std::vector<ContextResponse> planted_pairs(const PlantedOptions& opts, const MockEmbedder& embedder,
                                           const std::string& separator);

}  // namespace respsel::synthetic
