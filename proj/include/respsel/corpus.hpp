#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "respsel/errors.hpp"

namespace respsel {

enum class Speaker { collector, debtor };

const char* to_string(Speaker s);
Speaker speaker_from_string(const std::string& s);

struct Utterance {
  Speaker speaker = Speaker::collector;
  std::string text;
  std::optional<std::string> strategy;  // collector only
  std::optional<std::string> purpose;   // debtor only

  bool operator==(const Utterance&) const = default;
};

struct Dialogue {
  std::string id;
  std::vector<Utterance> utterances;

  bool operator==(const Dialogue&) const = default;
};

struct UtterancePair {
  Utterance debtor_utterance;
  Utterance collector_utterance;
  std::string dialogue_id;
};

// Five context turns (d, c, d, c, d) followed by the collector response.
struct ContextResponse {
  std::array<Utterance, 5> context;
  Utterance response;
  std::string dialogue_id;

  const std::string& purpose() const;  // label of the last debtor turn, may be empty
};

// Strategy list S and purpose list P. Empty sets accept any label.
struct LabelVocab {
  std::set<std::string> strategies;
  std::set<std::string> purposes;

  bool knows_strategy(const std::string& s) const { return strategies.empty() || strategies.contains(s); }
  bool knows_purpose(const std::string& p) const { return purposes.empty() || purposes.contains(p); }

  static LabelVocab from_json(const nlohmann::json& j);
  nlohmann::json to_json() const;
};

struct Rejection {
  std::size_t line = 0;
  std::string dialogue_id;
  std::string reason;
};

struct ParseResult {
  std::vector<Dialogue> dialogues;
  std::vector<Rejection> rejections;
};

struct ParseOptions {
  const LabelVocab* vocab = nullptr;
  // Throw ValidationError on the first invalid record instead of collecting it.
  bool strict = false;
};

// Throws ValidationError naming the dialogue when an invariant fails.
void validate_dialogue(const Dialogue& d, const LabelVocab* vocab = nullptr);

// One JSON record per line. Malformed JSON throws ParseError with the line
// number; records that parse but fail validation land in `rejections`.
ParseResult parse_dialogues(std::istream& in, const ParseOptions& opts = {});

nlohmann::json to_json(const Utterance& u);
nlohmann::json to_json(const Dialogue& d);
nlohmann::json to_json(const ContextResponse& w);
nlohmann::json to_json(const UtterancePair& p);
nlohmann::json to_json(const Rejection& r);
Utterance utterance_from_json(const nlohmann::json& j);
ContextResponse context_response_from_json(const nlohmann::json& j);
UtterancePair utterance_pair_from_json(const nlohmann::json& j);

std::vector<UtterancePair> extract_pairs(const Dialogue& dialogue);

// Windows start at every debtor turn; one is emitted when all six turns exist.
std::vector<ContextResponse> segment_windows(const Dialogue& dialogue);

struct SplitRatios {
  double train = 8;
  double val = 1;
  double test = 1;
};

struct SplitSizes {
  std::size_t train = 0, val = 0, test = 0;
};

// val/test get floor(n * ratio); the remainder goes to train.
SplitSizes split_sizes(std::size_t n, const SplitRatios& ratios);

template <typename T>
struct Split {
  std::vector<T> train, val, test;
};

template <typename T>
Split<T> split_dataset(std::vector<T> items, const SplitRatios& ratios, std::uint64_t seed) {
  const SplitSizes sizes = split_sizes(items.size(), ratios);
  std::mt19937_64 rng(seed);
  std::shuffle(items.begin(), items.end(), rng);
  Split<T> out;
  auto it = items.begin();
  out.train.assign(std::make_move_iterator(it), std::make_move_iterator(it + sizes.train));
  it += sizes.train;
  out.val.assign(std::make_move_iterator(it), std::make_move_iterator(it + sizes.val));
  it += sizes.val;
  out.test.assign(std::make_move_iterator(it), std::make_move_iterator(items.end()));
  return out;
}

}  // namespace respsel
