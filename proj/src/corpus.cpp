#include "respsel/corpus.hpp"

#include <cctype>

namespace respsel {

using nlohmann::json;

const char* to_string(Speaker s) { return s == Speaker::collector ? "collector" : "debtor"; }

Speaker speaker_from_string(const std::string& s) {
  if (s == "collector") return Speaker::collector;
  if (s == "debtor") return Speaker::debtor;
  throw ValidationError("unknown speaker '" + s + "'");
}

const std::string& ContextResponse::purpose() const {
  static const std::string empty;
  return context[4].purpose ? *context[4].purpose : empty;
}

LabelVocab LabelVocab::from_json(const json& j) {
  LabelVocab v;
  for (const auto& s : j.value("strategies", json::array())) v.strategies.insert(s.get<std::string>());
  for (const auto& p : j.value("purposes", json::array())) v.purposes.insert(p.get<std::string>());
  return v;
}

json LabelVocab::to_json() const { return {{"strategies", strategies}, {"purposes", purposes}}; }

namespace {

bool blank(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

std::optional<std::string> optional_label(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) throw ValidationError(std::string(key) + " must be a string or null");
  return it->get<std::string>();
}

}  // namespace

void validate_dialogue(const Dialogue& d, const LabelVocab* vocab) {
  auto fail = [&](const std::string& why) { throw ValidationError("dialogue '" + d.id + "': " + why); };
  if (d.id.empty()) throw ValidationError("dialogue with empty id");
  if (d.utterances.size() < 2) fail("needs at least 2 utterances");
  for (std::size_t i = 0; i < d.utterances.size(); ++i) {
    const Utterance& u = d.utterances[i];
    const Speaker expected = i % 2 == 0 ? Speaker::collector : Speaker::debtor;
    const std::string at = " at turn " + std::to_string(i);
    if (u.speaker != expected) fail(std::string("expected ") + to_string(expected) + at + " (turns must alternate, collector first)");
    if (blank(u.text)) fail("empty text" + at);
    if (u.speaker == Speaker::debtor && u.strategy) fail("debtor turn carries a strategy" + at);
    if (u.speaker == Speaker::collector && u.purpose) fail("collector turn carries a purpose" + at);
    if (vocab) {
      if (u.strategy && !vocab->knows_strategy(*u.strategy)) fail("unknown strategy '" + *u.strategy + "'" + at);
      if (u.purpose && !vocab->knows_purpose(*u.purpose)) fail("unknown purpose '" + *u.purpose + "'" + at);
    }
  }
}

Utterance utterance_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("utterance must be an object");
  Utterance u;
  u.speaker = speaker_from_string(j.at("speaker").get<std::string>());
  u.text = j.at("text").get<std::string>();
  u.strategy = optional_label(j, "strategy");
  u.purpose = optional_label(j, "purpose");
  return u;
}

json to_json(const Utterance& u) {
  return {{"speaker", to_string(u.speaker)},
          {"text", u.text},
          {"strategy", u.strategy ? json(*u.strategy) : json(nullptr)},
          {"purpose", u.purpose ? json(*u.purpose) : json(nullptr)}};
}

json to_json(const Dialogue& d) {
  json utts = json::array();
  for (const auto& u : d.utterances) utts.push_back(to_json(u));
  return {{"dialogue_id", d.id}, {"utterances", std::move(utts)}};
}

json to_json(const ContextResponse& w) {
  json ctx = json::array();
  for (const auto& u : w.context) ctx.push_back(to_json(u));
  return {{"dialogue_id", w.dialogue_id}, {"context", std::move(ctx)}, {"response", to_json(w.response)}};
}

json to_json(const UtterancePair& p) {
  return {{"dialogue_id", p.dialogue_id},
          {"debtor", to_json(p.debtor_utterance)},
          {"collector", to_json(p.collector_utterance)}};
}

json to_json(const Rejection& r) { return {{"line", r.line}, {"dialogue_id", r.dialogue_id}, {"reason", r.reason}}; }

ContextResponse context_response_from_json(const json& j) {
  ContextResponse w;
  w.dialogue_id = j.at("dialogue_id").get<std::string>();
  const auto& ctx = j.at("context");
  if (!ctx.is_array() || ctx.size() != 5) throw ValidationError("context must hold exactly 5 utterances");
  for (std::size_t i = 0; i < 5; ++i) w.context[i] = utterance_from_json(ctx[i]);
  w.response = utterance_from_json(j.at("response"));
  return w;
}

UtterancePair utterance_pair_from_json(const json& j) {
  return {utterance_from_json(j.at("debtor")), utterance_from_json(j.at("collector")),
          j.at("dialogue_id").get<std::string>()};
}

ParseResult parse_dialogues(std::istream& in, const ParseOptions& opts) {
  ParseResult out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (blank(line)) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    if (!rec.is_object()) throw ParseError("record is not an object", lineno);

    Dialogue d;
    try {
      if (auto it = rec.find("dialogue_id"); it != rec.end() && it->is_string()) d.id = it->get<std::string>();
      const auto& utts = rec.at("utterances");
      if (!utts.is_array()) throw ValidationError("utterances must be an array");
      for (const auto& u : utts) d.utterances.push_back(utterance_from_json(u));
      validate_dialogue(d, opts.vocab);
    } catch (const std::exception& e) {
      // json::exception covers missing keys and wrong value types.
      std::string reason = e.what();
      if (!dynamic_cast<const ValidationError*>(&e)) reason = "dialogue '" + d.id + "': " + reason;
      if (opts.strict) throw ValidationError("line " + std::to_string(lineno) + ": " + reason);
      out.rejections.push_back({lineno, d.id, reason});
      continue;
    }
    out.dialogues.push_back(std::move(d));
  }
  return out;
}

std::vector<UtterancePair> extract_pairs(const Dialogue& dialogue) {
  std::vector<UtterancePair> pairs;
  const auto& u = dialogue.utterances;
  for (std::size_t i = 1; i + 1 < u.size(); i += 2) {
    if (u[i].purpose && u[i + 1].strategy) pairs.push_back({u[i], u[i + 1], dialogue.id});
  }
  return pairs;
}

std::vector<ContextResponse> segment_windows(const Dialogue& dialogue) {
  std::vector<ContextResponse> windows;
  const auto& u = dialogue.utterances;
  for (std::size_t start = 1; start + 5 < u.size(); start += 2) {
    ContextResponse w;
    std::copy(u.begin() + start, u.begin() + start + 5, w.context.begin());
    w.response = u[start + 5];
    w.dialogue_id = dialogue.id;
    windows.push_back(std::move(w));
  }
  return windows;
}

SplitSizes split_sizes(std::size_t n, const SplitRatios& r) {
  if (!(r.train > 0 && r.val > 0 && r.test > 0)) throw DomainError("split ratios must be positive");
  const double total = r.train + r.val + r.test;
  // Small slack so 40000 * 0.1 does not floor to 3999.
  auto part = [&](double ratio) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratio / total + 1e-9));
  };
  SplitSizes s;
  s.val = part(r.val);
  s.test = part(r.test);
  s.train = n - s.val - s.test;
  return s;
}

}  // namespace respsel
