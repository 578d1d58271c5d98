#include "respsel/ranking.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <future>
#include <set>
#include <sstream>

#include "respsel/errors.hpp"
#include "respsel/hashing.hpp"
#include "respsel/text.hpp"

namespace respsel {

using nlohmann::json;

namespace {
const std::array<const char*, 3> kAspectKeys = {"empathetic_engagement", "effective_problem_solving",
                                                "contextual_relevance"};
}

void Rubric::validate() const {
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& a = aspects[i];
    if (a.key != kAspectKeys[i]) throw ValidationError(std::string("rubric aspect ") + std::to_string(i) + " must be " + kAspectKeys[i]);
    if (a.name.empty()) throw ValidationError("rubric aspect '" + a.key + "' has no name");
    for (int level : {3, 2, 1}) {
      auto it = a.levels.find(level);
      if (it == a.levels.end() || trim(it->second).empty())
        throw ValidationError("rubric aspect '" + a.key + "' lacks criteria for level " + std::to_string(level));
    }
  }
}

std::string Rubric::hash() const { return content_hash(to_json().dump()); }

Rubric Rubric::standard() {
  Rubric r;
  r.aspects[0] = {"empathetic_engagement",
                  "Empathetic Engagement",
                  "Politeness toward the debtor and visible understanding of the hardship they describe.",
                  {{3, "Courteous throughout and explicitly acknowledges the debtor's situation before asking for anything."},
                   {2, "Polite but generic; little acknowledgement of what the debtor said."},
                   {1, "Curt, dismissive or pressuring without any acknowledgement of the debtor."}}};
  r.aspects[1] = {"effective_problem_solving",
                  "Effective Problem-Solving",
                  "Whether the script makes the consequences of non-payment clear and offers a workable way forward.",
                  {{3, "States the consequence of the breach plainly and proposes a concrete, feasible repayment step."},
                   {2, "Mentions either the consequence or a next step, but vaguely or not both."},
                   {1, "Neither explains consequences nor offers any path to repayment."}}};
  r.aspects[2] = {"contextual_relevance",
                  "Contextual Relevance",
                  "Logical coherence of the script with the preceding conversation.",
                  {{3, "Directly answers the debtor's last turn and fits the flow of the conversation."},
                   {2, "Loosely related to the conversation; partly ignores the last turn."},
                   {1, "Off-topic or contradicts what has been said."}}};
  return r;
}

json Rubric::to_json() const {
  json arr = json::array();
  for (const auto& a : aspects) {
    json levels = json::object();
    for (const auto& [lvl, text] : a.levels) levels[std::to_string(lvl)] = text;
    arr.push_back({{"key", a.key}, {"name", a.name}, {"description", a.description}, {"levels", levels}});
  }
  return {{"aspects", arr}};
}

Rubric Rubric::from_json(const json& j) {
  Rubric r;
  try {
    const auto& arr = j.at("aspects");
    if (!arr.is_array() || arr.size() != 3) throw ValidationError("rubric needs exactly three aspects");
    for (std::size_t i = 0; i < 3; ++i) {
      auto& a = r.aspects[i];
      a.key = arr[i].at("key").get<std::string>();
      a.name = arr[i].at("name").get<std::string>();
      a.description = arr[i].value("description", "");
      for (const auto& [lvl, text] : arr[i].at("levels").items()) a.levels[std::stoi(lvl)] = text.get<std::string>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed rubric: ") + e.what());
  }
  r.validate();
  return r;
}

json AspectScores::to_json() const {
  return {{"empathetic_engagement", empathetic_engagement},
          {"effective_problem_solving", effective_problem_solving},
          {"contextual_relevance", contextual_relevance},
          {"rationale", rationale}};
}

std::vector<Utterance> last_turns(std::span<const Utterance> context, std::size_t turns) {
  const std::size_t keep = std::min(context.size(), 2 * turns);
  return {context.end() - static_cast<std::ptrdiff_t>(keep), context.end()};
}

std::string rubric_instruction(const Rubric& rubric) {
  std::ostringstream p;
  p << "You are an experienced debt collection supervisor. Read the conversation and the candidate response the "
       "collector could say next. Score the candidate on each aspect with 3 (excellent), 2 (good) or 1 (poor).\n\n";
  for (const auto& a : rubric.aspects) {
    p << "## " << a.name << " (" << a.key << ")\n" << a.description << "\n";
    for (int level : {3, 2, 1}) p << level << ": " << a.levels.at(level) << "\n";
    p << "\n";
  }
  p << "Answer with a single JSON object and nothing else: {\"empathetic_engagement\": <1-3>, "
       "\"effective_problem_solving\": <1-3>, \"contextual_relevance\": <1-3>, \"rationale\": \"<short reason>\"}";
  return p.str();
}

std::string rubric_input(std::span<const Utterance> context, const std::string& candidate, std::size_t turns) {
  std::ostringstream p;
  p << "### Context\n";
  for (const auto& u : last_turns(context, turns)) p << to_string(u.speaker) << ": " << u.text << "\n";
  p << "### Candidate\n" << candidate << "\n";
  return p.str();
}

std::string build_rubric_prompt(std::span<const Utterance> context, const std::string& candidate, const Rubric& rubric,
                                std::size_t turns) {
  if (context.empty()) throw PreconditionError("rubric prompt needs a nonempty context");
  rubric.validate();
  return rubric_instruction(rubric) + "\n\n" + rubric_input(context, candidate, turns);
}

namespace {

// Index past the end of the balanced object starting at `open`, or npos.
std::size_t balanced_end(const std::string& s, std::size_t open) {
  int depth = 0;
  bool in_str = false, esc = false;
  for (std::size_t i = open; i < s.size(); ++i) {
    const char c = s[i];
    if (in_str) {
      if (esc) esc = false;
      else if (c == '\\') esc = true;
      else if (c == '"') in_str = false;
      continue;
    }
    if (c == '"') in_str = true;
    else if (c == '{') ++depth;
    else if (c == '}' && --depth == 0) return i + 1;
  }
  return std::string::npos;
}

int score_field(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(std::string("missing score field '") + key + "'");
  if (!it->is_number_integer()) throw ParseError(std::string("score field '") + key + "' is not an integer");
  const auto v = it->get<long long>();
  if (v < 1 || v > 3) throw ParseError(std::string("score field '") + key + "' out of range: " + std::to_string(v));
  return static_cast<int>(v);
}

}  // namespace

AspectScores parse_scores(const std::string& raw) {
  for (std::size_t open = raw.find('{'); open != std::string::npos; open = raw.find('{', open + 1)) {
    const std::size_t end = balanced_end(raw, open);
    if (end == std::string::npos) break;
    json obj;
    try {
      obj = json::parse(raw.substr(open, end - open));
    } catch (const json::parse_error&) {
      continue;
    }
    AspectScores s;
    s.empathetic_engagement = score_field(obj, kAspectKeys[0]);
    s.effective_problem_solving = score_field(obj, kAspectKeys[1]);
    s.contextual_relevance = score_field(obj, kAspectKeys[2]);
    if (auto it = obj.find("rationale"); it != obj.end()) {
      if (!it->is_string()) throw ParseError("rationale must be a string");
      s.rationale = it->get<std::string>();
    }
    return s;
  }
  throw ParseError("no JSON object in scorer reply");
}

namespace {

std::set<std::string> content_words(const std::string& text) {
  std::set<std::string> out;
  std::string w;
  auto flush = [&] {
    if (w.size() > 2) out.insert(w);
    w.clear();
  };
  for (unsigned char c : text) {
    if (std::isalnum(c)) w += static_cast<char>(std::tolower(c));
    else flush();
  }
  flush();
  return out;
}

std::string section(const std::string& prompt, const std::string& header) {
  const auto start = prompt.find(header);
  if (start == std::string::npos) return {};
  const auto body = start + header.size();
  const auto next = prompt.find("\n### ", body);
  return prompt.substr(body, next == std::string::npos ? std::string::npos : next - body);
}

int keyword_level(const std::set<std::string>& words, std::initializer_list<const char*> strong, int strong_needed) {
  int hits = 0;
  for (const char* k : strong) hits += words.contains(k) ? 1 : 0;
  if (hits >= strong_needed) return 3;
  return hits > 0 ? 2 : 1;
}

}  // namespace

std::string MockScorer::complete(const std::string& prompt, double) const {
  const std::string candidate = section(prompt, "### Candidate\n");
  const std::string context = section(prompt, "### Context\n");
  std::string last_debtor;
  std::istringstream lines(context);
  for (std::string line; std::getline(lines, line);)
    if (line.rfind("debtor: ", 0) == 0) last_debtor = line.substr(8);

  const auto cand = content_words(candidate);
  const int empathy = keyword_level(cand, {"understand", "sorry", "appreciate", "thank", "hear", "help"}, 2);
  const int solving = keyword_level(cand, {"pay", "payment", "plan", "installment", "installments", "repay",
                                          "credit", "record", "report", "letter", "fee", "fees", "today", "arrange"},
                                    2);
  const auto ctx = content_words(last_debtor);
  std::size_t shared = 0;
  for (const auto& w : cand) shared += ctx.contains(w) ? 1 : 0;
  const int relevance = shared >= 2 ? 3 : shared == 1 ? 2 : 1;

  json reply = {{"empathetic_engagement", empathy},
                {"effective_problem_solving", solving},
                {"contextual_relevance", relevance},
                {"rationale", "empathy cues " + std::to_string(empathy) + ", solution cues " + std::to_string(solving) +
                                  ", " + std::to_string(shared) + " words shared with the debtor's last turn"}};
  return "Scores: " + reply.dump();
}

std::string RemoteScorer::complete(const std::string& prompt, double temperature) const {
  const json reply = post_json(endpoint_, "/chat", {{"prompt", prompt}, {"temperature", temperature}}, http_);
  try {
    return reply.at("text").get<std::string>();
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed chat reply: ") + e.what());
  }
}

void ScorerSpec::validate() const {
  if (kind == ScorerKind::remote && (!endpoint || endpoint->empty()))
    throw ConfigError("remote scorer requires an endpoint");
}

std::shared_ptr<const ScorerClient> make_scorer(const ScorerSpec& spec) {
  spec.validate();
  if (spec.kind == ScorerKind::mock) return std::make_shared<MockScorer>();
  HttpOptions http;
  http.max_attempts = spec.max_attempts;
  return std::make_shared<RemoteScorer>(*spec.endpoint, http);
}

std::string ScoreCache::key(std::span<const Utterance> context, const std::string& script_id, const Rubric& rubric) {
  std::string ctx;
  for (const auto& u : context) ctx += std::string(to_string(u.speaker)) + '\x1f' + u.text + '\x1e';
  return content_hash(ctx) + "|" + script_id + "|" + rubric.hash();
}

std::optional<AspectScores> ScoreCache::get(const std::string& key) const {
  std::shared_lock lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void ScoreCache::put(const std::string& key, const AspectScores& s) {
  std::unique_lock lock(mu_);
  entries_[key] = s;
}

std::size_t ScoreCache::size() const {
  std::shared_lock lock(mu_);
  return entries_.size();
}

ScoreOutcome score_candidate(std::span<const Utterance> context, const Candidate& candidate,
                             const ScorerClient& scorer, const Rubric& rubric, const ScoreOptions& opts) {
  const auto turns = last_turns(context, opts.turns);
  std::string cache_key;
  if (opts.cache) {
    cache_key = ScoreCache::key(turns, candidate.script_id, rubric);
    if (auto hit = opts.cache->get(cache_key)) return {*hit, false, 0};
  }
  const std::string prompt = build_rubric_prompt(context, candidate.text, rubric, opts.turns);
  const int attempts = 1 + std::max(0, opts.retries);
  ScoreOutcome out;
  std::optional<TransportError> last_transport;
  for (int a = 1; a <= attempts; ++a) {
    out.attempts = a;
    try {
      out.scores = parse_scores(scorer.complete(prompt, opts.temperature));
      if (opts.cache) opts.cache->put(cache_key, out.scores);
      return out;
    } catch (const ParseError&) {
      last_transport.reset();
    } catch (const TransportError& e) {
      last_transport = e;
    }
  }
  if (last_transport) throw *last_transport;
  out.scores = AspectScores{2, 2, 2, "unparseable"};
  out.unparseable = true;
  return out;
}

void order_scored(std::vector<ScoredCandidate>& scored) {
  std::sort(scored.begin(), scored.end(), [](const ScoredCandidate& a, const ScoredCandidate& b) {
    if (a.overall != b.overall) return a.overall > b.overall;
    return a.recall_rank < b.recall_rank;
  });
}

RankResult rank_candidates(std::span<const Utterance> context, std::span<const Candidate> candidates,
                           const ScorerClient& scorer, const Rubric& rubric, const RankOptions& opts) {
  if (candidates.empty()) throw PreconditionError("rank_candidates needs at least one candidate");
  std::set<std::size_t> ranks;
  for (const auto& c : candidates)
    if (!ranks.insert(c.recall_rank).second)
      throw PreconditionError("duplicate recall rank " + std::to_string(c.recall_rank));

  std::vector<ScoredCandidate> scored(candidates.size());
  auto score_one = [&](std::size_t i) {
    const ScoreOutcome o = score_candidate(context, candidates[i], scorer, rubric, opts.score);
    // Sum in integer arithmetic so equal score triples tie exactly.
    const int sum = o.scores.empathetic_engagement + o.scores.effective_problem_solving + o.scores.contextual_relevance;
    scored[i] = {candidates[i].script_id, candidates[i].text, candidates[i].recall_rank, o.scores, sum / 3.0,
                 o.unparseable};
  };
  const std::size_t cap = std::max<std::size_t>(1, opts.max_concurrency);
  if (cap == 1) {
    for (std::size_t i = 0; i < candidates.size(); ++i) score_one(i);
  } else {
    for (std::size_t start = 0; start < candidates.size(); start += cap) {
      std::vector<std::future<void>> wave;
      for (std::size_t i = start; i < std::min(candidates.size(), start + cap); ++i)
        wave.push_back(std::async(std::launch::async, score_one, i));
      for (auto& f : wave) f.wait();
      for (auto& f : wave) f.get();
    }
  }
  order_scored(scored);
  return {scored.front(), scored};
}

ExportStats export_distillation(std::span<const DistillCase> cases, const ScorerClient& teacher, const Rubric& rubric,
                                std::ostream& sink, const ScoreOptions& opts) {
  rubric.validate();
  const std::string instruction = rubric_instruction(rubric);
  ExportStats stats;
  for (const auto& c : cases) {
    const std::string prompt = build_rubric_prompt(c.context, c.candidate.text, rubric, opts.turns);
    AspectScores scores;
    try {
      scores = parse_scores(teacher.complete(prompt, opts.temperature));
    } catch (const ParseError&) {
      ++stats.dropped;
      continue;
    }
    DistillationRecord rec{instruction, rubric_input(c.context, c.candidate.text, opts.turns), scores.to_json().dump()};
    sink << rec.to_json().dump() << '\n';
    if (!sink) throw IoError("distillation sink write failed");
    ++stats.written;
  }
  sink.flush();
  if (!sink) throw IoError("distillation sink write failed");
  return stats;
}

double fleiss_kappa(const std::vector<std::vector<double>>& counts) {
  if (counts.empty()) throw DomainError("fleiss_kappa needs at least one item");
  const std::size_t cats = counts.front().size();
  if (cats == 0) throw DomainError("fleiss_kappa needs at least one category");
  double n = 0.0;
  for (double v : counts.front()) n += v;
  if (n < 2) throw DomainError("fleiss_kappa needs at least 2 raters per item");

  std::vector<double> col(cats, 0.0);
  double p_bar = 0.0;
  for (const auto& row : counts) {
    if (row.size() != cats) throw DomainError("rows have different category counts");
    double sum = 0.0, sq = 0.0;
    for (std::size_t j = 0; j < cats; ++j) {
      if (row[j] < 0) throw DomainError("negative rater count");
      sum += row[j];
      sq += row[j] * row[j];
      col[j] += row[j];
    }
    if (std::abs(sum - n) > 1e-9) throw DomainError("every item must have the same number of raters");
    p_bar += (sq - n) / (n * (n - 1));
  }
  const double items = static_cast<double>(counts.size());
  p_bar /= items;
  double p_e = 0.0;
  for (double c : col) {
    const double p = c / (items * n);
    p_e += p * p;
  }
  if (std::abs(1.0 - p_e) < 1e-12) throw DomainError("degenerate agreement: all ratings fall in one category");
  return (p_bar - p_e) / (1.0 - p_e);
}

LabeledCase labeled_case_from_json(const json& j) {
  LabeledCase c;
  try {
    for (const auto& u : j.at("context")) c.context.push_back(utterance_from_json(u));
    for (const auto& cand : j.at("candidates"))
      c.candidates.push_back({cand.at("script_id").get<std::string>(), cand.at("text").get<std::string>(),
                              cand.at("recall_rank").get<std::size_t>()});
    c.chosen = j.at("chosen").get<std::string>();
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed labeled case: ") + e.what());
  } catch (const ValidationError& e) {
    throw DataError(std::string("malformed labeled case: ") + e.what());
  }
  return c;
}

std::vector<LabeledCase> parse_labeled_cases(std::istream& in) {
  std::vector<LabeledCase> out;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(labeled_case_from_json(json::parse(line)));
    } catch (const json::parse_error& e) {
      throw ParseError(e.what(), lineno);
    }
  }
  return out;
}

double eval_ranking_r1(std::span<const LabeledCase> cases, const Ranker& ranker) {
  if (cases.empty()) throw PreconditionError("no labeled cases");
  std::size_t hits = 0;
  for (const auto& c : cases) {
    const bool present = std::any_of(c.candidates.begin(), c.candidates.end(),
                                     [&](const Candidate& k) { return k.script_id == c.chosen; });
    if (!present) throw DataError("expert choice '" + c.chosen + "' is not among the candidates");
    if (ranker(c) == c.chosen) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(cases.size());
}

}  // namespace respsel
