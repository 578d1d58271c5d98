#include "respsel/library.hpp"

#include <chrono>
#include <ctime>
#include <fstream>
#include <numeric>
#include <random>
#include <regex>
#include <sstream>

#include "respsel/errors.hpp"
#include "respsel/hashing.hpp"
#include "respsel/text.hpp"

namespace respsel {

using nlohmann::json;

const char* to_string(Provenance p) { return p == Provenance::seed ? "seed" : "generated"; }

const char* to_string(ReviewStatus s) {
  switch (s) {
    case ReviewStatus::pending: return "pending";
    case ReviewStatus::approved: return "approved";
    case ReviewStatus::rejected: return "rejected";
  }
  return "pending";
}

const char* to_string(Verdict v) { return v == Verdict::approve ? "approve" : "reject"; }

Provenance provenance_from_string(const std::string& s) {
  if (s == "seed") return Provenance::seed;
  if (s == "generated") return Provenance::generated;
  throw ValidationError("unknown provenance '" + s + "'");
}

ReviewStatus review_status_from_string(const std::string& s) {
  if (s == "pending") return ReviewStatus::pending;
  if (s == "approved") return ReviewStatus::approved;
  if (s == "rejected") return ReviewStatus::rejected;
  throw ValidationError("unknown review status '" + s + "'");
}

Verdict verdict_from_string(const std::string& s) {
  if (s == "approve") return Verdict::approve;
  if (s == "reject") return Verdict::reject;
  throw ValidationError("unknown verdict '" + s + "'");
}

std::string script_id(const std::string& text, const std::string& purpose, const std::string& strategy) {
  return content_hash(text + '\x1f' + purpose + '\x1f' + strategy);
}

Script make_script(std::string text, std::string strategy, std::string purpose, Provenance provenance,
                   std::optional<std::size_t> cluster_id) {
  if (trim(text).empty()) throw ValidationError("script text is empty");
  if (strategy.empty() || purpose.empty()) throw ValidationError("script needs both strategy and purpose");
  Script s;
  s.id = script_id(text, purpose, strategy);
  s.text = std::move(text);
  s.strategy = std::move(strategy);
  s.purpose = std::move(purpose);
  s.provenance = provenance;
  s.cluster_id = cluster_id;
  return s;
}

std::string utc_timestamp_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

json to_json(const Script& s) {
  return {{"id", s.id},
          {"text", s.text},
          {"strategy", s.strategy},
          {"purpose", s.purpose},
          {"provenance", to_string(s.provenance)},
          {"cluster_id", s.cluster_id ? json(*s.cluster_id) : json(nullptr)},
          {"review_status", to_string(s.review_status)}};
}

Script script_from_json(const json& j) {
  Script s;
  s.id = j.at("id").get<std::string>();
  s.text = j.at("text").get<std::string>();
  s.strategy = j.at("strategy").get<std::string>();
  s.purpose = j.at("purpose").get<std::string>();
  s.provenance = provenance_from_string(j.at("provenance").get<std::string>());
  if (auto it = j.find("cluster_id"); it != j.end() && !it->is_null()) s.cluster_id = it->get<std::size_t>();
  s.review_status = review_status_from_string(j.at("review_status").get<std::string>());
  if (trim(s.text).empty() || s.strategy.empty() || s.purpose.empty())
    throw ValidationError("script '" + s.id + "' is missing text, strategy or purpose");
  return s;
}

bool ScriptLibrary::add(Script s) {
  if (s.id.empty()) s.id = script_id(s.text, s.purpose, s.strategy);
  return scripts_.emplace(s.id, std::move(s)).second;
}

const Script& ScriptLibrary::review(const std::string& id, Verdict verdict, const std::string& reviewer,
                                    const std::string& timestamp) {
  auto it = scripts_.find(id);
  if (it == scripts_.end()) throw NotFoundError("no script with id '" + id + "'");
  if (it->second.review_status != ReviewStatus::pending)
    throw StateError("script '" + id + "' is already " + to_string(it->second.review_status));
  it->second.review_status = verdict == Verdict::approve ? ReviewStatus::approved : ReviewStatus::rejected;
  audit_.push_back({id, reviewer, verdict, timestamp});
  return it->second;
}

std::vector<Script> ScriptLibrary::query(const std::string& purpose, const std::optional<std::string>& strategy) const {
  if (!purposes_.empty() && !purposes_.contains(purpose)) throw DomainError("unknown purpose '" + purpose + "'");
  std::vector<Script> out;
  for (const auto& [id, s] : scripts_) {
    if (s.review_status != ReviewStatus::approved || s.purpose != purpose) continue;
    if (strategy && s.strategy != *strategy) continue;
    out.push_back(s);
  }
  return out;
}

std::vector<Script> ScriptLibrary::list(const std::optional<std::string>& purpose,
                                        const std::optional<ReviewStatus>& status) const {
  std::vector<Script> out;
  for (const auto& [id, s] : scripts_) {
    if (purpose && s.purpose != *purpose) continue;
    if (status && s.review_status != *status) continue;
    out.push_back(s);
  }
  return out;
}

const Script* ScriptLibrary::find(const std::string& id) const {
  auto it = scripts_.find(id);
  return it == scripts_.end() ? nullptr : &it->second;
}

std::vector<Script> ScriptLibrary::all() const { return list(); }

json ScriptLibrary::to_json() const {
  json scripts = json::array();
  for (const auto& [id, s] : scripts_) scripts.push_back(respsel::to_json(s));
  json audit = json::array();
  for (const auto& a : audit_)
    audit.push_back({{"script_id", a.script_id},
                     {"reviewer", a.reviewer},
                     {"verdict", to_string(a.verdict)},
                     {"timestamp", a.timestamp}});
  return {{"scripts", std::move(scripts)}, {"audit", std::move(audit)}};
}

ScriptLibrary ScriptLibrary::from_json(const json& j, std::set<std::string> purposes) {
  ScriptLibrary lib(std::move(purposes));
  try {
    for (const auto& s : j.at("scripts")) {
      Script script = script_from_json(s);
      const std::string id = script.id;
      if (!lib.add(std::move(script))) throw ValidationError("duplicate script id '" + id + "'");
    }
    for (const auto& a : j.value("audit", json::array()))
      lib.audit_.push_back({a.at("script_id").get<std::string>(), a.at("reviewer").get<std::string>(),
                            verdict_from_string(a.at("verdict").get<std::string>()),
                            a.at("timestamp").get<std::string>()});
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed library document: ") + e.what());
  }
  return lib;
}

void ScriptLibrary::save(const std::filesystem::path& path) const {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp);
    out << to_json().dump(2) << '\n';
    if (!out) throw IoError("write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

ScriptLibrary ScriptLibrary::load(const std::filesystem::path& path, std::set<std::string> purposes) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return from_json(j, std::move(purposes));
}

LibraryStore::LibraryStore(ScriptLibrary lib, std::optional<std::filesystem::path> path)
    : current_(std::make_shared<const ScriptLibrary>(std::move(lib))), path_(std::move(path)) {}

std::shared_ptr<const ScriptLibrary> LibraryStore::snapshot() const {
  std::lock_guard lock(mu_);
  return current_;
}

Script LibraryStore::review(const std::string& id, Verdict verdict, const std::string& reviewer) {
  std::lock_guard lock(mu_);
  auto next = std::make_shared<ScriptLibrary>(*current_);
  Script updated = next->review(id, verdict, reviewer);
  if (path_) next->save(*path_);
  current_ = std::move(next);
  return updated;
}

std::vector<PurposeGuideline> guidelines_from_json(const json& j) {
  std::vector<PurposeGuideline> out;
  std::set<std::string> seen;
  for (auto it = j.begin(); it != j.end(); ++it) {
    PurposeGuideline g;
    if (j.is_object()) {
      g = {it.key(), it.value().get<std::string>()};
    } else {
      const char* key = it->contains("guideline_text") ? "guideline_text" : "guideline";
      g = {it->at("purpose").get<std::string>(), it->at(key).get<std::string>()};
    }
    if (!seen.insert(g.purpose).second) throw ValidationError("duplicate guideline for purpose '" + g.purpose + "'");
    out.push_back(std::move(g));
  }
  return out;
}

void GenerationClientSpec::validate() const {
  if (kind == GeneratorKind::remote && (!endpoint || endpoint->empty()))
    throw ConfigError("remote generator requires an endpoint");
  if (temperature < 0) throw ConfigError("temperature must be non-negative");
}

namespace {

constexpr const char* kSeedHeader = "Example scripts:";
constexpr const char* kCountPrefix = "Number of scripts: ";

const char* const kOpeners[] = {
    "I completely understand your situation, and",
    "Thank you for telling me this.",
    "I hear you, and I want to help.",
    "I appreciate your honesty.",
    "Let us work through this together:",
    "I know this is hard, but",
};

}  // namespace

std::vector<std::string> MockGenerator::generate(const std::string& prompt, int n, double) const {
  std::vector<std::string> seed_lines;
  std::size_t count = 3;
  std::istringstream in(prompt);
  std::string line;
  bool in_seeds = false;
  while (std::getline(in, line)) {
    if (line.rfind(kCountPrefix, 0) == 0) count = std::stoul(line.substr(std::string(kCountPrefix).size()));
    if (line == kSeedHeader) {
      in_seeds = true;
      continue;
    }
    if (in_seeds) {
      if (line.rfind("- ", 0) == 0)
        seed_lines.push_back(line.substr(2));
      else
        in_seeds = false;
    }
  }
  if (seed_lines.empty()) seed_lines.push_back("Please arrange your payment as soon as possible.");

  const std::uint64_t h = fnv1a64(prompt, fnv1a64(std::to_string(seed_)));
  std::vector<std::string> completions;
  for (int c = 0; c < std::max(1, n); ++c) {
    std::string body;
    // Distinct (opener, seed) combinations while they last.
    std::vector<std::size_t> combos(std::size(kOpeners) * seed_lines.size());
    std::iota(combos.begin(), combos.end(), 0);
    std::mt19937_64 rng(h + static_cast<std::uint64_t>(c));
    std::shuffle(combos.begin(), combos.end(), rng);
    for (std::size_t i = 0; i < count; ++i) {
      const std::size_t idx = combos[i % combos.size()];
      const char* opener = kOpeners[idx % std::size(kOpeners)];
      const std::string& seed = seed_lines[idx / std::size(kOpeners)];
      body += std::to_string(i + 1) + ". " + opener + " " + seed + "\n";
    }
    completions.push_back(std::move(body));
  }
  return completions;
}

std::vector<std::string> RemoteGenerator::generate(const std::string& prompt, int n, double temperature) const {
  const json reply = post_json(endpoint_, "/generate", {{"prompt", prompt}, {"n", n}, {"temperature", temperature}}, http_);
  try {
    return reply.at("completions").get<std::vector<std::string>>();
  } catch (const json::exception& e) {
    throw ProviderError(std::string("malformed generate reply: ") + e.what());
  }
}

std::shared_ptr<const TextGenerator> make_generator(const GenerationClientSpec& spec) {
  spec.validate();
  if (spec.kind == GeneratorKind::mock) return std::make_shared<MockGenerator>(spec.mock_seed);
  return std::make_shared<RemoteGenerator>(*spec.endpoint);
}

std::string build_generation_prompt(const std::vector<SeedScript>& seeds, const PurposeGuideline& guideline,
                                    std::size_t count) {
  std::ostringstream p;
  p << "You write response scripts for debt collection agents.\n"
    << "Strategy: " << (seeds.empty() ? std::string() : seeds.front().strategy) << "\n"
    << "Debtor purpose: " << guideline.purpose << "\n"
    << "Guideline: " << guideline.guideline_text << "\n\n"
    << kSeedHeader << "\n";
  for (const auto& s : seeds) p << "- " << s.text << "\n";
  p << "\n"
    << kCountPrefix << count << "\n"
    << "Write " << count << " new scripts that apply the strategy, follow the guideline, and differ from the "
    << "examples. Answer with a numbered list, one script per line:\n1. <script>\n";
  return p.str();
}

std::vector<std::string> parse_numbered_list(const std::string& text) {
  static const std::regex item(R"(^\s*\d+\s*[.)]\s*(.+?)\s*$)");
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  std::smatch m;
  while (std::getline(in, line)) {
    if (std::regex_match(line, m, item) && !trim(m[1].str()).empty()) out.push_back(trim(m[1].str()));
  }
  return out;
}

GenerationResult generate_scripts(const std::vector<SeedScript>& seeds, const PurposeGuideline& guideline,
                                  const TextGenerator& client, double temperature, std::size_t count) {
  if (seeds.empty()) throw PreconditionError("generate_scripts needs at least one seed");
  for (const auto& s : seeds)
    if (s.strategy != seeds.front().strategy || s.cluster_id != seeds.front().cluster_id)
      throw PreconditionError("seeds must share one (strategy, cluster)");

  const std::string prompt = build_generation_prompt(seeds, guideline, count);
  GenerationResult result;
  result.requested = count;
  std::set<std::string> ids;
  // One retry when the first answer yields fewer than `count` scripts.
  for (int attempt = 1; attempt <= 2 && result.scripts.size() < count; ++attempt) {
    result.attempts = attempt;
    for (const auto& completion : client.generate(prompt, 1, temperature)) {
      for (auto& text : parse_numbered_list(completion)) {
        if (result.scripts.size() >= count) break;
        Script s = make_script(std::move(text), seeds.front().strategy, guideline.purpose, Provenance::generated,
                               seeds.front().cluster_id);
        if (ids.insert(s.id).second) result.scripts.push_back(std::move(s));
      }
    }
  }
  result.partial = result.scripts.size() < count;
  return result;
}

std::vector<Script> dedup_scripts(std::vector<Script> scripts, const Embedder& embedder, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw DomainError("dedup threshold must lie in (0, 1]");
  std::sort(scripts.begin(), scripts.end(), [](const Script& a, const Script& b) { return a.id < b.id; });
  std::vector<std::string> texts;
  for (const auto& s : scripts) texts.push_back(s.text);
  const auto vecs = embedder.embed_batch(texts);

  std::vector<Script> kept;
  std::vector<std::size_t> kept_idx;
  for (std::size_t i = 0; i < scripts.size(); ++i) {
    bool dup = false;
    for (auto k : kept_idx) {
      if (scripts[k].purpose != scripts[i].purpose || scripts[k].strategy != scripts[i].strategy) continue;
      if (cosine_sim(vecs[i], vecs[k]) > threshold) {
        dup = true;
        break;
      }
    }
    if (!dup) {
      kept_idx.push_back(i);
      kept.push_back(scripts[i]);
    }
  }
  return kept;
}

}  // namespace respsel
