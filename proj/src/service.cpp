#include "respsel/service.hpp"

#include <chrono>
#include <fstream>

#include "httplib.h"
#include "respsel/errors.hpp"
#include "respsel/pipeline.hpp"

namespace respsel {

using nlohmann::json;

json RespondResult::to_json() const {
  json j = {{"script_id", script_id}, {"text", text},         {"purpose", purpose},
            {"strategy", strategy},   {"recall_rank", recall_rank}, {"degraded", degraded},
            {"latency_ms", latency_ms}};
  j["overall"] = overall ? json(*overall) : json(nullptr);
  j["scores"] = scores ? scores->to_json() : json(nullptr);
  json ord = json::array();
  for (const auto& c : ordering)
    ord.push_back({{"script_id", c.script_id},
                   {"recall_rank", c.recall_rank},
                   {"overall", c.overall},
                   {"scores", c.scores.to_json()},
                   {"unparseable", c.unparseable}});
  j["candidates"] = ord;
  return j;
}

ResponseService::ResponseService(ServingSnapshot snapshot, std::shared_ptr<const Embedder> embedder,
                                 std::shared_ptr<const ScorerClient> scorer, Rubric rubric, std::size_t n_recall,
                                 RankOptions rank)
    : snapshot_(std::move(snapshot)),
      embedder_(std::move(embedder)),
      scorer_(std::move(scorer)),
      rubric_(std::move(rubric)),
      n_recall_(n_recall),
      rank_(rank) {
  if (!snapshot_.library || !snapshot_.index) throw PreconditionError("service needs a library and an index");
  if (n_recall_ == 0) throw ConfigError("n_recall must be positive");
}

namespace {

std::set<std::string> purposes_of(const PipelineConfig& cfg) {
  if (!std::filesystem::exists(cfg.paths.labels)) return {};
  std::ifstream in(cfg.paths.labels);
  return LabelVocab::from_json(json::parse(in)).purposes;
}

std::filesystem::path need(const PipelineConfig& cfg, const char* name) {
  const auto p = cfg.paths.work_dir / name;
  if (!std::filesystem::exists(p))
    throw ConfigError("missing artifact '" + std::string(name) + "' in " + cfg.paths.work_dir.string());
  return p;
}

}  // namespace

ServingSnapshot ResponseService::load_snapshot(const PipelineConfig& cfg) {
  ServingSnapshot s;
  s.library = std::make_shared<const ScriptLibrary>(ScriptLibrary::load(need(cfg, artifacts::library), purposes_of(cfg)));
  std::ifstream in(need(cfg, artifacts::index));
  try {
    s.index = std::make_shared<const RecallIndex>(RecallIndex::from_json(json::parse(in)));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed index: ") + e.what());
  }
  return s;
}

std::unique_ptr<ResponseService> ResponseService::from_config(const PipelineConfig& cfg) {
  Rubric rubric = Rubric::standard();
  if (cfg.paths.rubric) {
    std::ifstream in(*cfg.paths.rubric);
    rubric = Rubric::from_json(json::parse(in));
  }
  RankOptions rank;
  rank.score.retries = cfg.score_retries;
  rank.score.temperature = cfg.scorer.temperature;
  rank.score.turns = cfg.context_turns;
  rank.max_concurrency = cfg.score_concurrency;
  return std::make_unique<ResponseService>(load_snapshot(cfg), make_embedder(cfg.recall_embedder),
                                           make_scorer(cfg.scorer), std::move(rubric), cfg.n_recall, rank);
}

ServingSnapshot ResponseService::snapshot() const {
  std::lock_guard lock(mu_);
  return snapshot_;
}

void ResponseService::swap(ServingSnapshot next) {
  if (!next.library || !next.index) throw PreconditionError("incomplete snapshot");
  std::lock_guard lock(mu_);
  snapshot_ = std::move(next);
}

RespondResult ResponseService::respond(const std::vector<Utterance>& context, const std::string& purpose) const {
  const auto start = std::chrono::steady_clock::now();
  const ServingSnapshot snap = snapshot();
  if (context.empty()) throw ValidationError("context must hold at least one utterance");

  const auto recalled = recall_top_n(*snap.index, *embedder_, context, purpose, n_recall_);
  std::vector<Candidate> candidates;
  for (const auto& r : recalled) {
    const Script* s = snap.library->find(r.script_id);
    // An index entry that the library no longer vouches for is never served.
    if (!s || s->review_status != ReviewStatus::approved || s->purpose != purpose) continue;
    candidates.push_back({s->id, s->text, r.recall_rank});
  }
  if (candidates.empty()) throw NoCandidateError("no approved script for purpose '" + purpose + "'");

  RespondResult out;
  out.purpose = purpose;
  try {
    const RankResult ranked = rank_candidates(context, candidates, *scorer_, rubric_, rank_);
    out.script_id = ranked.best.script_id;
    out.text = ranked.best.text;
    out.recall_rank = ranked.best.recall_rank;
    out.overall = ranked.best.overall;
    out.scores = ranked.best.scores;
    out.ordering = ranked.ordering;
  } catch (const TransportError&) {
    const Candidate& first = candidates.front();
    out.script_id = first.script_id;
    out.text = first.text;
    out.recall_rank = first.recall_rank;
    out.degraded = true;
  }
  out.strategy = snap.library->find(out.script_id)->strategy;
  out.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return out;
}

struct HttpService::Impl {
  PipelineConfig cfg;
  std::unique_ptr<ResponseService> service;
  std::unique_ptr<LibraryStore> store;
  httplib::Server server;

  static void reply(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  template <typename F>
  void guarded(httplib::Response& res, F&& fn) {
    try {
      fn();
    } catch (const json::exception& e) {
      reply(res, 400, {{"error", std::string("bad request: ") + e.what()}});
    } catch (const NotFoundError& e) {
      reply(res, 404, {{"error", e.what()}});
    } catch (const NoCandidateError& e) {
      reply(res, 404, {{"error", e.what()}, {"kind", "no_candidate"}});
    } catch (const StateError& e) {
      reply(res, 409, {{"error", e.what()}});
    } catch (const ValidationError& e) {
      reply(res, 400, {{"error", e.what()}});
    } catch (const DomainError& e) {
      reply(res, 400, {{"error", e.what()}});
    } catch (const std::exception& e) {
      reply(res, 500, {{"error", e.what()}});
    }
  }

  void routes() {
    server.Get("/healthz", [this](const httplib::Request&, httplib::Response& res) {
      const auto snap = service->snapshot();
      reply(res, 200, {{"status", "ok"}, {"scripts", snap.library->size()}, {"indexed", snap.index->size()}});
    });

    server.Post("/respond", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = json::parse(req.body);
        if (!body.is_object() || !body.contains("context") || !body["context"].is_array())
          throw ValidationError("body needs a 'context' array and a 'purpose'");
        std::vector<Utterance> context;
        for (const auto& u : body.at("context")) context.push_back(utterance_from_json(u));
        const RespondResult r = service->respond(context, body.at("purpose").get<std::string>());
        reply(res, 200, r.to_json());
      });
    });

    server.Get("/scripts", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        std::optional<std::string> purpose;
        std::optional<ReviewStatus> status;
        if (req.has_param("purpose")) purpose = req.get_param_value("purpose");
        if (req.has_param("status")) status = review_status_from_string(req.get_param_value("status"));
        json list = json::array();
        for (const auto& s : store->snapshot()->list(purpose, status)) list.push_back(respsel::to_json(s));
        reply(res, 200, {{"scripts", list}});
      });
    });

    server.Post(R"(/scripts/([^/]+)/review)", [this](const httplib::Request& req, httplib::Response& res) {
      guarded(res, [&] {
        const json body = json::parse(req.body);
        const Verdict v = verdict_from_string(body.at("verdict").get<std::string>());
        const std::string reviewer = body.at("reviewer").get<std::string>();
        if (reviewer.empty()) throw ValidationError("reviewer must be nonempty");
        const Script s = store->review(req.matches[1].str(), v, reviewer);
        reply(res, 200, respsel::to_json(s));
      });
    });

    server.Post("/admin/reload", [this](const httplib::Request&, httplib::Response& res) {
      guarded(res, [&] {
        service->swap(ResponseService::load_snapshot(cfg));
        const auto snap = service->snapshot();
        reply(res, 200, {{"status", "reloaded"}, {"scripts", snap.library->size()}, {"indexed", snap.index->size()}});
      });
    });
  }
};

HttpService::HttpService(const PipelineConfig& cfg) : HttpService(cfg, ResponseService::from_config(cfg)) {}

HttpService::HttpService(const PipelineConfig& cfg, std::unique_ptr<ResponseService> service)
    : impl_(std::make_unique<Impl>()) {
  impl_->cfg = cfg;
  impl_->service = std::move(service);
  const auto lib_path = cfg.paths.work_dir / artifacts::library;
  impl_->store = std::make_unique<LibraryStore>(*impl_->service->snapshot().library, lib_path);
  impl_->routes();
}

HttpService::~HttpService() = default;

bool HttpService::listen(const std::string& host, int port) { return impl_->server.listen(host, port); }

int HttpService::bind_any(const std::string& host) { return impl_->server.bind_to_any_port(host); }

bool HttpService::listen_after_bind() { return impl_->server.listen_after_bind(); }

void HttpService::stop() { impl_->server.stop(); }

}  // namespace respsel
