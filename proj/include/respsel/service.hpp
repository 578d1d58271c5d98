#pragma once

#include <atomic>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "respsel/config.hpp"
#include "respsel/library.hpp"
#include "respsel/ranking.hpp"
#include "respsel/recall.hpp"

namespace respsel {

struct RespondResult {
  std::string script_id;
  std::string text;
  std::string purpose;
  std::string strategy;
  std::size_t recall_rank = 0;
  std::optional<double> overall;       // absent when degraded
  std::optional<AspectScores> scores;  // absent when degraded
  bool degraded = false;
  std::vector<ScoredCandidate> ordering;  // full ranking, empty when degraded
  double latency_ms = 0.0;

  nlohmann::json to_json() const;
};

// Library and index as served; replaced wholesale on reload.
struct ServingSnapshot {
  std::shared_ptr<const ScriptLibrary> library;
  std::shared_ptr<const RecallIndex> index;
};

class ResponseService {
 public:
  ResponseService(ServingSnapshot snapshot, std::shared_ptr<const Embedder> embedder,
                  std::shared_ptr<const ScorerClient> scorer, Rubric rubric, std::size_t n_recall = 3,
                  RankOptions rank = {});

  // Reads library.json and index.json from the work directory.
  static ServingSnapshot load_snapshot(const PipelineConfig& cfg);
  static std::unique_ptr<ResponseService> from_config(const PipelineConfig& cfg);

  // recall_top_n -> rank_candidates -> best. Throws DomainError for an
  // unknown purpose and NoCandidateError when nothing approved matches.
  // A scorer transport failure returns recall rank 1 flagged degraded.
  RespondResult respond(const std::vector<Utterance>& context, const std::string& purpose) const;

  ServingSnapshot snapshot() const;
  void swap(ServingSnapshot next);

 private:
  mutable std::mutex mu_;  // guards the pointer pair only
  ServingSnapshot snapshot_;
  std::shared_ptr<const Embedder> embedder_;
  std::shared_ptr<const ScorerClient> scorer_;
  Rubric rubric_;
  std::size_t n_recall_;
  RankOptions rank_;
};

// HTTP front end. Review requests go to the persisted library through a
// LibraryStore; the served snapshot only changes on POST /admin/reload.
class HttpService {
 public:
  explicit HttpService(const PipelineConfig& cfg);
  HttpService(const PipelineConfig& cfg, std::unique_ptr<ResponseService> service);
  ~HttpService();

  // Blocks until stop(). Returns false when the socket cannot be bound.
  bool listen(const std::string& host, int port);
  // Binds to an ephemeral port and returns it, or -1.
  int bind_any(const std::string& host);
  bool listen_after_bind();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace respsel
