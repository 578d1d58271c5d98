#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "respsel/config.hpp"

namespace respsel {

enum class Stage {
  ingest,
  segment,
  cluster,
  seeds,
  generate,
  review,
  train_recall,
  build_index,
  eval_recall,
  export_distill,
  eval_ranking,
  kappa
};

const char* to_string(Stage s);
Stage stage_from_string(const std::string& s);
const std::vector<Stage>& all_stages();

struct ReviewArgs {
  std::vector<std::string> ids;
  bool all_pending = false;
  Verdict verdict = Verdict::approve;
  std::string reviewer = "cli";
  std::optional<std::string> timestamp;  // defaults to now
};

struct StageArgs {
  ReviewArgs review;
};

// Artifact names inside the work directory.
namespace artifacts {
inline constexpr const char* dialogues = "dialogues.jsonl";
inline constexpr const char* rejects = "dialogues.rejects.jsonl";
inline constexpr const char* pairs = "pairs.jsonl";
inline constexpr const char* windows_train = "windows.train.jsonl";
inline constexpr const char* windows_val = "windows.val.jsonl";
inline constexpr const char* windows_test = "windows.test.jsonl";
inline constexpr const char* clusters = "clusters.json";
inline constexpr const char* cluster_table = "cluster_report.txt";
inline constexpr const char* seeds = "seeds.json";
inline constexpr const char* library = "library.json";
inline constexpr const char* head = "head.json";
inline constexpr const char* index = "index.json";
inline constexpr const char* recall_eval = "recall_eval.json";
inline constexpr const char* distill = "distill.jsonl";
inline constexpr const char* ranking_eval = "ranking_eval.json";
inline constexpr const char* kappa = "kappa.json";
}  // namespace artifacts

// Runs one stage and writes reports/<stage>.json under the work directory:
// {"stage","inputs":{name:hash},"outputs":{name:hash},"metrics",
// "wall_time_ms"}. A missing prerequisite throws ConfigError naming it.
nlohmann::json run_stage(Stage stage, const PipelineConfig& config, const StageArgs& args = {});

}  // namespace respsel
