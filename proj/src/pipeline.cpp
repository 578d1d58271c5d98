#include "respsel/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "respsel/errors.hpp"
#include "respsel/hashing.hpp"
#include "respsel/text.hpp"

namespace respsel {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::vector<std::pair<Stage, const char*>> kStageNames = {
    {Stage::ingest, "ingest"},
    {Stage::segment, "segment"},
    {Stage::cluster, "cluster"},
    {Stage::seeds, "seeds"},
    {Stage::generate, "generate"},
    {Stage::review, "review"},
    {Stage::train_recall, "train-recall"},
    {Stage::build_index, "build-index"},
    {Stage::eval_recall, "eval-recall"},
    {Stage::export_distill, "export-distill"},
    {Stage::eval_ranking, "eval-ranking"},
    {Stage::kappa, "kappa"},
};

// Which stage produces each work-dir artifact, for error messages.
const std::map<std::string, std::string> kProducer = {
    {artifacts::dialogues, "ingest"},      {artifacts::pairs, "ingest"},
    {artifacts::windows_train, "segment"}, {artifacts::windows_val, "segment"},
    {artifacts::windows_test, "segment"},  {artifacts::clusters, "cluster"},
    {artifacts::seeds, "seeds"},           {artifacts::library, "generate"},
    {artifacts::head, "train-recall"},     {artifacts::index, "build-index"},
};

class StageRun {
 public:
  StageRun(Stage stage, const PipelineConfig& cfg) : stage_(stage), cfg_(cfg), start_(std::chrono::steady_clock::now()) {
    fs::create_directories(cfg.paths.work_dir);
  }

  fs::path work(const std::string& name) const { return cfg_.paths.work_dir / name; }

  // A work-dir prerequisite, hashed into the report.
  fs::path need(const std::string& name) {
    const fs::path p = work(name);
    if (!fs::exists(p)) {
      auto it = kProducer.find(name);
      throw ConfigError("missing prerequisite artifact '" + name + "' in " + cfg_.paths.work_dir.string() +
                        (it != kProducer.end() ? " (run stage '" + it->second + "' first)" : ""));
    }
    inputs_[name] = file_hash(p);
    return p;
  }

  // An external input file named by the config.
  fs::path input(const std::string& name, const std::optional<fs::path>& p) {
    if (!p) throw ConfigError("stage '" + std::string(to_string(stage_)) + "' needs paths." + name + " in the config");
    if (!fs::exists(*p)) throw ConfigError("missing input '" + name + "': " + p->string());
    inputs_[name] = file_hash(*p);
    return *p;
  }

  void produced(const std::string& name) { outputs_[name] = file_hash(work(name)); }

  json metrics = json::object();

  json finish() {
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
    json report = {{"stage", to_string(stage_)},
                   {"inputs", inputs_},
                   {"outputs", outputs_},
                   {"metrics", metrics},
                   {"wall_time_ms", ms}};
    fs::create_directories(cfg_.paths.work_dir / "reports");
    write_text(cfg_.paths.work_dir / "reports" / (std::string(to_string(stage_)) + ".json"), report.dump(2) + "\n");
    return report;
  }

  static void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    if (!out) throw IoError("cannot write " + p.string());
  }

 private:
  Stage stage_;
  const PipelineConfig& cfg_;
  std::chrono::steady_clock::time_point start_;
  json inputs_ = json::object();
  json outputs_ = json::object();
};

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read " + p.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(p.string() + ": " + e.what());
  }
}

std::vector<json> read_jsonl(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot read " + p.string());
  std::vector<json> out;
  std::size_t lineno = 0;
  for (std::string line; std::getline(in, line);) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(json::parse(line));
    } catch (const json::parse_error& e) {
      throw ParseError(p.string() + ": " + e.what(), lineno);
    }
  }
  return out;
}

template <typename Range>
void write_jsonl(const fs::path& p, const Range& rows) {
  std::string text;
  for (const auto& r : rows) text += to_json(r).dump() + "\n";
  StageRun::write_text(p, text);
}

void write_json(const fs::path& p, const json& j) { StageRun::write_text(p, j.dump(2) + "\n"); }

std::vector<ContextResponse> read_windows(const fs::path& p) {
  std::vector<ContextResponse> out;
  for (const auto& j : read_jsonl(p)) out.push_back(context_response_from_json(j));
  return out;
}

LabelVocab load_vocab(StageRun& run, const PipelineConfig& cfg) {
  return LabelVocab::from_json(read_json(run.input("labels", cfg.paths.labels)));
}

Rubric load_rubric(StageRun& run, const PipelineConfig& cfg) {
  if (!cfg.paths.rubric) return Rubric::standard();
  return Rubric::from_json(read_json(run.input("rubric", cfg.paths.rubric)));
}

// ---- stages ---------------------------------------------------------------

void ingest(StageRun& run, const PipelineConfig& cfg) {
  const LabelVocab vocab = load_vocab(run, cfg);
  std::ifstream in(run.input("corpus", cfg.paths.corpus));
  ParseOptions opts;
  opts.vocab = &vocab;
  const ParseResult parsed = parse_dialogues(in, opts);

  std::vector<UtterancePair> pairs;
  for (const auto& d : parsed.dialogues)
    for (auto& p : extract_pairs(d)) pairs.push_back(std::move(p));

  write_jsonl(run.work(artifacts::dialogues), parsed.dialogues);
  write_jsonl(run.work(artifacts::rejects), parsed.rejections);
  write_jsonl(run.work(artifacts::pairs), pairs);
  for (const char* a : {artifacts::dialogues, artifacts::rejects, artifacts::pairs}) run.produced(a);

  std::size_t utterances = 0;
  for (const auto& d : parsed.dialogues) utterances += d.utterances.size();
  run.metrics = {{"dialogues", parsed.dialogues.size()},
                 {"rejected", parsed.rejections.size()},
                 {"utterances", utterances},
                 {"pairs", pairs.size()}};
}

Dialogue dialogue_from_json(const json& j) {
  Dialogue d;
  d.id = j.at("dialogue_id").get<std::string>();
  for (const auto& u : j.at("utterances")) d.utterances.push_back(utterance_from_json(u));
  return d;
}

void segment(StageRun& run, const PipelineConfig& cfg) {
  std::vector<ContextResponse> windows;
  for (const auto& j : read_jsonl(run.need(artifacts::dialogues)))
    for (auto& w : segment_windows(dialogue_from_json(j))) windows.push_back(std::move(w));
  const std::size_t total = windows.size();
  const auto split = split_dataset(std::move(windows), cfg.split, cfg.split_seed);
  write_jsonl(run.work(artifacts::windows_train), split.train);
  write_jsonl(run.work(artifacts::windows_val), split.val);
  write_jsonl(run.work(artifacts::windows_test), split.test);
  for (const char* a : {artifacts::windows_train, artifacts::windows_val, artifacts::windows_test}) run.produced(a);
  run.metrics = {{"windows", total}, {"train", split.train.size()}, {"val", split.val.size()}, {"test", split.test.size()}};
}

// Distinct collector texts of one strategy with the debtor purposes they answered.
struct StrategyItems {
  std::vector<std::string> texts;
  std::vector<std::set<std::string>> purposes;
};

std::map<std::string, StrategyItems> group_pairs(const std::vector<json>& rows) {
  std::map<std::string, std::map<std::string, std::set<std::string>>> by_strategy;
  for (const auto& j : rows) {
    const UtterancePair p = utterance_pair_from_json(j);
    if (!p.collector_utterance.strategy) continue;
    auto& slot = by_strategy[*p.collector_utterance.strategy][p.collector_utterance.text];
    if (p.debtor_utterance.purpose) slot.insert(*p.debtor_utterance.purpose);
  }
  std::map<std::string, StrategyItems> out;
  for (auto& [strategy, texts] : by_strategy) {
    auto& items = out[strategy];
    for (auto& [text, purposes] : texts) {
      items.texts.push_back(text);
      items.purposes.push_back(purposes);
    }
  }
  return out;
}

void cluster(StageRun& run, const PipelineConfig& cfg) {
  const auto groups = group_pairs(read_jsonl(run.need(artifacts::pairs)));
  if (groups.empty()) throw DataError("no strategy-labeled collector utterances to cluster");
  const auto embedder = make_embedder(cfg.library_embedder);

  json doc = json::array();
  std::vector<StrategyClusterReport> rows;
  for (const auto& [strategy, items] : groups) {
    const auto vectors = embedder->embed_batch(items.texts);
    KMeansOptions km = cfg.kmeans;
    km.k = std::min(km.k, items.texts.size());
    const Clustering c = kmeans(vectors, km);

    StrategyClusterReport row;
    row.strategy = strategy;
    row.k = c.k;
    row.items = items.texts.size();
    row.intra = intra_distance(c, vectors);
    if (c.k >= 2) row.inter = inter_distance(c, vectors);
    rows.push_back(row);

    json entries = json::array();
    for (std::size_t i = 0; i < items.texts.size(); ++i)
      entries.push_back({{"text", items.texts[i]}, {"purposes", items.purposes[i]}, {"cluster", c.assignments[i]}});
    doc.push_back({{"strategy", strategy},
                   {"k", c.k},
                   {"objective", c.objective()},
                   {"iterations", c.iterations},
                   {"converged", c.converged},
                   {"items", entries}});
  }
  write_json(run.work(artifacts::clusters), doc);
  StageRun::write_text(run.work(artifacts::cluster_table), cluster_report_table(rows));
  run.produced(artifacts::clusters);
  run.produced(artifacts::cluster_table);
  run.metrics = cluster_report_json(rows, cfg.distinct_tokenizer, std::nullopt, std::nullopt);
}

struct ClusterDoc {
  std::string strategy;
  std::size_t k = 0;
  std::vector<std::string> texts;
  std::vector<std::set<std::string>> purposes;
  std::vector<std::size_t> assignments;
};

std::vector<ClusterDoc> read_clusters(const fs::path& p) {
  std::vector<ClusterDoc> out;
  for (const auto& s : read_json(p)) {
    ClusterDoc d;
    d.strategy = s.at("strategy").get<std::string>();
    d.k = s.at("k").get<std::size_t>();
    for (const auto& it : s.at("items")) {
      d.texts.push_back(it.at("text").get<std::string>());
      d.purposes.push_back(it.at("purposes").get<std::set<std::string>>());
      d.assignments.push_back(it.at("cluster").get<std::size_t>());
    }
    out.push_back(std::move(d));
  }
  return out;
}

json seed_to_json(const SeedScript& s) {
  return {{"text", s.text},
          {"strategy", s.strategy},
          {"cluster_id", s.cluster_id},
          {"center_distance", s.center_distance},
          {"source_index", s.source_index}};
}

SeedScript seed_from_json(const json& j) {
  return {j.at("text").get<std::string>(), j.at("strategy").get<std::string>(), j.at("cluster_id").get<std::size_t>(),
          j.at("center_distance").get<double>(), j.at("source_index").get<std::size_t>()};
}

// For every strategy and purpose, the cluster holding most utterances that
// answered that purpose (ties and no evidence: the largest cluster, then the
// lowest id) provides the seeds.
void seeds(StageRun& run, const PipelineConfig& cfg) {
  const LabelVocab vocab = load_vocab(run, cfg);
  const auto docs = read_clusters(run.need(artifacts::clusters));
  const auto embedder = make_embedder(cfg.library_embedder);

  std::vector<std::string> purposes(vocab.purposes.begin(), vocab.purposes.end());
  json groups = json::array();
  std::size_t seed_count = 0;
  for (const auto& d : docs) {
    const auto vectors = embedder->embed_batch(d.texts);
    const Clustering c = Clustering::from_assignments(vectors, d.assignments, d.k);
    const auto picked = select_seeds(c, vectors, d.texts, d.strategy, cfg.per_cluster);
    seed_count += picked.size();

    std::set<std::string> all_purposes(purposes.begin(), purposes.end());
    if (all_purposes.empty())
      for (const auto& ps : d.purposes) all_purposes.insert(ps.begin(), ps.end());

    json purpose_cluster = json::object();
    for (const auto& p : all_purposes) {
      std::size_t best = 0;
      std::pair<std::size_t, std::size_t> best_key{0, 0};
      for (std::size_t k = 0; k < c.k; ++k) {
        std::size_t hits = 0;
        for (std::size_t i : c.members[k]) hits += d.purposes[i].contains(p) ? 1 : 0;
        const std::pair<std::size_t, std::size_t> key{hits, c.members[k].size()};
        if (k == 0 || key > best_key) {
          best = k;
          best_key = key;
        }
      }
      purpose_cluster[p] = best;
    }

    json by_cluster = json::array();
    for (std::size_t k = 0; k < c.k; ++k) {
      json list = json::array();
      for (const auto& s : picked)
        if (s.cluster_id == k) list.push_back(seed_to_json(s));
      by_cluster.push_back(list);
    }
    groups.push_back({{"strategy", d.strategy}, {"clusters", by_cluster}, {"purpose_cluster", purpose_cluster}});
  }
  write_json(run.work(artifacts::seeds), groups);
  run.produced(artifacts::seeds);
  run.metrics = {{"strategies", docs.size()}, {"seeds", seed_count}};
}

void generate(StageRun& run, const PipelineConfig& cfg) {
  const LabelVocab vocab = load_vocab(run, cfg);
  const auto guidelines = guidelines_from_json(read_json(run.input("guidelines", cfg.paths.guidelines)));
  const json groups = read_json(run.need(artifacts::seeds));
  const auto client = make_generator(cfg.generator);

  ScriptLibrary lib(vocab.purposes);
  std::vector<Script> produced;
  std::size_t requested = 0, partial = 0, calls = 0;
  for (const auto& g : groups) {
    for (const auto& pg : guidelines) {
      if (!g.at("purpose_cluster").contains(pg.purpose)) continue;
      const std::size_t k = g.at("purpose_cluster").at(pg.purpose).get<std::size_t>();
      std::vector<SeedScript> seeds;
      for (const auto& s : g.at("clusters").at(k)) seeds.push_back(seed_from_json(s));
      const GenerationResult r = generate_scripts(seeds, pg, *client, cfg.generator.temperature, cfg.generate_count);
      ++calls;
      requested += r.requested;
      partial += r.partial ? 1 : 0;
      for (const auto& s : r.scripts) produced.push_back(s);
    }
  }
  const std::size_t before = produced.size();
  if (cfg.dedup) produced = dedup_scripts(std::move(produced), *make_embedder(cfg.library_embedder), cfg.dedup_threshold);
  std::vector<std::string> texts;
  std::size_t duplicates = 0;
  for (auto& s : produced) {
    texts.push_back(s.text);
    if (!lib.add(std::move(s))) ++duplicates;
  }
  lib.save(run.work(artifacts::library));
  run.produced(artifacts::library);

  json m = {{"calls", calls},        {"requested", requested},          {"generated", before},
            {"partial_calls", partial}, {"dedup_dropped", before - produced.size()}, {"duplicate_ids", duplicates},
            {"library_size", lib.size()}, {"distinct_tokenizer", to_string(cfg.distinct_tokenizer)}};
  for (std::size_t n : {1u, 2u}) {
    const std::string key = "distinct_" + std::to_string(n);
    try {
      m[key] = distinct_n(texts, n, cfg.distinct_tokenizer);
    } catch (const DomainError&) {
      m[key] = nullptr;
    }
  }
  run.metrics = m;
}

std::vector<std::string> split_ids(const std::vector<std::string>& ids) {
  std::vector<std::string> out;
  for (const auto& s : ids) {
    std::istringstream in(s);
    for (std::string tok; std::getline(in, tok, ',');)
      if (auto t = trim(tok); !t.empty()) out.emplace_back(t);
  }
  return out;
}

void review(StageRun& run, const PipelineConfig& cfg, const ReviewArgs& args) {
  const LabelVocab vocab = load_vocab(run, cfg);
  const fs::path path = run.need(artifacts::library);
  ScriptLibrary lib = ScriptLibrary::load(path, vocab.purposes);

  std::vector<std::string> ids = split_ids(args.ids);
  if (args.all_pending)
    for (const auto& s : lib.list(std::nullopt, ReviewStatus::pending)) ids.push_back(s.id);
  if (ids.empty()) throw ConfigError("review needs script ids or --all-pending");

  const std::string at = args.timestamp.value_or(utc_timestamp_now());
  for (const auto& id : ids) lib.review(id, args.verdict, args.reviewer, at);
  lib.save(path);
  run.produced(artifacts::library);

  std::map<std::string, std::size_t> by_status;
  for (const auto& s : lib.all()) ++by_status[to_string(s.review_status)];
  run.metrics = {{"reviewed", ids.size()}, {"verdict", to_string(args.verdict)}, {"status_counts", by_status}};
}

void train_recall(StageRun& run, const PipelineConfig& cfg) {
  const auto train = read_windows(run.need(artifacts::windows_train));
  const auto val = read_windows(run.need(artifacts::windows_val));
  const auto embedder = make_embedder(cfg.recall_embedder);
  const TrainResult r = train_head(train, *embedder, cfg.train, val);
  r.head.save(run.work(artifacts::head));
  run.produced(artifacts::head);
  run.metrics = {{"train_pairs", train.size()},
                 {"val_pairs", val.size()},
                 {"train_loss", r.train_loss},
                 {"validation_loss", r.validation_loss},
                 {"best_epoch", r.best_epoch},
                 {"d_in", r.head.d_in()},
                 {"d_out", r.head.d_out()}};
}

void build_index_stage(StageRun& run, const PipelineConfig& cfg) {
  const LabelVocab vocab = load_vocab(run, cfg);
  const ScriptLibrary lib = ScriptLibrary::load(run.need(artifacts::library), vocab.purposes);
  const ProjectionHead head = ProjectionHead::load(run.need(artifacts::head));
  std::vector<Script> approved;
  for (const auto& s : lib.all())
    if (s.review_status == ReviewStatus::approved) approved.push_back(s);
  const auto embedder = make_embedder(cfg.recall_embedder);
  const RecallIndex index = build_index(approved, *embedder, head, vocab.purposes);
  write_json(run.work(artifacts::index), index.to_json());
  run.produced(artifacts::index);

  json per_purpose = json::object();
  for (const auto& [p, block] : index.blocks()) per_purpose[p] = block.entries.size();
  run.metrics = {{"scripts", index.size()}, {"skipped_unapproved", lib.size() - approved.size()},
                 {"per_purpose", per_purpose}};
}

void eval_recall(StageRun& run, const PipelineConfig& cfg) {
  const auto test = read_windows(run.need(artifacts::windows_test));
  const ProjectionHead head = ProjectionHead::load(run.need(artifacts::head));
  const auto embedder = make_embedder(cfg.recall_embedder);
  const auto trained = eval_recall_at_k(head, *embedder, test, cfg.k_values, cfg.candidate_set_size, cfg.eval_seed,
                                        cfg.train.separator);
  const ProjectionHead base = ProjectionHead::identity(head.d_in(), head.d_in(), head.temperature);
  const auto baseline = eval_recall_at_k(base, *embedder, test, cfg.k_values, cfg.candidate_set_size, cfg.eval_seed,
                                         cfg.train.separator);
  const json result = {{"cases", test.size()},
                       {"candidate_set_size", cfg.candidate_set_size},
                       {"trained", recall_report_json(trained)},
                       {"identity", recall_report_json(baseline)}};
  write_json(run.work(artifacts::recall_eval), result);
  run.produced(artifacts::recall_eval);
  run.metrics = result;
}

void export_distill(StageRun& run, const PipelineConfig& cfg) {
  const auto test = read_windows(run.need(artifacts::windows_test));
  const RecallIndex index = RecallIndex::from_json(read_json(run.need(artifacts::index)));
  const Rubric rubric = load_rubric(run, cfg);
  const auto embedder = make_embedder(cfg.recall_embedder);
  const auto teacher = make_scorer(cfg.scorer);

  std::map<std::string, const IndexEntry*> by_id;
  for (const auto& [p, block] : index.blocks())
    for (const auto& e : block.entries) by_id[e.script_id] = &e;

  std::vector<DistillCase> cases;
  std::size_t skipped = 0;
  for (const auto& w : test) {
    if (cases.size() >= cfg.distill_max_cases) break;
    const std::string& p = w.purpose();
    if (p.empty() || !index.blocks().contains(p)) {
      ++skipped;
      continue;
    }
    for (const auto& r : recall_top_n(index, *embedder, w.context, p, cfg.n_recall)) {
      if (cases.size() >= cfg.distill_max_cases) break;
      cases.push_back({std::vector<Utterance>(w.context.begin(), w.context.end()),
                       {r.script_id, by_id.at(r.script_id)->text, r.recall_rank}});
    }
  }
  ScoreOptions opts;
  opts.retries = cfg.score_retries;
  opts.temperature = cfg.scorer.temperature;
  opts.turns = cfg.context_turns;
  std::ofstream sink(run.work(artifacts::distill), std::ios::binary | std::ios::trunc);
  if (!sink) throw IoError("cannot write " + run.work(artifacts::distill).string());
  const ExportStats stats = export_distillation(cases, *teacher, rubric, sink, opts);
  sink.close();
  run.produced(artifacts::distill);
  run.metrics = {{"cases", cases.size()},
                 {"written", stats.written},
                 {"dropped", stats.dropped},
                 {"windows_without_purpose_block", skipped}};
}

void eval_ranking(StageRun& run, const PipelineConfig& cfg) {
  std::ifstream in(run.input("expert_labels", cfg.paths.expert_labels));
  const auto cases = parse_labeled_cases(in);
  const Rubric rubric = load_rubric(run, cfg);
  const auto scorer = make_scorer(cfg.scorer);
  RankOptions opts;
  opts.score.retries = cfg.score_retries;
  opts.score.temperature = cfg.scorer.temperature;
  opts.score.turns = cfg.context_turns;
  opts.max_concurrency = cfg.score_concurrency;

  std::size_t unparseable = 0;
  const Ranker rubric_ranker = [&](const LabeledCase& c) {
    const RankResult r = rank_candidates(c.context, c.candidates, *scorer, rubric, opts);
    for (const auto& s : r.ordering) unparseable += s.unparseable ? 1 : 0;
    return r.best.script_id;
  };
  const Ranker recall_only = [](const LabeledCase& c) {
    return std::min_element(c.candidates.begin(), c.candidates.end(),
                            [](const Candidate& a, const Candidate& b) { return a.recall_rank < b.recall_rank; })
        ->script_id;
  };
  const double ranked = eval_ranking_r1(cases, rubric_ranker);
  const double baseline = eval_ranking_r1(cases, recall_only);
  const json result = {{"cases", cases.size()},
                       {"rubric_r1", ranked},
                       {"recall_rank1_r1", baseline},
                       {"unparseable_scores", unparseable}};
  write_json(run.work(artifacts::ranking_eval), result);
  run.produced(artifacts::ranking_eval);
  run.metrics = result;
}

void kappa_stage(StageRun& run, const PipelineConfig& cfg) {
  const json doc = read_json(run.input("rater_counts", cfg.paths.rater_counts));
  const json& rows = doc.is_object() ? doc.at("counts") : doc;
  const auto counts = rows.get<std::vector<std::vector<double>>>();
  const json result = {{"items", counts.size()},
                       {"raters", counts.empty() ? 0.0 : std::accumulate(counts[0].begin(), counts[0].end(), 0.0)},
                       {"fleiss_kappa", fleiss_kappa(counts)}};
  write_json(run.work(artifacts::kappa), result);
  run.produced(artifacts::kappa);
  run.metrics = result;
}

}  // namespace

const char* to_string(Stage s) {
  for (const auto& [st, name] : kStageNames)
    if (st == s) return name;
  return "?";
}

Stage stage_from_string(const std::string& s) {
  for (const auto& [st, name] : kStageNames)
    if (s == name) return st;
  throw ConfigError("unknown stage '" + s + "'");
}

const std::vector<Stage>& all_stages() {
  static const std::vector<Stage> v = [] {
    std::vector<Stage> out;
    for (const auto& [st, name] : kStageNames) out.push_back(st);
    return out;
  }();
  return v;
}

json run_stage(Stage stage, const PipelineConfig& config, const StageArgs& args) {
  config.validate();
  StageRun run(stage, config);
  try {
    switch (stage) {
      case Stage::ingest: ingest(run, config); break;
      case Stage::segment: segment(run, config); break;
      case Stage::cluster: cluster(run, config); break;
      case Stage::seeds: seeds(run, config); break;
      case Stage::generate: generate(run, config); break;
      case Stage::review: review(run, config, args.review); break;
      case Stage::train_recall: train_recall(run, config); break;
      case Stage::build_index: build_index_stage(run, config); break;
      case Stage::eval_recall: eval_recall(run, config); break;
      case Stage::export_distill: export_distill(run, config); break;
      case Stage::eval_ranking: eval_ranking(run, config); break;
      case Stage::kappa: kappa_stage(run, config); break;
    }
  } catch (const json::exception& e) {
    throw DataError(std::string(to_string(stage)) + ": malformed artifact: " + e.what());
  }
  return run.finish();
}

}  // namespace respsel
