#include "respsel/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "respsel/errors.hpp"
#include "respsel/text.hpp"

namespace respsel {

namespace pt = boost::property_tree;

namespace {

std::string unquote(std::string v) {
  v = trim(v);
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) v = v.substr(1, v.size() - 2);
  return v;
}

class Reader {
 public:
  Reader(const pt::ptree& tree, std::filesystem::path base) : tree_(tree), base_(std::move(base)) {}

  std::optional<std::string> get(const std::string& key) const {
    auto v = tree_.get_optional<std::string>(key);
    if (!v) return std::nullopt;
    std::string s = unquote(*v);
    if (s.empty()) return std::nullopt;
    return s;
  }

  template <typename T>
  T number(const std::string& key, T fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    try {
      std::size_t used = 0;
      T out;
      if constexpr (std::is_floating_point_v<T>) out = static_cast<T>(std::stod(*v, &used));
      else if constexpr (std::is_signed_v<T>) out = static_cast<T>(std::stoll(*v, &used));
      else {
        if (v->front() == '-') throw std::invalid_argument("negative");
        out = static_cast<T>(std::stoull(*v, &used));
      }
      if (used != v->size()) throw std::invalid_argument("trailing characters");
      return out;
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "' has invalid value '" + *v + "'");
    }
  }

  bool boolean(const std::string& key, bool fallback) const {
    auto v = get(key);
    if (!v) return fallback;
    if (*v == "true" || *v == "yes" || *v == "1") return true;
    if (*v == "false" || *v == "no" || *v == "0") return false;
    throw ConfigError("config key '" + key + "' must be a boolean");
  }

  std::optional<std::filesystem::path> path(const std::string& key) const {
    auto v = get(key);
    if (!v) return std::nullopt;
    std::filesystem::path p(*v);
    return p.is_absolute() ? p : base_ / p;
  }

  std::filesystem::path required_path(const std::string& key) const {
    auto p = path(key);
    if (!p) throw ConfigError("config is missing '" + key + "'");
    return *p;
  }

 private:
  const pt::ptree& tree_;
  std::filesystem::path base_;
};

EmbedderSpec read_embedder(const Reader& r, const std::string& section, const char* env) {
  EmbedderSpec s;
  const std::string kind = r.get(section + ".kind").value_or("mock");
  if (kind == "mock") s.kind = EmbedderKind::mock;
  else if (kind == "remote") s.kind = EmbedderKind::remote;
  else throw ConfigError("unknown embedder kind '" + kind + "'");
  s.dimension = r.number<std::size_t>(section + ".dimension", 1024);
  s.endpoint = r.get(section + ".endpoint");
  if (const char* e = std::getenv(env); e && *e) s.endpoint = e;
  if (r.get(section + ".mock_seed")) s.mock_seed = r.number<std::uint64_t>(section + ".mock_seed", 0);
  s.mock_tokenizer = tokenizer_from_string(r.get(section + ".tokenizer").value_or("whitespace"));
  s.batch_size = r.number<std::size_t>(section + ".batch_size", 64);
  s.max_attempts = r.number<int>(section + ".max_attempts", 3);
  s.max_in_flight = r.number<std::size_t>(section + ".max_in_flight", 4);
  return s;
}

}  // namespace

void PipelineConfig::override_seed(std::uint64_t seed) {
  kmeans.seed = seed;
  split_seed = seed;
  train.seed = seed;
  eval_seed = seed;
  generator.mock_seed = seed;
}

void PipelineConfig::validate() const {
  library_embedder.validate();
  recall_embedder.validate();
  generator.validate();
  scorer.validate();
  if (kmeans.k == 0) throw ConfigError("cluster.k must be positive");
  if (per_cluster == 0) throw ConfigError("cluster.per_cluster must be positive");
  if (n_recall == 0) throw ConfigError("recall.n_recall must be positive");
  if (n_recall > candidate_set_size) throw ConfigError("recall.n_recall must not exceed recall.candidate_set_size");
  for (auto k : k_values)
    if (k == 0 || k > candidate_set_size) throw ConfigError("recall.k_values must lie in [1, candidate_set_size]");
  if (!(dedup_threshold > 0 && dedup_threshold <= 1)) throw ConfigError("generate.dedup_threshold must lie in (0, 1]");
  if (!(split.train > 0 && split.val > 0 && split.test > 0)) throw ConfigError("split ratios must be positive");
  if (train.batch_size == 0 || train.n_neg == 0) throw ConfigError("recall.batch_size and recall.n_neg must be positive");
}

void PipelineConfig::check_paths() const {
  auto need = [](const std::filesystem::path& p, const char* key) {
    if (!std::filesystem::exists(p)) throw ConfigError(std::string("paths.") + key + " does not exist: " + p.string());
  };
  need(paths.corpus, "corpus");
  need(paths.labels, "labels");
  need(paths.guidelines, "guidelines");
  if (paths.expert_labels) need(*paths.expert_labels, "expert_labels");
  if (paths.rater_counts) need(*paths.rater_counts, "rater_counts");
  if (paths.rubric) need(*paths.rubric, "rubric");
}

PipelineConfig parse_config(const std::string& text, const std::filesystem::path& base_dir) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }
  const Reader r(tree, base_dir);
  PipelineConfig c;

  c.paths.corpus = r.required_path("paths.corpus");
  c.paths.labels = r.required_path("paths.labels");
  c.paths.guidelines = r.required_path("paths.guidelines");
  c.paths.work_dir = r.path("paths.work_dir").value_or(base_dir / "work");
  c.paths.expert_labels = r.path("paths.expert_labels");
  c.paths.rater_counts = r.path("paths.rater_counts");
  c.paths.rubric = r.path("paths.rubric");

  c.library_embedder = read_embedder(r, "embedder_library", "RESPSEL_EMBEDDER_LIBRARY_ENDPOINT");
  c.recall_embedder = read_embedder(r, "embedder_recall", "RESPSEL_EMBEDDER_RECALL_ENDPOINT");

  const std::string gen_kind = r.get("generator.kind").value_or("mock");
  if (gen_kind == "mock") c.generator.kind = GeneratorKind::mock;
  else if (gen_kind == "remote") c.generator.kind = GeneratorKind::remote;
  else throw ConfigError("unknown generator kind '" + gen_kind + "'");
  c.generator.endpoint = r.get("generator.endpoint");
  if (const char* e = std::getenv("RESPSEL_GENERATOR_ENDPOINT"); e && *e) c.generator.endpoint = e;
  c.generator.model_name = r.get("generator.model").value_or("mock");
  c.generator.temperature = r.number<double>("generator.temperature", 0.7);
  c.generator.mock_seed = r.number<std::uint64_t>("generator.mock_seed", 0);

  const std::string sc_kind = r.get("scorer.kind").value_or("mock");
  if (sc_kind == "mock") c.scorer.kind = ScorerKind::mock;
  else if (sc_kind == "remote") c.scorer.kind = ScorerKind::remote;
  else throw ConfigError("unknown scorer kind '" + sc_kind + "'");
  c.scorer.endpoint = r.get("scorer.endpoint");
  if (const char* e = std::getenv("RESPSEL_SCORER_ENDPOINT"); e && *e) c.scorer.endpoint = e;
  c.scorer.temperature = r.number<double>("scorer.temperature", 0.0);
  c.scorer.max_attempts = r.number<int>("scorer.max_attempts", 1);
  c.score_retries = r.number<int>("scorer.retries", 2);
  c.score_concurrency = r.number<std::size_t>("scorer.max_concurrency", 4);
  c.context_turns = r.number<std::size_t>("scorer.context_turns", 3);

  c.kmeans.k = r.number<std::size_t>("cluster.k", 4);
  c.kmeans.max_iter = r.number<std::size_t>("cluster.max_iter", 100);
  c.kmeans.tol = r.number<double>("cluster.tol", 1e-6);
  c.kmeans.n_init = r.number<std::size_t>("cluster.n_init", 10);
  c.kmeans.seed = r.number<std::uint64_t>("cluster.seed", 0);
  c.per_cluster = r.number<std::size_t>("cluster.per_cluster", 5);
  c.distinct_tokenizer = tokenizer_from_string(r.get("cluster.distinct_tokenizer").value_or("character"));

  c.generate_count = r.number<std::size_t>("generate.count", 3);
  c.dedup = r.boolean("generate.dedup", false);
  c.dedup_threshold = r.number<double>("generate.dedup_threshold", 0.95);

  c.split.train = r.number<double>("split.train", 8);
  c.split.val = r.number<double>("split.val", 1);
  c.split.test = r.number<double>("split.test", 1);
  c.split_seed = r.number<std::uint64_t>("split.seed", 0);

  c.train.epochs = r.number<std::size_t>("recall.epochs", 5);
  c.train.lr = r.number<double>("recall.lr", 5e-5);
  c.train.batch_size = r.number<std::size_t>("recall.batch_size", 64);
  c.train.n_neg = r.number<std::size_t>("recall.n_neg", 9);
  c.train.seed = r.number<std::uint64_t>("recall.seed", 0);
  c.train.d_out = r.number<std::size_t>("recall.d_out", 0);
  c.train.temperature = r.number<double>("recall.temperature", 1.0);
  c.train.normalize_output = r.boolean("recall.normalize_output", true);
  c.n_recall = r.number<std::size_t>("recall.n_recall", 3);
  c.candidate_set_size = r.number<std::size_t>("recall.candidate_set_size", 10);
  c.eval_seed = r.number<std::uint64_t>("recall.eval_seed", 0);
  if (auto ks = r.get("recall.k_values")) {
    c.k_values.clear();
    std::istringstream ss(*ks);
    for (std::string item; std::getline(ss, item, ',');) {
      item = trim(item);
      try {
        c.k_values.push_back(std::stoul(item));
      } catch (const std::exception&) {
        throw ConfigError("recall.k_values has invalid entry '" + item + "'");
      }
    }
  }

  c.distill_max_cases = r.number<std::size_t>("distill.max_cases", 100);
  c.host = r.get("service.host").value_or("127.0.0.1");
  c.port = r.number<int>("service.port", 8080);

  c.validate();
  return c;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  PipelineConfig c = parse_config(ss.str(), std::filesystem::absolute(path).parent_path());
  c.check_paths();
  return c;
}

}  // namespace respsel
