#include "respsel/recall.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>

#include "respsel/errors.hpp"
#include "respsel/hashing.hpp"

namespace respsel {

using nlohmann::json;

ProjectionHead ProjectionHead::identity(std::size_t d_in, std::size_t d_out, double temperature) {
  if (d_in == 0) throw ConfigError("head input dimension must be positive");
  if (d_out == 0) d_out = d_in;
  if (!(temperature > 0)) throw ConfigError("temperature must be positive");
  ProjectionHead h;
  h.weights = Matrix(d_out, d_in);
  for (std::size_t i = 0; i < std::min(d_in, d_out); ++i) h.weights(i, i) = 1.0;
  h.temperature = temperature;
  return h;
}

std::vector<double> ProjectionHead::project(const EmbeddingVector& x) const {
  if (x.dimension() != d_in())
    throw DomainError("head expects dimension " + std::to_string(d_in()) + ", got " + std::to_string(x.dimension()));
  std::vector<double> y(d_out());
  kernels::matvec(weights, x.values(), y);
  if (normalize_output) {
    const double n = kernels::norm(y);
    if (n > 0.0)
      for (double& v : y) v /= n;
  }
  return y;
}

json ProjectionHead::to_json() const {
  return {{"d_in", d_in()},
          {"d_out", d_out()},
          {"temperature", temperature},
          {"normalize_output", normalize_output},
          {"weights", weights.data}};
}

ProjectionHead ProjectionHead::from_json(const json& j) {
  ProjectionHead h;
  try {
    const auto d_in = j.at("d_in").get<std::size_t>();
    const auto d_out = j.at("d_out").get<std::size_t>();
    h.weights = Matrix(d_out, d_in);
    h.weights.data = j.at("weights").get<std::vector<double>>();
    if (h.weights.data.size() != d_in * d_out) throw ValidationError("head weights have wrong length");
    h.temperature = j.at("temperature").get<double>();
    h.normalize_output = j.at("normalize_output").get<bool>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed head document: ") + e.what());
  }
  for (double w : h.weights.data)
    if (!std::isfinite(w)) throw ValidationError("head weight is not finite");
  if (!(h.temperature > 0)) throw ValidationError("head temperature must be positive");
  return h;
}

void ProjectionHead::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << to_json().dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

ProjectionHead ProjectionHead::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return from_json(json::parse(in));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

double safe_cosine(std::span<const double> a, std::span<const double> b) {
  const double na = kernels::norm(a), nb = kernels::norm(b);
  if (na == 0.0 || nb == 0.0) return 0.0;
  return kernels::dot(a, b) / (na * nb);
}

namespace {

void check_item(const TrainBatch& item, const ProjectionHead& head) {
  if (item.negatives.empty()) throw DomainError("train item needs at least one negative");
  auto check = [&](const EmbeddingVector& v) {
    if (v.dimension() != head.d_in())
      throw DomainError("embedding dimension " + std::to_string(v.dimension()) + " != head input " +
                        std::to_string(head.d_in()));
  };
  check(item.context);
  check(item.positive);
  for (const auto& n : item.negatives) check(n);
}

// G += u (x) x, skipping zero components of x.
void add_outer(Matrix& g, std::span<const double> u, std::span<const double> x) {
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double xj = x[j];
    if (xj == 0.0) continue;
    for (std::size_t i = 0; i < u.size(); ++i) g.data[i * g.cols + j] += u[i] * xj;
  }
}

struct ItemTerms {
  double loss = 0.0;
  std::size_t zeros = 0;
};

ItemTerms item_terms(const TrainBatch& item, const ProjectionHead& head, Matrix* grad) {
  check_item(item, head);
  const std::size_t d_out = head.d_out();
  const double tau = head.temperature;

  std::vector<double> a(d_out);
  kernels::matvec(head.weights, item.context.values(), a);
  const double na = kernels::norm(a);

  const std::size_t m = item.negatives.size() + 1;
  std::vector<const EmbeddingVector*> responses{&item.positive};
  for (const auto& n : item.negatives) responses.push_back(&n);

  std::vector<std::vector<double>> b(m, std::vector<double>(d_out));
  std::vector<double> nb(m), w(m), z(m);
  ItemTerms t;
  if (na == 0.0) ++t.zeros;
  for (std::size_t k = 0; k < m; ++k) {
    kernels::matvec(head.weights, responses[k]->values(), b[k]);
    nb[k] = kernels::norm(b[k]);
    if (nb[k] == 0.0) ++t.zeros;
    w[k] = (na == 0.0 || nb[k] == 0.0) ? 0.0 : kernels::dot(a, b[k]) / (na * nb[k]);
    z[k] = w[k] / tau;
  }
  const double zmax = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (double zk : z) sum += std::exp(zk - zmax);
  const double lse = zmax + std::log(sum);
  t.loss = lse - z[0];
  if (!grad) return t;

  std::vector<double> ga(d_out, 0.0), gb(d_out);
  for (std::size_t k = 0; k < m; ++k) {
    if (na == 0.0 || nb[k] == 0.0) continue;
    const double g = (std::exp(z[k] - lse) - (k == 0 ? 1.0 : 0.0)) / tau;
    const double inv = 1.0 / (na * nb[k]);
    for (std::size_t i = 0; i < d_out; ++i) {
      ga[i] += g * (b[k][i] * inv - w[k] * a[i] / (na * na));
      gb[i] = g * (a[i] * inv - w[k] * b[k][i] / (nb[k] * nb[k]));
    }
    add_outer(*grad, gb, responses[k]->values());
  }
  add_outer(*grad, ga, item.context.values());
  return t;
}

}  // namespace

double contrastive_loss(std::span<const TrainBatch> batch, const ProjectionHead& head) {
  if (batch.empty()) throw PreconditionError("contrastive_loss needs a nonempty batch");
  double total = 0.0;
  for (const auto& item : batch) total += item_terms(item, head, nullptr).loss;
  return total / static_cast<double>(batch.size());
}

LossAndGradient loss_gradient(std::span<const TrainBatch> batch, const ProjectionHead& head) {
  if (batch.empty()) throw PreconditionError("loss_gradient needs a nonempty batch");
  LossAndGradient out;
  out.gradient = Matrix(head.d_out(), head.d_in());
  for (const auto& item : batch) {
    const ItemTerms t = item_terms(item, head, &out.gradient);
    out.loss += t.loss;
    out.zero_vectors += t.zeros;
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  out.loss *= inv;
  for (double& g : out.gradient.data) g *= inv;
  return out;
}

std::vector<std::size_t> sample_negative_indices(const std::string& dialogue_id,
                                                 std::span<const ContextResponse> corpus, std::size_t n_neg,
                                                 std::uint64_t seed) {
  std::vector<std::size_t> pool;
  pool.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    if (corpus[i].dialogue_id != dialogue_id) pool.push_back(i);
  if (pool.size() < n_neg)
    throw ConfigError("need " + std::to_string(n_neg) + " responses from other dialogues, pool has " +
                      std::to_string(pool.size()));
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < n_neg; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, pool.size() - 1)(rng);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n_neg);
  return pool;
}

std::vector<Utterance> sample_negatives(const ContextResponse& pair, std::span<const ContextResponse> corpus,
                                        std::size_t n_neg, std::uint64_t seed) {
  std::vector<Utterance> out;
  for (auto i : sample_negative_indices(pair.dialogue_id, corpus, n_neg, seed)) out.push_back(corpus[i].response);
  return out;
}

std::string join_context(std::span<const Utterance> context, const std::string& separator) {
  std::string s;
  for (std::size_t i = 0; i < context.size(); ++i) {
    if (i) s += separator;
    s += context[i].text;
  }
  return s;
}

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t x = seed ^ (a * 0x9e3779b97f4a7c15ULL) ^ (b * 0xc2b2ae3d27d4eb4fULL);
  x ^= x >> 31;
  x *= 0xbf58476d1ce4e5b9ULL;
  x ^= x >> 29;
  return x;
}

struct EmbeddedPairs {
  std::vector<EmbeddingVector> contexts;
  std::vector<EmbeddingVector> responses;
};

EmbeddedPairs embed_pairs(std::span<const ContextResponse> pairs, const Embedder& embedder, const std::string& sep) {
  std::vector<std::string> ctx, resp;
  for (const auto& p : pairs) {
    ctx.push_back(join_context(p.context, sep));
    resp.push_back(p.response.text);
  }
  return {embedder.embed_batch(ctx), embedder.embed_batch(resp)};
}

std::vector<TrainBatch> fixed_batches(std::span<const ContextResponse> pairs, const EmbeddedPairs& emb,
                                      std::size_t n_neg, std::uint64_t seed) {
  std::vector<TrainBatch> items;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    TrainBatch b{emb.contexts[i], emb.responses[i], {}};
    for (auto j : sample_negative_indices(pairs[i].dialogue_id, pairs, n_neg, mix_seed(seed, 0, i)))
      b.negatives.push_back(emb.responses[j]);
    items.push_back(std::move(b));
  }
  return items;
}

}  // namespace

TrainResult train_head(std::span<const ContextResponse> pairs, const Embedder& embedder, const TrainConfig& config,
                       std::span<const ContextResponse> validation) {
  if (pairs.empty()) throw PreconditionError("train_head needs training pairs");
  if (config.n_neg == 0) throw ConfigError("n_neg must be at least 1");
  if (pairs.size() < config.n_neg + 1)
    throw ConfigError("need at least n_neg+1=" + std::to_string(config.n_neg + 1) + " responses, have " +
                      std::to_string(pairs.size()));
  if (config.batch_size == 0) throw ConfigError("batch_size must be positive");

  TrainResult result;
  ProjectionHead head = ProjectionHead::identity(embedder.dimension(), config.d_out, config.temperature);
  head.normalize_output = config.normalize_output;

  const EmbeddedPairs train = embed_pairs(pairs, embedder, config.separator);
  const bool has_val = !validation.empty();
  const EmbeddedPairs val = has_val ? embed_pairs(validation, embedder, config.separator) : EmbeddedPairs{};
  const std::vector<TrainBatch> eval_items =
      has_val ? fixed_batches(validation, val, config.n_neg, config.seed ^ 0x5eedULL)
              : fixed_batches(pairs, train, config.n_neg, config.seed ^ 0x5eedULL);

  double best_loss = contrastive_loss(eval_items, head);
  result.validation_loss.push_back(best_loss);
  result.head = head;

  std::vector<std::size_t> order(pairs.size());
  std::size_t zero_vectors = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(mix_seed(config.seed, epoch, 0xabcdef));
    std::shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::vector<TrainBatch> batch;
      batch.reserve(end - start);
      for (std::size_t p = start; p < end; ++p) {
        const std::size_t i = order[p];
        TrainBatch b{train.contexts[i], train.responses[i], {}};
        for (auto j : sample_negative_indices(pairs[i].dialogue_id, pairs, config.n_neg,
                                              mix_seed(config.seed, epoch, i + 1)))
          b.negatives.push_back(train.responses[j]);
        batch.push_back(std::move(b));
      }
      const LossAndGradient lg = loss_gradient(batch, head);
      zero_vectors += lg.zero_vectors;
      epoch_loss += lg.loss * static_cast<double>(batch.size());
      for (std::size_t q = 0; q < head.weights.data.size(); ++q) head.weights.data[q] -= config.lr * lg.gradient.data[q];
    }
    result.train_loss.push_back(epoch_loss / static_cast<double>(order.size()));
    const double v = contrastive_loss(eval_items, head);
    result.validation_loss.push_back(v);
    if (v < best_loss) {
      best_loss = v;
      result.head = head;
      result.best_epoch = epoch;
    }
  }
  if (zero_vectors)
    std::clog << "[warn] train_head: " << zero_vectors << " projections were zero; cosine taken as 0\n";
  return result;
}

std::size_t RecallIndex::size() const {
  std::size_t n = 0;
  for (const auto& [p, b] : blocks_) n += b.entries.size();
  return n;
}

bool RecallIndex::knows_purpose(const std::string& p) const { return purposes_.empty() || purposes_.contains(p); }

json RecallIndex::to_json() const {
  json blocks = json::object();
  for (const auto& [purpose, b] : blocks_) {
    json entries = json::array();
    for (std::size_t i = 0; i < b.entries.size(); ++i) {
      const auto& e = b.entries[i];
      auto row = b.embeddings.row(i);
      entries.push_back({{"script_id", e.script_id},
                         {"strategy", e.strategy},
                         {"text", e.text},
                         {"embedding", std::vector<double>(row.begin(), row.end())}});
    }
    blocks[purpose] = std::move(entries);
  }
  return {{"head", head_.to_json()}, {"purposes", purposes_}, {"separator", separator_}, {"blocks", std::move(blocks)}};
}

RecallIndex RecallIndex::from_json(const json& j) {
  try {
    RecallIndex idx(ProjectionHead::from_json(j.at("head")), j.at("purposes").get<std::set<std::string>>(),
                    j.at("separator").get<std::string>());
    for (const auto& [purpose, entries] : j.at("blocks").items()) {
      Block b;
      b.embeddings = Matrix(entries.size(), idx.head_.d_out());
      for (std::size_t i = 0; i < entries.size(); ++i) {
        const auto& e = entries[i];
        b.entries.push_back({e.at("script_id").get<std::string>(), purpose, e.at("strategy").get<std::string>(),
                             e.at("text").get<std::string>()});
        const auto emb = e.at("embedding").get<std::vector<double>>();
        if (emb.size() != idx.head_.d_out()) throw ValidationError("index embedding has wrong dimension");
        std::copy(emb.begin(), emb.end(), b.embeddings.row(i).begin());
      }
      idx.blocks_[purpose] = std::move(b);
    }
    return idx;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed index document: ") + e.what());
  }
}

bool RecallIndex::operator==(const RecallIndex& o) const {
  if (!(head_ == o.head_ && purposes_ == o.purposes_ && separator_ == o.separator_)) return false;
  if (blocks_.size() != o.blocks_.size()) return false;
  for (const auto& [p, b] : blocks_) {
    auto it = o.blocks_.find(p);
    if (it == o.blocks_.end() || !(b.embeddings == it->second.embeddings)) return false;
    if (b.entries.size() != it->second.entries.size()) return false;
    for (std::size_t i = 0; i < b.entries.size(); ++i)
      if (b.entries[i].script_id != it->second.entries[i].script_id) return false;
  }
  return true;
}

RecallIndex build_index(std::span<const Script> scripts, const Embedder& embedder, const ProjectionHead& head,
                        std::set<std::string> purposes) {
  if (embedder.dimension() != head.d_in())
    throw PreconditionError("embedder dimension " + std::to_string(embedder.dimension()) + " != head input " +
                            std::to_string(head.d_in()));
  std::map<std::string, std::vector<const Script*>> by_purpose;
  for (const auto& s : scripts) {
    if (s.review_status != ReviewStatus::approved)
      throw PreconditionError("script '" + s.id + "' is " + to_string(s.review_status) + ", not approved");
    by_purpose[s.purpose].push_back(&s);
  }
  RecallIndex index(head, std::move(purposes));
  for (auto& [purpose, list] : by_purpose) {
    std::sort(list.begin(), list.end(), [](const Script* a, const Script* b) { return a->id < b->id; });
    RecallIndex::Block block;
    std::vector<std::string> texts;
    for (const Script* s : list) {
      block.entries.push_back({s->id, s->purpose, s->strategy, s->text});
      texts.push_back(s->text);
    }
    const auto vecs = embedder.embed_batch(texts);
    Matrix raw(vecs.size(), head.d_in());
    for (std::size_t i = 0; i < vecs.size(); ++i) std::copy(vecs[i].values().begin(), vecs[i].values().end(), raw.row(i).begin());
    kernels::parallel::project_rows(head.weights, raw, block.embeddings, head.normalize_output);
    index.add_block(purpose, std::move(block));
  }
  return index;
}

std::vector<Recalled> recall_top_n(const RecallIndex& index, const Embedder& embedder,
                                   std::span<const Utterance> context, const std::string& purpose, std::size_t n) {
  if (n == 0) throw PreconditionError("n must be at least 1");
  if (!index.knows_purpose(purpose)) throw DomainError("unknown purpose '" + purpose + "'");
  auto it = index.blocks().find(purpose);
  if (it == index.blocks().end() || it->second.entries.empty()) return {};
  const auto& block = it->second;

  const auto query = index.head().project(embedder.embed(join_context(context, index.separator())));
  std::vector<double> sims(block.entries.size());
  kernels::parallel::cosine_scan(query, block.embeddings, sims);

  std::vector<std::size_t> order(sims.size());
  std::iota(order.begin(), order.end(), 0);
  auto better = [&](std::size_t a, std::size_t b) {
    if (sims[a] != sims[b]) return sims[a] > sims[b];
    return block.entries[a].script_id < block.entries[b].script_id;
  };
  const std::size_t take = std::min(n, order.size());
  std::partial_sort(order.begin(), order.begin() + take, order.end(), better);

  std::vector<Recalled> out;
  for (std::size_t r = 0; r < take; ++r) out.push_back({block.entries[order[r]].script_id, sims[order[r]], r + 1});
  return out;
}

std::map<std::size_t, double> eval_recall_at_k(std::span<const ContextResponse> cases, const CandidateScorer& scorer,
                                               std::span<const std::size_t> k_values,
                                               std::size_t candidate_set_size, std::uint64_t seed) {
  if (candidate_set_size == 0) throw PreconditionError("candidate set size must be positive");
  for (auto k : k_values)
    if (k == 0 || k > candidate_set_size) throw PreconditionError("k values must lie in [1, candidate_set_size]");
  std::map<std::size_t, std::size_t> hits;
  for (auto k : k_values) hits[k] = 0;
  if (cases.empty()) throw PreconditionError("no evaluation cases");

  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < cases.size(); ++i) {
    candidates.assign(1, i);
    for (auto j : sample_negative_indices(cases[i].dialogue_id, cases, candidate_set_size - 1, mix_seed(seed, 7, i)))
      candidates.push_back(j);
    const auto scores = scorer(cases[i], candidates);
    if (scores.size() != candidates.size()) throw DomainError("scorer returned wrong number of scores");
    std::size_t rank = 1;
    for (std::size_t c = 1; c < scores.size(); ++c)
      if (scores[c] >= scores[0]) ++rank;
    for (auto& [k, h] : hits)
      if (rank <= k) ++h;
  }
  std::map<std::size_t, double> out;
  for (const auto& [k, h] : hits) out[k] = static_cast<double>(h) / static_cast<double>(cases.size());
  return out;
}

std::map<std::size_t, double> eval_recall_at_k(const ProjectionHead& head, const Embedder& embedder,
                                               std::span<const ContextResponse> cases,
                                               std::span<const std::size_t> k_values,
                                               std::size_t candidate_set_size, std::uint64_t seed,
                                               const std::string& separator) {
  if (embedder.dimension() != head.d_in()) throw PreconditionError("embedder dimension does not match head");
  const EmbeddedPairs emb = embed_pairs(cases, embedder, separator);
  auto to_matrix = [&](const std::vector<EmbeddingVector>& v) {
    Matrix m(v.size(), head.d_in());
    for (std::size_t i = 0; i < v.size(); ++i) std::copy(v[i].values().begin(), v[i].values().end(), m.row(i).begin());
    return m;
  };
  Matrix ctx, resp;
  kernels::parallel::project_rows(head.weights, to_matrix(emb.contexts), ctx, true);
  kernels::parallel::project_rows(head.weights, to_matrix(emb.responses), resp, true);

  const auto index_of = [&](const ContextResponse& q) { return static_cast<std::size_t>(&q - cases.data()); };
  CandidateScorer scorer = [&](const ContextResponse& q, std::span<const std::size_t> cands) {
    const auto c = ctx.row(index_of(q));
    std::vector<double> s;
    for (auto j : cands) s.push_back(kernels::dot(c, resp.row(j)));
    return s;
  };
  return eval_recall_at_k(cases, scorer, k_values, candidate_set_size, seed);
}

json recall_report_json(const std::map<std::size_t, double>& r_at_k) {
  json j = json::object();
  for (const auto& [k, v] : r_at_k) j["R@" + std::to_string(k)] = v;
  return j;
}

}  // namespace respsel
