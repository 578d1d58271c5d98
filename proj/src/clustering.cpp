#include "respsel/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <random>
#include <set>

#include "respsel/errors.hpp"
#include "respsel/kernels.hpp"

namespace respsel {

namespace {

Matrix to_matrix(std::span<const EmbeddingVector> vectors) {
  const std::size_t d = vectors.empty() ? 0 : vectors.front().dimension();
  Matrix m(vectors.size(), d);
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    if (vectors[i].dimension() != d) throw DomainError("vectors of mixed dimension");
    std::copy(vectors[i].values().begin(), vectors[i].values().end(), m.row(i).begin());
  }
  return m;
}

Matrix means(const Matrix& points, std::span<const std::size_t> labels, std::size_t k) {
  Matrix c(k, points.cols);
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < points.rows; ++i) {
    auto row = c.row(labels[i]);
    auto p = points.row(i);
    for (std::size_t j = 0; j < points.cols; ++j) row[j] += p[j];
    ++counts[labels[i]];
  }
  for (std::size_t q = 0; q < k; ++q)
    if (counts[q])
      for (double& v : c.row(q)) v /= static_cast<double>(counts[q]);
  return c;
}

double sse(const Matrix& points, const Matrix& centers, std::span<const std::size_t> labels) {
  double s = 0.0;
  for (std::size_t i = 0; i < points.rows; ++i) s += kernels::squared_distance(points.row(i), centers.row(labels[i]));
  return s;
}

Matrix kmeanspp(const Matrix& points, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = points.rows;
  Matrix centers(k, points.cols);
  std::vector<bool> chosen(n, false);
  std::vector<double> d2(n, std::numeric_limits<double>::infinity());

  std::size_t pick = std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
  for (std::size_t c = 0; c < k; ++c) {
    if (c > 0) {
      double total = 0.0;
      for (std::size_t i = 0; i < n; ++i) total += chosen[i] ? 0.0 : d2[i];
      if (total > 0.0) {
        const double r = std::uniform_real_distribution<double>(0.0, total)(rng);
        double acc = 0.0;
        pick = n;
        for (std::size_t i = 0; i < n; ++i) {
          if (chosen[i] || d2[i] == 0.0) continue;
          acc += d2[i];
          pick = i;
          if (acc > r) break;
        }
      } else {
        // Remaining points all coincide with chosen centers.
        std::vector<std::size_t> rest;
        for (std::size_t i = 0; i < n; ++i)
          if (!chosen[i]) rest.push_back(i);
        pick = rest[std::uniform_int_distribution<std::size_t>(0, rest.size() - 1)(rng)];
      }
    }
    chosen[pick] = true;
    std::copy(points.row(pick).begin(), points.row(pick).end(), centers.row(c).begin());
    for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], kernels::squared_distance(points.row(i), centers.row(c)));
  }
  return centers;
}

struct LloydRun {
  Matrix centers;
  std::vector<std::size_t> labels;
  std::vector<double> history;
  std::size_t iterations = 0;
  bool converged = false;
};

LloydRun lloyd(const Matrix& points, Matrix centers, const KMeansOptions& opts) {
  const std::size_t n = points.rows, k = centers.rows;
  LloydRun run;
  run.labels.assign(n, 0);
  std::vector<double> d2(n, 0.0);
  const std::size_t max_iter = std::max<std::size_t>(1, opts.max_iter);
  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    kernels::parallel::assign_nearest(points, centers, run.labels, d2);

    std::vector<std::size_t> counts(k, 0);
    for (auto l : run.labels) ++counts[l];
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c]) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i)
        if (counts[run.labels[i]] > 1 && (far == n || d2[i] > d2[far])) far = i;
      --counts[run.labels[far]];
      run.labels[far] = c;
      d2[far] = 0.0;
      counts[c] = 1;
    }

    Matrix updated = means(points, run.labels, k);
    double shift = 0.0;
    for (std::size_t c = 0; c < k; ++c)
      shift = std::max(shift, std::sqrt(kernels::squared_distance(centers.row(c), updated.row(c))));
    centers = std::move(updated);
    run.history.push_back(sse(points, centers, run.labels));
    run.iterations = iter + 1;
    if (shift < opts.tol) {
      run.converged = true;
      break;
    }
  }
  run.centers = std::move(centers);
  return run;
}

}  // namespace

Clustering Clustering::from_assignments(std::span<const EmbeddingVector> vectors, std::vector<std::size_t> assignments,
                                        std::size_t k) {
  if (assignments.size() != vectors.size()) throw DomainError("assignment count differs from vector count");
  if (k == 0) throw DomainError("k must be positive");
  const Matrix points = to_matrix(vectors);
  Clustering c;
  c.k = k;
  c.members.resize(k);
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] >= k) throw DomainError("assignment out of range");
    c.members[assignments[i]].push_back(i);
  }
  for (std::size_t q = 0; q < k; ++q)
    if (c.members[q].empty()) throw DomainError("cluster " + std::to_string(q) + " is empty");
  const Matrix centers = means(points, assignments, k);
  for (std::size_t q = 0; q < k; ++q)
    c.centers.emplace_back(std::vector<double>(centers.row(q).begin(), centers.row(q).end()));
  c.objective_history.push_back(sse(points, centers, assignments));
  c.assignments = std::move(assignments);
  c.converged = true;
  return c;
}

Clustering kmeans(std::span<const EmbeddingVector> vectors, const KMeansOptions& opts) {
  if (opts.k == 0) throw DomainError("k must be positive");
  if (opts.k > vectors.size())
    throw DomainError("k=" + std::to_string(opts.k) + " exceeds item count " + std::to_string(vectors.size()));
  const Matrix points = to_matrix(vectors);
  std::mt19937_64 rng(opts.seed);

  std::optional<LloydRun> best;
  for (std::size_t r = 0; r < std::max<std::size_t>(1, opts.n_init); ++r) {
    LloydRun run = lloyd(points, kmeanspp(points, opts.k, rng), opts);
    if (!best || run.history.back() < best->history.back()) best = std::move(run);
  }

  Clustering c;
  c.k = opts.k;
  c.members.resize(opts.k);
  for (std::size_t i = 0; i < best->labels.size(); ++i) c.members[best->labels[i]].push_back(i);
  for (std::size_t q = 0; q < opts.k; ++q)
    c.centers.emplace_back(std::vector<double>(best->centers.row(q).begin(), best->centers.row(q).end()));
  c.assignments = std::move(best->labels);
  c.objective_history = std::move(best->history);
  c.iterations = best->iterations;
  c.converged = best->converged;
  return c;
}

double intra_distance(const Clustering& c, std::span<const EmbeddingVector> vectors) {
  double total = 0.0;
  for (std::size_t q = 0; q < c.k; ++q) {
    if (c.members[q].empty()) throw DomainError("cluster " + std::to_string(q) + " is empty");
    double s = 0.0;
    for (auto i : c.members[q]) s += l2_dist(vectors[i], c.centers[q]);
    total += s / static_cast<double>(c.members[q].size());
  }
  return total / static_cast<double>(c.k);
}

double inter_distance(const Clustering& c, std::span<const EmbeddingVector> vectors) {
  if (c.k < 2) throw DomainError("inter-cluster distance needs at least 2 clusters");
  double total = 0.0;
  for (std::size_t q = 0; q < c.k; ++q) {
    if (c.members[q].empty()) throw DomainError("cluster " + std::to_string(q) + " is empty");
    for (std::size_t o = 0; o < c.k; ++o) {
      if (o == q) continue;
      double s = 0.0;
      for (auto i : c.members[q]) s += l2_dist(vectors[i], c.centers[o]);
      total += s / static_cast<double>(c.members[q].size());
    }
  }
  return total / static_cast<double>(c.k * (c.k - 1));
}

std::vector<SeedScript> select_seeds(const Clustering& c, std::span<const EmbeddingVector> vectors,
                                     std::span<const std::string> texts, const std::string& strategy,
                                     std::size_t per_cluster) {
  if (texts.size() != vectors.size()) throw PreconditionError("texts and vectors are not aligned");
  std::vector<SeedScript> seeds;
  for (std::size_t q = 0; q < c.k; ++q) {
    std::vector<std::pair<double, std::size_t>> ranked;
    for (auto i : c.members[q]) ranked.emplace_back(l2_dist(vectors[i], c.centers[q]), i);
    std::sort(ranked.begin(), ranked.end());
    const std::size_t take = std::min(per_cluster, ranked.size());
    for (std::size_t r = 0; r < take; ++r) {
      const auto [dist, i] = ranked[r];
      seeds.push_back({texts[i], strategy, q, dist, i});
    }
  }
  return seeds;
}

double distinct_n(std::span<const std::string> texts, std::size_t n, Tokenizer tokenizer) {
  if (n == 0) throw DomainError("n must be positive");
  std::set<std::vector<std::string>> unique;
  std::size_t total = 0;
  for (const auto& t : texts) {
    const auto toks = tokenize(t, tokenizer);
    for (std::size_t i = 0; i + n <= toks.size(); ++i) {
      unique.emplace(toks.begin() + i, toks.begin() + i + n);
      ++total;
    }
  }
  if (total == 0) throw DomainError("no " + std::to_string(n) + "-grams in input");
  return static_cast<double>(unique.size()) / static_cast<double>(total);
}

nlohmann::json cluster_report_json(const std::vector<StrategyClusterReport>& rows, Tokenizer distinct_tokenizer,
                                   std::optional<double> distinct1, std::optional<double> distinct2) {
  nlohmann::json strategies = nlohmann::json::array();
  double intra_sum = 0.0, inter_sum = 0.0;
  std::size_t inter_rows = 0;
  for (const auto& r : rows) {
    strategies.push_back({{"strategy", r.strategy},
                          {"K", r.k},
                          {"items", r.items},
                          {"intra", r.intra},
                          {"inter", r.inter ? nlohmann::json(*r.inter) : nlohmann::json(nullptr)},
                          {"seeds", r.seed_texts}});
    intra_sum += r.intra;
    if (r.inter) {
      inter_sum += *r.inter;
      ++inter_rows;
    }
  }
  nlohmann::json j = {{"strategies", std::move(strategies)}, {"distinct_tokenizer", to_string(distinct_tokenizer)}};
  j["average"] = {{"intra", rows.empty() ? 0.0 : intra_sum / static_cast<double>(rows.size())},
                  {"inter", inter_rows ? nlohmann::json(inter_sum / static_cast<double>(inter_rows)) : nlohmann::json(nullptr)}};
  j["distinct_1"] = distinct1 ? nlohmann::json(*distinct1) : nlohmann::json(nullptr);
  j["distinct_2"] = distinct2 ? nlohmann::json(*distinct2) : nlohmann::json(nullptr);
  return j;
}

std::string cluster_report_table(const std::vector<StrategyClusterReport>& rows) {
  std::size_t width = std::string("Average").size();
  for (const auto& r : rows) width = std::max(width, r.strategy.size());
  std::string out;
  char buf[256];
  auto line = [&](const std::string& name, const std::string& a, const std::string& b) {
    std::snprintf(buf, sizeof buf, "%-*s  %8s  %8s\n", static_cast<int>(width), name.c_str(), a.c_str(), b.c_str());
    out += buf;
  };
  auto num = [](std::optional<double> v) {
    if (!v) return std::string("-");
    char b[32];
    std::snprintf(b, sizeof b, "%.4f", *v);
    return std::string(b);
  };
  line("Strategy", "d_intra", "d_inter");
  out += std::string(width + 20, '-') + "\n";
  double intra_sum = 0.0, inter_sum = 0.0;
  std::size_t inter_rows = 0;
  for (const auto& r : rows) {
    line(r.strategy, num(r.intra), num(r.inter));
    intra_sum += r.intra;
    if (r.inter) {
      inter_sum += *r.inter;
      ++inter_rows;
    }
  }
  out += std::string(width + 20, '-') + "\n";
  line("Average", num(rows.empty() ? std::nullopt : std::optional(intra_sum / static_cast<double>(rows.size()))),
       num(inter_rows ? std::optional(inter_sum / static_cast<double>(inter_rows)) : std::nullopt));
  return out;
}

}  // namespace respsel
