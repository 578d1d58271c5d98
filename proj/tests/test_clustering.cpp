#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "respsel/clustering.hpp"
#include "respsel/errors.hpp"

using namespace respsel;

namespace {

using Partition = std::set<std::set<std::size_t>>;

Partition partition_of(const std::vector<std::size_t>& labels) {
  std::map<std::size_t, std::set<std::size_t>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].insert(i);
  Partition p;
  for (auto& [k, g] : groups) p.insert(g);
  return p;
}

std::vector<EmbeddingVector> points(std::initializer_list<std::initializer_list<double>> rows) {
  std::vector<EmbeddingVector> out;
  for (auto r : rows) out.emplace_back(std::vector<double>(r));
  return out;
}

double sse(std::span<const EmbeddingVector> xs, const std::vector<std::size_t>& labels, std::size_t k) {
  const std::size_t d = xs[0].dimension();
  std::vector<std::vector<double>> mean(k, std::vector<double>(d, 0.0));
  std::vector<double> count(k, 0.0);
  for (std::size_t i = 0; i < xs.size(); ++i) {
    count[labels[i]] += 1;
    for (std::size_t j = 0; j < d; ++j) mean[labels[i]][j] += xs[i][j];
  }
  double total = 0;
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < d; ++j) {
      const double c = mean[labels[i]][j] / count[labels[i]];
      total += (xs[i][j] - c) * (xs[i][j] - c);
    }
  return total;
}

// Minimum-SSE partition over every assignment with no empty cluster.
Partition brute_force(std::span<const EmbeddingVector> xs, std::size_t k) {
  std::vector<std::size_t> labels(xs.size(), 0);
  double best = 1e300;
  Partition best_p;
  for (;;) {
    if (std::set<std::size_t>(labels.begin(), labels.end()).size() == k) {
      const double v = sse(xs, labels, k);
      if (v < best - 1e-12) {
        best = v;
        best_p = partition_of(labels);
      }
    }
    std::size_t i = 0;
    while (i < labels.size() && ++labels[i] == k) labels[i++] = 0;
    if (i == labels.size()) break;
  }
  return best_p;
}

}  // namespace

TEST_SUITE("clustering") {
  TEST_CASE("k = 1 center is the mean") {
    const auto xs = points({{0, 0}, {2, 0}});
    KMeansOptions o;
    o.k = 1;
    const auto c = kmeans(xs, o);
    CHECK(c.centers[0][0] == doctest::Approx(1.0));
    CHECK(c.centers[0][1] == doctest::Approx(0.0));
  }

  TEST_CASE("k = n gives zero objective") {
    const auto xs = points({{0, 0}, {1, 5}, {3, 2}, {7, 7}});
    KMeansOptions o;
    o.k = 4;
    const auto c = kmeans(xs, o);
    CHECK(c.objective() == doctest::Approx(0.0));
    CHECK(partition_of(c.assignments).size() == 4);
  }

  TEST_CASE("k larger than the item count is a domain error") {
    KMeansOptions o;
    o.k = 3;
    CHECK_THROWS_AS(kmeans(points({{0, 0}, {1, 1}}), o), DomainError);
  }

  TEST_CASE("planted blobs agree with brute-force enumeration") {
    std::mt19937_64 rng(11);
    std::normal_distribution<double> jitter(0.0, 0.5);
    for (int trial = 0; trial < 5; ++trial) {
      std::vector<EmbeddingVector> xs;
      for (int i = 0; i < 4; ++i) xs.emplace_back(std::vector<double>{jitter(rng), jitter(rng)});
      for (int i = 0; i < 4; ++i) xs.emplace_back(std::vector<double>{10 + jitter(rng), 10 + jitter(rng)});
      KMeansOptions o;
      o.k = 2;
      o.seed = static_cast<std::uint64_t>(trial);
      const auto c = kmeans(xs, o);
      CHECK(partition_of(c.assignments) == brute_force(xs, 2));
      CHECK(partition_of(c.assignments) == Partition{{0, 1, 2, 3}, {4, 5, 6, 7}});
    }
  }

  TEST_CASE("objective never increases and the seed fixes the result") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<EmbeddingVector> xs;
    for (int i = 0; i < 200; ++i) xs.emplace_back(std::vector<double>{u(rng), u(rng), u(rng)});
    KMeansOptions o;
    o.k = 5;
    o.seed = 9;
    const auto a = kmeans(xs, o);
    for (std::size_t i = 1; i < a.objective_history.size(); ++i)
      CHECK(a.objective_history[i] <= a.objective_history[i - 1] + 1e-12);
    CHECK(kmeans(xs, o).assignments == a.assignments);
    for (const auto& m : a.members) CHECK(!m.empty());
  }

  TEST_CASE("duplicate points do not leave clusters empty") {
    const auto xs = points({{1, 1}, {1, 1}, {1, 1}, {5, 5}});
    KMeansOptions o;
    o.k = 3;
    const auto c = kmeans(xs, o);
    for (const auto& m : c.members) CHECK(!m.empty());
  }

  TEST_CASE("intra and inter distance hand case") {
    const auto xs = points({{0, 0}, {0, 2}, {10, 0}, {10, 2}});
    const auto c = Clustering::from_assignments(xs, {0, 0, 1, 1}, 2);
    CHECK(intra_distance(c, xs) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(inter_distance(c, xs) - std::sqrt(101.0)) < 1e-8);
    CHECK(std::abs(inter_distance(c, xs) - 10.04987562) < 1e-8);

    const auto same = points({{1, 1}, {1, 1}});
    CHECK(intra_distance(Clustering::from_assignments(same, {0, 0}, 1), same) == 0.0);
    CHECK_THROWS_AS(inter_distance(Clustering::from_assignments(same, {0, 0}, 1), same), DomainError);
    CHECK_THROWS_AS(Clustering::from_assignments(xs, {0, 0, 0, 0}, 2), DomainError);
  }

  TEST_CASE("seed selection: quota, nearest first, index tie-break") {
    std::vector<EmbeddingVector> xs;
    for (int i = 0; i < 7; ++i) xs.emplace_back(std::vector<double>{static_cast<double>(i), 0.0});
    std::vector<std::string> texts;
    for (int i = 0; i < 7; ++i) texts.push_back("t" + std::to_string(i));
    const auto c = Clustering::from_assignments(xs, std::vector<std::size_t>(7, 0), 1);  // center x = 3
    const auto seeds = select_seeds(c, xs, texts, "S", 5);
    REQUIRE(seeds.size() == 5);
    // Distances 0 (3), 1 (2, 4), 2 (1, 5): ties go to the lower index.
    std::vector<std::string> got;
    for (const auto& s : seeds) got.push_back(s.text);
    CHECK(got == std::vector<std::string>{"t3", "t2", "t4", "t1", "t5"});
    CHECK(seeds[0].strategy == "S");

    const auto three = points({{0, 0}, {1, 0}, {2, 0}});
    const std::vector<std::string> tt{"a", "b", "c"};
    CHECK(select_seeds(Clustering::from_assignments(three, {0, 0, 0}, 1), three, tt, "S", 5).size() == 3);
  }

  TEST_CASE("distinct-n hand cases") {
    const std::vector<std::string> aba{"a b a"}, aaaa{"a a a a"};
    CHECK(distinct_n(aba, 1, Tokenizer::whitespace) == doctest::Approx(2.0 / 3.0));
    CHECK(distinct_n(aba, 2, Tokenizer::whitespace) == 1.0);
    CHECK(distinct_n(aaaa, 1, Tokenizer::whitespace) == 0.25);
    // n-grams do not cross text boundaries: {ab} and {ba} only.
    const std::vector<std::string> split{"a b", "b a"};
    CHECK(distinct_n(split, 2, Tokenizer::whitespace) == 1.0);
    CHECK(distinct_n(std::vector<std::string>{"aba"}, 1, Tokenizer::character) == doctest::Approx(2.0 / 3.0));
    CHECK_THROWS_AS(distinct_n(std::vector<std::string>{"a"}, 2, Tokenizer::whitespace), DomainError);
  }

  TEST_CASE("cluster report table has one row per strategy and an average") {
    std::vector<StrategyClusterReport> rows{{"A", 2, 10, 0.2, 1.0, {}}, {"B", 2, 10, 0.4, 1.2, {}}};
    const std::string t = cluster_report_table(rows);
    CHECK(t.find("Strategy") != std::string::npos);
    CHECK(t.find("Average") != std::string::npos);
    CHECK(t.find("0.3000") != std::string::npos);
    const auto j = cluster_report_json(rows, Tokenizer::character, 0.5, std::nullopt);
    CHECK(j.at("average").at("intra").get<double>() == doctest::Approx(0.3));
  }
}
