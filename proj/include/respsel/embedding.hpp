#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "respsel/http_json.hpp"
#include "respsel/text.hpp"

namespace respsel {

// Fixed-dimension real vector with finite components.
class EmbeddingVector {
 public:
  EmbeddingVector() = default;
  explicit EmbeddingVector(std::vector<double> values);

  std::size_t dimension() const noexcept { return values_.size(); }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  EmbeddingVector scaled(double a) const;

  bool operator==(const EmbeddingVector&) const = default;

 private:
  std::vector<double> values_;
};

// Throws DomainError on dimension mismatch or an all-zero operand.
double cosine_sim(const EmbeddingVector& u, const EmbeddingVector& v);
// Throws DomainError on dimension mismatch.
double l2_dist(const EmbeddingVector& u, const EmbeddingVector& v);

enum class EmbedderKind { remote, mock };

struct EmbedderSpec {
  EmbedderKind kind = EmbedderKind::mock;
  std::size_t dimension = 1024;
  std::optional<std::string> endpoint;
  std::optional<std::uint64_t> mock_seed;
  Tokenizer mock_tokenizer = Tokenizer::whitespace;
  std::size_t batch_size = 64;
  int max_attempts = 3;
  std::size_t max_in_flight = 4;

  // Throws ConfigError when remote lacks an endpoint or mock lacks a seed.
  void validate() const;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const = 0;

  // Throws PreconditionError on empty text.
  EmbeddingVector embed(std::string_view text) const;
};

// Seeded hashed bag of tokens, L2-normalized. Pure and thread-safe.
class MockEmbedder final : public Embedder {
 public:
  MockEmbedder(std::size_t dimension, std::uint64_t seed, Tokenizer tokenizer = Tokenizer::whitespace);

  std::size_t dimension() const override { return dimension_; }
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const override;

  std::size_t bucket(std::string_view token) const;
  Tokenizer tokenizer() const { return tokenizer_; }

 private:
  std::size_t dimension_;
  std::uint64_t seed_;
  Tokenizer tokenizer_;
};

// POST {endpoint}/embed {"texts": [...]} -> {"dimension", "vectors"}.
class RemoteEmbedder final : public Embedder {
 public:
  RemoteEmbedder(std::string endpoint, std::size_t dimension, std::size_t batch_size = 64,
                 HttpOptions http = {}, std::size_t max_in_flight = 4);

  std::size_t dimension() const override { return dimension_; }
  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) const override;

 private:
  std::string endpoint_;
  std::size_t dimension_;
  std::size_t batch_size_;
  HttpOptions http_;
  mutable std::counting_semaphore<> in_flight_;
};

std::shared_ptr<const Embedder> make_embedder(const EmbedderSpec& spec);

}  // namespace respsel
