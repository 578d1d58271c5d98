#include "respsel/embedding.hpp"

#include <cmath>

#include "respsel/errors.hpp"
#include "respsel/hashing.hpp"
#include "respsel/kernels.hpp"

namespace respsel {

EmbeddingVector::EmbeddingVector(std::vector<double> values) : values_(std::move(values)) {
  for (double v : values_)
    if (!std::isfinite(v)) throw DomainError("embedding component is not finite");
}

EmbeddingVector EmbeddingVector::scaled(double a) const {
  std::vector<double> v(values_);
  for (double& x : v) x *= a;
  return EmbeddingVector(std::move(v));
}

namespace {
void require_same_dim(const EmbeddingVector& u, const EmbeddingVector& v) {
  if (u.dimension() != v.dimension())
    throw DomainError("dimension mismatch: " + std::to_string(u.dimension()) + " vs " + std::to_string(v.dimension()));
}
}  // namespace

double cosine_sim(const EmbeddingVector& u, const EmbeddingVector& v) {
  require_same_dim(u, v);
  const double nu = kernels::norm(u.values());
  const double nv = kernels::norm(v.values());
  if (nu == 0.0 || nv == 0.0) throw DomainError("cosine similarity of a zero vector");
  return std::clamp(kernels::dot(u.values(), v.values()) / (nu * nv), -1.0, 1.0);
}

double l2_dist(const EmbeddingVector& u, const EmbeddingVector& v) {
  require_same_dim(u, v);
  return std::sqrt(kernels::squared_distance(u.values(), v.values()));
}

void EmbedderSpec::validate() const {
  if (dimension == 0) throw ConfigError("embedder dimension must be positive");
  if (kind == EmbedderKind::remote && (!endpoint || endpoint->empty()))
    throw ConfigError("remote embedder requires an endpoint");
  if (kind == EmbedderKind::mock && !mock_seed) throw ConfigError("mock embedder requires mock_seed");
}

EmbeddingVector Embedder::embed(std::string_view text) const {
  if (text.empty()) throw PreconditionError("cannot embed empty text");
  return embed_batch({std::string(text)}).front();
}

MockEmbedder::MockEmbedder(std::size_t dimension, std::uint64_t seed, Tokenizer tokenizer)
    : dimension_(dimension), seed_(seed), tokenizer_(tokenizer) {
  if (dimension_ == 0) throw ConfigError("embedder dimension must be positive");
}

std::size_t MockEmbedder::bucket(std::string_view token) const {
  const std::uint64_t basis = fnv1a64(std::to_string(seed_));
  return static_cast<std::size_t>(fnv1a64(token, basis) % dimension_);
}

std::vector<EmbeddingVector> MockEmbedder::embed_batch(const std::vector<std::string>& texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& text : texts) {
    if (text.empty()) throw PreconditionError("cannot embed empty text");
    std::vector<double> v(dimension_, 0.0);
    for (const auto& tok : tokenize(text, tokenizer_)) v[bucket(tok)] += 1.0;
    const double n = kernels::norm(v);
    if (n > 0.0)
      for (double& x : v) x /= n;
    out.emplace_back(std::move(v));
  }
  return out;
}

RemoteEmbedder::RemoteEmbedder(std::string endpoint, std::size_t dimension, std::size_t batch_size, HttpOptions http,
                               std::size_t max_in_flight)
    : endpoint_(std::move(endpoint)),
      dimension_(dimension),
      batch_size_(std::max<std::size_t>(1, batch_size)),
      http_(http),
      in_flight_(static_cast<std::ptrdiff_t>(std::max<std::size_t>(1, max_in_flight))) {}

std::vector<EmbeddingVector> RemoteEmbedder::embed_batch(const std::vector<std::string>& texts) const {
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (std::size_t start = 0; start < texts.size(); start += batch_size_) {
    const std::size_t end = std::min(texts.size(), start + batch_size_);
    nlohmann::json body = {{"texts", nlohmann::json::array()}};
    for (std::size_t i = start; i < end; ++i) {
      if (texts[i].empty()) throw PreconditionError("cannot embed empty text");
      body["texts"].push_back(texts[i]);
    }

    in_flight_.acquire();
    nlohmann::json reply;
    try {
      reply = post_json(endpoint_, "/embed", body, http_);
    } catch (...) {
      in_flight_.release();
      throw;
    }
    in_flight_.release();

    try {
      const auto dim = reply.at("dimension").get<std::size_t>();
      const auto& vectors = reply.at("vectors");
      if (dim != dimension_)
        throw ProviderError("provider dimension " + std::to_string(dim) + " != declared " + std::to_string(dimension_));
      if (vectors.size() != end - start) throw ProviderError("provider returned wrong number of vectors");
      for (const auto& v : vectors) {
        auto values = v.get<std::vector<double>>();
        if (values.size() != dimension_) throw ProviderError("provider vector has wrong dimension");
        out.emplace_back(std::move(values));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ProviderError(std::string("malformed embed reply: ") + e.what());
    }
  }
  return out;
}

std::shared_ptr<const Embedder> make_embedder(const EmbedderSpec& spec) {
  spec.validate();
  if (spec.kind == EmbedderKind::mock)
    return std::make_shared<MockEmbedder>(spec.dimension, *spec.mock_seed, spec.mock_tokenizer);
  HttpOptions http;
  http.max_attempts = spec.max_attempts;
  return std::make_shared<RemoteEmbedder>(*spec.endpoint, spec.dimension, spec.batch_size, http, spec.max_in_flight);
}

}  // namespace respsel
