#include "respsel/http_json.hpp"

#include <thread>

#include "httplib.h"
#include "respsel/errors.hpp"

namespace respsel {

namespace {

// Splits "http://host:port/prefix" into the scheme-host-port and the path prefix.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  const std::size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
  const auto slash = endpoint.find('/', host_start);
  if (slash == std::string::npos) return {endpoint, ""};
  std::string prefix = endpoint.substr(slash);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {endpoint.substr(0, slash), prefix};
}

}  // namespace

nlohmann::json post_json(const std::string& endpoint, const std::string& path, const nlohmann::json& body,
                         const HttpOptions& opts) {
  if (endpoint.empty()) throw ConfigError("remote client has no endpoint");
  const auto [base, prefix] = split_endpoint(endpoint);
  httplib::Client client(base);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(opts.timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(opts.timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());

  const std::string payload = body.dump();
  const int attempts = std::max(1, opts.max_attempts);
  auto backoff = opts.initial_backoff;
  std::string last_error;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    auto res = client.Post(prefix + path, payload, "application/json");
    if (res && res->status == 200) {
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::parse_error& e) {
        last_error = std::string("invalid JSON reply: ") + e.what();
      }
    } else if (res) {
      last_error = "HTTP status " + std::to_string(res->status);
    } else {
      last_error = "connection failed: " + httplib::to_string(res.error());
    }
    if (attempt < attempts) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }
  throw TransportError("POST " + endpoint + path + ": " + last_error, attempts);
}

}  // namespace respsel
