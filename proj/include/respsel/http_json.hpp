#pragma once

#include <chrono>
#include <string>

#include "json.hpp"

namespace respsel {

struct HttpOptions {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{100};  // doubled after each failure
  std::chrono::milliseconds timeout{10000};
};

// POST a JSON body to {endpoint}{path} and return the parsed JSON reply.
// Connection failures and non-200 statuses are retried; after the last
// attempt a TransportError carrying the attempt count is thrown.
nlohmann::json post_json(const std::string& endpoint, const std::string& path, const nlohmann::json& body,
                         const HttpOptions& opts = {});

}  // namespace respsel
