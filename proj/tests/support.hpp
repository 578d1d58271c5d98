#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <thread>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include "httplib.h"
#include "respsel/corpus.hpp"

namespace testing {

class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("respsel-test-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

// httplib server on an ephemeral loopback port, served from a thread.
class LocalServer {
 public:
  explicit LocalServer(const std::function<void(httplib::Server&)>& setup) {
    setup(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  std::string endpoint() const { return "http://127.0.0.1:" + std::to_string(port_); }
  int port() const { return port_; }

 private:
  httplib::Server server_;
  int port_ = -1;
  std::thread thread_;
};

// A loopback port that was free a moment ago and has nothing listening.
inline int unused_port() {
  const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = 0;
  ::bind(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr);
  socklen_t len = sizeof addr;
  ::getsockname(fd, reinterpret_cast<sockaddr*>(&addr), &len);
  ::close(fd);
  return ntohs(addr.sin_port);
}

inline respsel::Utterance collector(std::string text, std::optional<std::string> strategy = std::nullopt) {
  return {respsel::Speaker::collector, std::move(text), std::move(strategy), std::nullopt};
}

inline respsel::Utterance debtor(std::string text, std::optional<std::string> purpose = std::nullopt) {
  return {respsel::Speaker::debtor, std::move(text), std::nullopt, std::move(purpose)};
}

// c1, d1, c2, d2, ... with texts "c1", "d1", ...
inline respsel::Dialogue alternating(std::size_t n, const std::string& id = "dlg") {
  respsel::Dialogue d;
  d.id = id;
  for (std::size_t i = 0; i < n; ++i) {
    const std::string label = (i % 2 == 0 ? "c" : "d") + std::to_string(i / 2 + 1);
    d.utterances.push_back(i % 2 == 0 ? collector(label) : debtor(label));
  }
  return d;
}

}  // namespace testing
