#pragma once

// Helpers shared by the service tests and the acceptance binary: an in-process
// HTTP server on a free port and a runner for the command-line tool.

#include <cstdlib>
#include <filesystem>
#include <memory>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "nuclick/http_service.hpp"
#include "nuclick/pipeline.hpp"

namespace harness {

class Server {
 public:
  Server(nuclick::service::ModelRegistry models, std::filesystem::path data_dir = {})
      : store_(std::move(models), std::move(data_dir)), http_(store_) {
    port_ = http_.bind("127.0.0.1", 0);
    if (port_ <= 0) throw std::runtime_error("cannot bind test server");
    thread_ = std::thread([this] { http_.serve(); });
    http_.wait_until_ready();
  }
  ~Server() {
    http_.stop();
    thread_.join();
  }

  int port() const { return port_; }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_read_timeout(120, 0);
    return c;
  }
  nuclick::service::SessionStore& store() { return store_; }

 private:
  nuclick::service::SessionStore store_;
  nuclick::service::HttpService http_;
  int port_ = 0;
  std::thread thread_;
};

inline std::string to_string(const std::vector<std::uint8_t>& b) { return std::string(b.begin(), b.end()); }
inline std::vector<std::uint8_t> to_bytes(const std::string& s) { return std::vector<std::uint8_t>(s.begin(), s.end()); }

inline std::string guides_json(const std::vector<nuclick::GuideInput>& guides) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& g : guides) j.push_back(nuclick::pipeline::to_json(g));
  return j.dump();
}

inline std::string quote(const std::filesystem::path& p) { return "'" + p.string() + "'"; }

/// Runs the CLI with the given arguments; returns its exit status.
inline int run_cli(const std::string& cli, const std::vector<std::string>& args) {
  std::ostringstream cmd;
  cmd << quote(cli);
  for (const auto& a : args) cmd << ' ' << quote(a);
  cmd << " > /dev/null 2>&1";
  const int status = std::system(cmd.str().c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace harness
