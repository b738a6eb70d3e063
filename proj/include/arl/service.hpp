#pragma once

// Line-delimited JSON protocol over a local (or TCP) socket.
//
// Request:  {"id":<any>,"request":"<verb>","key":"<identification key>","params":{...}}
// Response: {"id":<echoed>,"ok":true,"result":<value>}
//       or  {"id":<echoed>,"ok":false,"error":{"code":"<stable code>","message":"..."}}

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "arl/codec.hpp"
#include "arl/engine.hpp"
#include "arl/store.hpp"

namespace arl {

/// Maps wire requests 1:1 onto engine operations. When backed by a store,
/// every mutation is on disk before its response is produced.
class Service {
 public:
  /// In-memory only.
  explicit Service(FeedbackPolicy policy = {});
  /// Opens (or creates) a store and restores every application from it.
  explicit Service(const std::filesystem::path& store_root, FeedbackPolicy policy = {});

  Json dispatch(const Json& request);
  /// One request line in, one response line out (without the newline).
  std::string handle_line(std::string_view line);

  Engine& engine() { return *engine_; }
  Store* store() { return store_.get(); }

 private:
  Json execute(std::string_view verb, const Json& request);

  std::unique_ptr<Store> store_;
  std::unique_ptr<Engine> engine_;
};

/// Accepts concurrent connections and answers each line in order.
///
/// Endpoints: `unix:/path/to/socket`, `tcp:HOST:PORT` (port 0 picks a free
/// one), or a bare path meaning a unix socket.
class Server {
 public:
  /// Binds and listens; throws `bind-failure`.
  Server(Service& service, const std::string& endpoint);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Serves until `stop()`.
  void run();
  void stop();
  /// Bound TCP port (0 for unix sockets).
  std::uint16_t port() const { return port_; }

 private:
  void serve_connection(int fd);

  Service& service_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::filesystem::path socket_path_;
  std::atomic<bool> stopping_{false};
  std::mutex clients_mutex_;
  std::set<int> clients_;
  std::vector<std::thread> workers_;
};

}  // namespace arl
