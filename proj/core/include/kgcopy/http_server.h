#ifndef KGCOPY_HTTP_SERVER_H_
#define KGCOPY_HTTP_SERVER_H_

#include <memory>
#include <string>

#include "kgcopy/serving.h"

namespace kgcopy {

// JSON API:
//   GET  /teams                    -> {"teams": [...]}
//   POST /sessions {team}          -> {"session_id", "teams"}
//   POST /sessions/{id}/messages {text} -> ChatResponse
// Errors come back as {"error": message} with status 400 or 404.
class HttpServer {
 public:
  explicit HttpServer(std::shared_ptr<SessionManager> sessions);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds `host:port`; port 0 picks a free port. Returns the bound port.
  int Bind(const std::string& host, int port);
  // Blocks until Stop() is called.
  void Listen();
  void Stop();
  bool running() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace kgcopy

#endif  // KGCOPY_HTTP_SERVER_H_
