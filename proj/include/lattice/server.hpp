#pragma once

#include <memory>
#include <string>

#include "lattice/session.hpp"

namespace lattice {

// JSON-over-HTTP front end for a SessionService.
//
//   GET  /api/tests                      -> {"tests": [{"id", "total"}]}
//   POST /api/sessions                   {"test", "student_key"} or
//                                        {"config", "bank", "student_key"}
//                                        -> 201 {"session_id", "total"}
//   GET  /api/sessions/{id}/item         -> {"prompt", "answered", "total", "n_choices"}
//   POST /api/sessions/{id}/answer       {"answer", "expected_answered"?}
//                                        -> {"accepted", "finished", "answered", "total"}
//   GET  /api/sessions/{id}/result       -> {"grade", "final_column", "transcript"}
//
// Errors are {"error": message} with 400 (bad input), 404 (unknown id) or
// 409 (wrong session state).
class HttpServer {
 public:
  explicit HttpServer(SessionService& service, std::string static_dir = "");
  ~HttpServer();

  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);

  // Blocks serving requests until stop() is called.
  void serve();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace lattice
