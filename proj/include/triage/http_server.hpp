#pragma once

#include <memory>
#include <string>

#include "triage/service.hpp"

namespace triage {

/// JSON-over-HTTP front end for CaseService under the /v1/ prefix.
///
///   POST /v1/cases                      multipart: timeline, metadata, [known_base],
///                                       [metadata_format, source_id, algorithm, seed, threshold]
///   GET  /v1/cases                      list of case handles
///   GET  /v1/cases/{id}                 handle plus known/unknown counts
///   GET  /v1/cases/{id}/predictions     ?top_n=N (whole ranking when omitted)
///   POST /v1/cases/{id}/labels          {"hash", "decision", "investigator"}
///   POST /v1/cases/{id}/retrain
///   GET  /v1/cases/{id}/report
///
/// Failures answer {"error": {"code", "message"[, "diagnostics"]}}.
class HttpServer {
 public:
  explicit HttpServer(CaseService& service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds the listening socket; port 0 picks a free one. Returns the port.
  int bind(const std::string& host, int port);
  /// Serves on the bound socket until stop(); blocks the caller.
  void serve();
  /// serve() on a background thread; returns once the server accepts requests.
  void start();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// HTTP status for a library error code.
int http_status(ErrorCode code);

}  // namespace triage
