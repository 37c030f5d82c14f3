#pragma once

#include "pqscreen/artifact.hpp"

#include <memory>
#include <string>

namespace pqscreen {

inline constexpr int kDefaultPort = 8471;
inline constexpr int kResponseSchemaVersion = 1;

struct HttpReply {
  int status = 200;
  std::string body;  // JSON
};

/// Request handling independent of the transport. Immutable after
/// construction, so handlers may run concurrently.
class ScoringService {
 public:
  explicit ScoringService(ModelArtifact artifact);

  /// POST /v1/score. 400 for unparsable JSON, 422 with a field-level
  /// error list for invalid requests.
  HttpReply score(const std::string& body) const;
  /// GET /v1/model
  HttpReply model_info() const;
  /// GET /v1/health
  HttpReply health() const;

  const ModelArtifact& artifact() const { return artifact_; }

 private:
  ModelArtifact artifact_;
  std::string model_body_;
  std::string health_body_;
};

/// HTTP/1.1 front end for a ScoringService.
class HttpServer {
 public:
  explicit HttpServer(std::shared_ptr<const ScoringService> service);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  /// Binds host:port (port 0 picks a free port) and returns the bound port.
  /// Throws Error("io") if the port is unavailable.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called. bind() must have succeeded.
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace pqscreen
