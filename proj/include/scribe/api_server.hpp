#pragma once

// HTTP/JSON surface.
//
// Error bodies are {"error": {"code", "message", "violations"}}. Status per
// error code:
//
//   404  NotFound, DanglingReference, UnknownUser
//   409  IllegalTransition, SessionArchived, TranscriptNotReady
//   413  PayloadTooLarge
//   415  UnsupportedMedia
//   422  ValidationFailed, EmptyAudio, EmptyBlob, EmptyTranscript,
//        SectionMismatch, ContextOverflow, NoUsers
//   401  Unauthorized
//   403  Forbidden
//   502  BackendRejected, MalformedOutput
//   503  BackendUnavailable
//   507  StorageFull
//   500  InvariantViolation, ConfigInvalid, AddressInUse, anything else
//        (generic message, no internals)

#include <memory>
#include <string>
#include <vector>

#include "scribe/config.hpp"
#include "scribe/errors.hpp"
#include "scribe/orchestrator.hpp"

namespace scribe {

int http_status_for(ErrorCode code);

struct RouteSpec {
  std::string method;
  std::string path;  // "/sessions/{id}"
  bool requires_auth = true;
  bool mutating = false;
  int success_status = 200;
  std::string summary;
};

/// Every route the server registers, in registration order.
const std::vector<RouteSpec>& route_table();

/// Machine-readable API description served at /openapi.
json openapi_document();

/// A running service. Construction opens storage and registers backends;
/// start() binds and serves on a background thread.
class ApiServer {
 public:
  /// Throws ConfigInvalid.
  explicit ApiServer(ApiConfig config);
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;
  /// Stops gracefully.
  ~ApiServer();

  /// Throws AddressInUse when the port cannot be bound.
  void start();
  /// Bound port (useful with listen_port 0).
  int port() const;
  /// Stops accepting requests, then drains running jobs.
  void stop();
  /// Blocks until stop() is called from another thread or a signal handler.
  void wait();

  Orchestrator& orchestrator();
  Store& store();
  const ApiConfig& config() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Constructs and starts. Throws ConfigInvalid, AddressInUse.
std::unique_ptr<ApiServer> serve(ApiConfig config);

}  // namespace scribe
