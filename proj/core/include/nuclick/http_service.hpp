#pragma once

#include <memory>
#include <string>

#include "nuclick/session.hpp"

namespace nuclick::service {

/// JSON/PNG HTTP front end over a SessionStore.
///
///   POST   /api/sessions                         {"model": id}            -> 201 {session_id, model, revision}
///   GET    /api/sessions                                                  -> {sessions: [...]}
///   GET    /api/sessions/{id}                                             -> state JSON
///   PUT    /api/sessions/{id}/image              PNG body                 -> {width, height, revision}
///   POST   /api/sessions/{id}/objects            guide JSON               -> 201 {object_id, rle, revision, status}
///   PATCH  /api/sessions/{id}/objects/{oid}      guide JSON               -> {object_id, rle, revision, status}
///   DELETE /api/sessions/{id}/objects/{oid}                               -> {object_id, revision}
///   POST   /api/sessions/{id}/undo                                        -> {revision, objects}
///   GET    /api/sessions/{id}/labelmap                                    -> 16-bit PNG
///   GET    /api/sessions/{id}/export                                      -> {width, height, objects: [{object_id, rle}]}
///   GET    /api/models                                                    -> [{id, kind, patch_size, use_exclusion}]
///
/// Mutations accept an "Idempotency-Key" header (or "request_id" in a JSON body); a retry
/// with the same key returns the first response unchanged. Errors are {"error": message}
/// with 400 (invalid input), 404 (unknown session/object/model), 409 (no image / nothing to undo).
class HttpService {
 public:
  explicit HttpService(SessionStore& store);
  ~HttpService();
  HttpService(const HttpService&) = delete;
  HttpService& operator=(const HttpService&) = delete;

  /// Binds to `port` (0 = any free port) and returns the bound port, or -1 on failure.
  int bind(const std::string& host, int port);
  /// Blocks serving requests until stop().
  bool serve();
  void stop();
  void wait_until_ready() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace nuclick::service
