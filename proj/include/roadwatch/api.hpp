#pragma once

#include <chrono>
#include <memory>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "roadwatch/error.hpp"
#include "roadwatch/service.hpp"

namespace roadwatch {

/// HTTP status for a domain error.
int http_status(ErrorCode code) noexcept;

/// Decodes a segment create body:
/// {start:{lat,lon}|[lat,lon], end, mode?, fallback?, contract:{...}, category?}.
/// Throws Error{InvalidArgument} or Error{InvalidContract}.
SegmentRequest parse_segment_request(const nlohmann::json& body);
/// PATCH body; every field optional.
SegmentEdit parse_segment_edit(const nlohmann::json& body);

/// Parses the pothole filter query parameters (bbox, status, from, to,
/// category). `from`/`to` accept an ISO instant or a date; a date `to`
/// covers the whole day. No status means active only; "all" lifts the filter.
PotholeQuery parse_pothole_query(const std::string& bbox, const std::string& status, const std::string& from,
                                 const std::string& to, const std::string& category);

/// JSON/HTTP front end over a Service.
///
///   POST   /api/auth/login
///   POST   /api/ingest                      multipart: detections, gps[, offset]
///   GET    /api/potholes                    ?bbox&status(active|repaired|all)&from&to&category
///   GET    /api/segments                    ?bbox&health&category
///   POST   /api/segments                    ?dry_run=1 previews without saving
///   PATCH  /api/segments/{id}
///   DELETE /api/segments/{id}
///   GET    /api/segments/{id}/report
///   POST   /api/segments/{id}/notify
///   POST   /api/tick                        admin only
///   GET    /api/audit                       JSONL
class ApiServer {
 public:
  explicit ApiServer(Service& service);
  ~ApiServer();
  ApiServer(const ApiServer&) = delete;
  ApiServer& operator=(const ApiServer&) = delete;

  /// Binds and serves on a background thread. Port 0 picks a free port.
  /// Returns the bound port.
  int start(const std::string& host, int port);
  /// Binds and serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();

  /// Runs Service::tick as "system" every `interval` until stop().
  void start_ticker(std::chrono::seconds interval);

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace roadwatch
