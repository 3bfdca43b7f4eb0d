#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "roadwatch/config.hpp"
#include "roadwatch/store.hpp"

namespace roadwatch {

struct IngestReport {
  std::int64_t batch_id = 0;
  IngestStats stats;
  std::int64_t clusters = 0;
  std::int64_t potholes_created = 0;
  std::int64_t potholes_merged = 0;
  std::int64_t potholes_reopened = 0;
  std::int64_t potholes_repaired = 0;
  std::vector<std::int64_t> alert_ids;

  /// Geotag statistics plus pipeline counts, flattened into one object.
  nlohmann::json statistics() const;
};

struct SegmentRequest {
  LatLon start;
  LatLon end;
  SegmentMode mode = SegmentMode::Routed;
  bool fallback = false;
  ContractMetadata contract;
  std::optional<std::string> category;
};

struct SegmentEdit {
  std::optional<LatLon> start;
  std::optional<LatLon> end;
  std::optional<ContractMetadata> contract;
  std::optional<std::string> category;
  bool fallback = false;
};

struct TickReport {
  std::int64_t evaluated = 0;
  std::int64_t changed = 0;
  std::vector<std::int64_t> alert_ids;
};

struct LoginResult {
  std::string token;
  UtcInstant expires_at;
};

/// Orchestrates the pipeline and governance workflow over a Store. Every
/// entry point runs in one store transaction; alerts are dispatched after
/// commit through the configured sink (outbox style).
class Service {
 public:
  Service(Store& store, Config config, std::unique_ptr<RoutingProvider> router = nullptr,
          std::unique_ptr<NotificationSink> sink = nullptr);

  /// Builds the router and sink from the config URLs.
  static Service from_config(Store& store, const Config& config);

  Store& store() noexcept { return store_; }
  const Config& config() const noexcept { return config_; }
  void set_sleep(SleepFn sleep) { sleep_ = std::move(sleep); }

  /// geotag -> cluster -> merge -> attribute -> verify repairs -> evaluate ->
  /// alerts, committed atomically, then alert dispatch.
  IngestReport ingest(std::string_view detections_jsonl, std::string_view gps_csv, const std::string& actor,
                      std::optional<ClockOffset> offset = std::nullopt);

  /// Geometry and length for a prospective segment; nothing is persisted.
  RoadSegment preview_segment(const SegmentRequest& request) const;
  RoadSegment create_segment(const SegmentRequest& request, const std::string& actor);
  RoadSegment edit_segment(std::int64_t id, const SegmentEdit& edit, const std::string& actor);
  void delete_segment(std::int64_t id, const std::string& actor);

  /// Deadline evaluation pass over every segment.
  TickReport tick(const std::string& actor);

  /// Health report. Contractor contact and alert recipients appear only when
  /// `include_private` is set. Throws Error{NotFound}.
  nlohmann::json report(std::int64_t segment_id, bool include_private) const;

  /// Manual alert routed through dispatch.
  AlertEvent notify(std::int64_t segment_id, const std::string& message, const std::string& actor);

  /// Delivers the given pending events (or all pending events when empty).
  std::vector<AlertEvent> dispatch(const std::vector<std::int64_t>& alert_ids = {});

  LoginResult login(const std::string& username, const std::string& password);
  /// Throws Error{Unauthorized} for unknown or expired tokens.
  AuthorityAccount authenticate(const std::string& token) const;
  AuthorityAccount create_account(const std::string& username, const std::string& password, Role role,
                                  const std::string& actor);

 private:
  /// Recomputes attribution of every pothole and persists changes. Returns
  /// the segments whose pothole set changed. Runs inside a transaction.
  std::vector<std::int64_t> reattribute();

  /// Re-evaluates health for `segment_ids`, persists changes and records
  /// transition alerts. Runs inside a transaction.
  std::vector<std::int64_t> evaluate_segments(std::vector<std::int64_t> segment_ids,
                                              std::int64_t* changed = nullptr);

  Store& store_;
  Config config_;
  std::unique_ptr<RoutingProvider> router_;
  std::unique_ptr<NotificationSink> sink_;
  SleepFn sleep_;
};

}  // namespace roadwatch
