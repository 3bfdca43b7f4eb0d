#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "roadwatch/dedupe.hpp"
#include "roadwatch/gps.hpp"
#include "roadwatch/segment.hpp"

namespace roadwatch {

struct GovernanceConfig {
  double warn_per_km = 5.0;
  double severe_per_km = 20.0;
  double coverage_radius_m = 10.0;
  std::chrono::seconds cooldown{24 * 3600};
  int delivery_attempts = 3;
  std::chrono::milliseconds backoff_base{500};
  std::vector<std::string> authority_recipients;
  std::vector<std::string> escalation_recipients;
};

/// Warranty covers the whole of its end date (UTC).
bool warranty_active(const ContractMetadata& c, UtcInstant now);

/// Pure decision table over (density band, warranty, escalation flag).
/// `escalation_pending` is true when the segment currently sits in Yellow or
/// Red, i.e. a caution was raised and not yet cleared.
HealthState classify(double potholes_per_km, bool warranty_is_active, bool escalation_pending,
                     const GovernanceConfig& config = {});

struct HealthEvaluation {
  HealthState state;
  double density_per_km;
  /// Yellow turned Red because the warranty deadline passed unrepaired.
  bool deadline_breach;
};

/// Throws Error{ZeroLengthSegment}.
HealthEvaluation evaluate_health(const RoadSegment& segment, std::int64_t active_count,
                                 UtcInstant now, const GovernanceConfig& config = {});

enum class AlertKind { Escalation, Improvement, DeadlineBreach, Manual };
enum class DeliveryStatus { Pending, Sent, Failed };

std::string_view to_string(AlertKind k) noexcept;
std::optional<AlertKind> alert_kind_from_string(std::string_view s) noexcept;
std::string_view to_string(DeliveryStatus s) noexcept;
std::optional<DeliveryStatus> delivery_status_from_string(std::string_view s) noexcept;

struct AlertEvent {
  std::int64_t id = 0;
  std::int64_t segment_id = 0;
  AlertKind kind = AlertKind::Escalation;
  HealthState from = HealthState::Green;
  HealthState to = HealthState::Green;
  std::vector<std::string> recipients;
  UtcInstant created_at;
  DeliveryStatus delivery_status = DeliveryStatus::Pending;
  std::string idempotency_key;
  int attempts = 0;
  std::string contractor;
  std::string message;

  /// "green->yellow", "deadline_breach" or "manual".
  std::string transition() const;

  friend bool operator==(const AlertEvent&, const AlertEvent&) = default;
};

void to_json(nlohmann::json& j, const AlertEvent& e);

/// Hash of (segment, transition, day bucket).
std::string idempotency_key(std::int64_t segment_id, std::string_view transition, UtcInstant now,
                            std::chrono::seconds bucket = std::chrono::seconds{24 * 3600});

/// Returns the alert for a health transition, or nothing when an event with
/// the same idempotency key already exists. Worsening to Yellow/Orange goes
/// to the contractor and authorities; any move to Red adds the escalation
/// list; improvements inform the authorities only.
std::vector<AlertEvent> on_state_change(const RoadSegment& segment, HealthState old_state,
                                        HealthState new_state, bool deadline_breach,
                                        UtcInstant now, const GovernanceConfig& config,
                                        const std::function<bool(const std::string&)>& key_exists);

struct Traversal {
  GpsTrack track;
  UtcInstant window_start;
  UtcInstant window_end;
  std::int64_t batch_id = 0;

  explicit Traversal(GpsTrack t, std::int64_t batch = 0)
      : track(std::move(t)), window_start(track.start()), window_end(track.end()), batch_id(batch) {}
};

/// 1 Hz samples along the traversal. Legs longer than `max_gap` are not
/// sampled in their interior.
std::vector<LatLon> sample_traversal(const Traversal& traversal, std::chrono::milliseconds max_gap);

/// Active potholes covered by the traversal (a sample within the coverage
/// radius) and not re-observed within `cluster_threshold_m` by the batch.
std::vector<std::int64_t> verify_repairs(const Traversal& traversal,
                                         std::span<const Observation> batch_observations,
                                         std::span<const Pothole> potholes,
                                         const GovernanceConfig& config,
                                         std::chrono::milliseconds max_gap = std::chrono::milliseconds{5000},
                                         double cluster_threshold_m = kClusterThresholdM);

/// Outbound notification channel.
class NotificationSink {
 public:
  virtual ~NotificationSink() = default;
  /// Returns the HTTP status. Throws Error{SinkUnreachable} on transport failure.
  virtual int deliver(const nlohmann::json& body) = 0;
};

/// POSTs JSON to a webhook, optionally with a bearer token.
class WebhookSink final : public NotificationSink {
 public:
  WebhookSink(std::string url, std::string bearer_token = {}, int timeout_seconds = 5);
  int deliver(const nlohmann::json& body) override;

 private:
  std::string url_;
  std::string token_;
  int timeout_seconds_;
};

nlohmann::json webhook_payload(const AlertEvent& event);

using SleepFn = std::function<void(std::chrono::milliseconds)>;

/// Delivers a Pending event with up to `delivery_attempts` tries and
/// exponential backoff. Sent events are returned unchanged.
AlertEvent dispatch_alert(AlertEvent event, NotificationSink& sink, const GovernanceConfig& config,
                          const SleepFn& sleep = {});

}  // namespace roadwatch
