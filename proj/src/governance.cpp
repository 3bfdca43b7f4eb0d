#include "roadwatch/governance.hpp"

#include <httplib.h>

#include <algorithm>
#include <nlohmann/json.hpp>
#include <thread>

#include "http_util.hpp"
#include "roadwatch/crypto.hpp"
#include "roadwatch/error.hpp"

namespace roadwatch {

using nlohmann::json;

bool warranty_active(const ContractMetadata& c, UtcInstant now) {
  return now < end_of_day(c.warranty_end);
}

HealthState classify(double potholes_per_km, bool warranty_is_active, bool escalation_pending,
                     const GovernanceConfig& config) {
  if (potholes_per_km < config.warn_per_km) return HealthState::Green;
  if (potholes_per_km >= config.severe_per_km) return HealthState::Red;
  if (warranty_is_active) return HealthState::Yellow;
  return escalation_pending ? HealthState::Red : HealthState::Orange;
}

HealthEvaluation evaluate_health(const RoadSegment& segment, std::int64_t active_count,
                                 UtcInstant now, const GovernanceConfig& config) {
  if (!(segment.length_m > 0.0)) {
    throw Error(ErrorCode::ZeroLengthSegment, "segment " + std::to_string(segment.id) + " has zero length");
  }
  const double density = double(active_count) / (segment.length_m / 1000.0);
  const bool active = warranty_active(segment.contract, now);
  const bool pending = segment.health == HealthState::Yellow || segment.health == HealthState::Red;
  const HealthState state = classify(density, active, pending, config);
  const bool breach = state == HealthState::Red && segment.health == HealthState::Yellow &&
                      density < config.severe_per_km && !active;
  return {state, density, breach};
}

std::string_view to_string(AlertKind k) noexcept {
  switch (k) {
    case AlertKind::Escalation: return "escalation";
    case AlertKind::Improvement: return "improvement";
    case AlertKind::DeadlineBreach: return "deadline_breach";
    case AlertKind::Manual: return "manual";
  }
  return "escalation";
}

std::optional<AlertKind> alert_kind_from_string(std::string_view s) noexcept {
  if (s == "escalation") return AlertKind::Escalation;
  if (s == "improvement") return AlertKind::Improvement;
  if (s == "deadline_breach") return AlertKind::DeadlineBreach;
  if (s == "manual") return AlertKind::Manual;
  return std::nullopt;
}

std::string_view to_string(DeliveryStatus s) noexcept {
  switch (s) {
    case DeliveryStatus::Pending: return "pending";
    case DeliveryStatus::Sent: return "sent";
    case DeliveryStatus::Failed: return "failed";
  }
  return "pending";
}

std::optional<DeliveryStatus> delivery_status_from_string(std::string_view s) noexcept {
  if (s == "pending") return DeliveryStatus::Pending;
  if (s == "sent") return DeliveryStatus::Sent;
  if (s == "failed") return DeliveryStatus::Failed;
  return std::nullopt;
}

std::string AlertEvent::transition() const {
  if (kind == AlertKind::DeadlineBreach) return "deadline_breach";
  if (kind == AlertKind::Manual) return "manual";
  return std::string(to_string(from)) + "->" + std::string(to_string(to));
}

void to_json(json& j, const AlertEvent& e) {
  j = json{{"id", e.id},
           {"segment_id", e.segment_id},
           {"kind", to_string(e.kind)},
           {"transition", e.transition()},
           {"from", to_string(e.from)},
           {"to", to_string(e.to)},
           {"recipients", e.recipients},
           {"created_at", format_iso(e.created_at)},
           {"delivery_status", to_string(e.delivery_status)},
           {"idempotency_key", e.idempotency_key},
           {"attempts", e.attempts},
           {"contractor", e.contractor},
           {"message", e.message}};
}

std::string idempotency_key(std::int64_t segment_id, std::string_view transition, UtcInstant now,
                            std::chrono::seconds bucket) {
  const auto day = now.time_since_epoch() / bucket;
  return crypto::sha256_hex(std::to_string(segment_id) + "|" + std::string(transition) + "|" +
                            std::to_string(day));
}

namespace {

void append_unique(std::vector<std::string>& out, const std::vector<std::string>& more) {
  for (const auto& r : more) {
    if (!r.empty() && std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
  }
}

}  // namespace

std::vector<AlertEvent> on_state_change(const RoadSegment& segment, HealthState old_state,
                                        HealthState new_state, bool deadline_breach,
                                        UtcInstant now, const GovernanceConfig& config,
                                        const std::function<bool(const std::string&)>& key_exists) {
  if (old_state == new_state) return {};
  AlertEvent event;
  event.segment_id = segment.id;
  event.from = old_state;
  event.to = new_state;
  event.created_at = now;
  event.contractor = segment.contract.contractor_name;

  const std::string where = "segment " + std::to_string(segment.id) + " (" +
                            segment.contract.contractor_name + ")";
  if (new_state < old_state) {
    event.kind = AlertKind::Improvement;
    append_unique(event.recipients, config.authority_recipients);
    event.message = where + " improved from " + std::string(to_string(old_state)) + " to " +
                    std::string(to_string(new_state));
  } else {
    event.kind = deadline_breach ? AlertKind::DeadlineBreach : AlertKind::Escalation;
    append_unique(event.recipients, {segment.contract.contractor_contact});
    append_unique(event.recipients, config.authority_recipients);
    if (new_state == HealthState::Red) append_unique(event.recipients, config.escalation_recipients);
    event.message = deadline_breach
                        ? where + " is unrepaired past its warranty deadline " +
                              format_date(segment.contract.warranty_end) + "; escalated to red"
                        : where + " turned " + std::string(to_string(new_state)) + " (was " +
                              std::string(to_string(old_state)) + ")";
  }
  event.idempotency_key = idempotency_key(segment.id, event.transition(), now, config.cooldown);
  if (key_exists && key_exists(event.idempotency_key)) return {};
  return {std::move(event)};
}

std::vector<LatLon> sample_traversal(const Traversal& traversal, std::chrono::milliseconds max_gap) {
  std::vector<LatLon> samples;
  const auto& fixes = traversal.track.fixes();
  if (fixes.empty()) return samples;
  samples.push_back(fixes.front().position);
  for (std::size_t i = 1; i < fixes.size(); ++i) {
    const GpsFix& a = fixes[i - 1];
    const GpsFix& b = fixes[i];
    const auto gap = b.utc - a.utc;
    if (gap <= max_gap) {
      for (auto t = a.utc + std::chrono::seconds{1}; t < b.utc; t += std::chrono::seconds{1}) {
        const double f = double((t - a.utc).count()) / double(gap.count());
        samples.push_back({a.position.lat + f * (b.position.lat - a.position.lat),
                           a.position.lon + f * (b.position.lon - a.position.lon)});
      }
    }
    samples.push_back(b.position);
  }
  return samples;
}

std::vector<std::int64_t> verify_repairs(const Traversal& traversal,
                                         std::span<const Observation> batch_observations,
                                         std::span<const Pothole> potholes,
                                         const GovernanceConfig& config,
                                         std::chrono::milliseconds max_gap,
                                         double cluster_threshold_m) {
  const auto samples = sample_traversal(traversal, max_gap);
  std::vector<std::int64_t> resolved;
  for (const auto& p : potholes) {
    if (p.status != PotholeStatus::Active) continue;
    const bool covered = std::any_of(samples.begin(), samples.end(), [&](const LatLon& s) {
      return haversine_m(s, p.position) <= config.coverage_radius_m;
    });
    if (!covered) continue;
    const bool seen = std::any_of(batch_observations.begin(), batch_observations.end(),
                                  [&](const Observation& o) {
                                    return haversine_m(o.position, p.position) <= cluster_threshold_m;
                                  });
    if (!seen) resolved.push_back(p.id);
  }
  std::sort(resolved.begin(), resolved.end());
  return resolved;
}

WebhookSink::WebhookSink(std::string url, std::string bearer_token, int timeout_seconds)
    : url_(std::move(url)), token_(std::move(bearer_token)), timeout_seconds_(timeout_seconds) {}

int WebhookSink::deliver(const json& body) {
  const auto url = detail::split_url(url_);
  httplib::Client client(url.origin);
  client.set_connection_timeout(timeout_seconds_);
  client.set_read_timeout(timeout_seconds_);
  httplib::Headers headers;
  if (!token_.empty()) headers.emplace("Authorization", "Bearer " + token_);
  auto res = client.Post(url.path.empty() ? "/" : url.path, headers, body.dump(), "application/json");
  if (!res) {
    throw Error(ErrorCode::SinkUnreachable, "webhook " + url_ + ": " + httplib::to_string(res.error()));
  }
  return res->status;
}

json webhook_payload(const AlertEvent& event) {
  return json{{"event_id", event.id},
              {"segment_id", event.segment_id},
              {"transition", event.transition()},
              {"health", to_string(event.to)},
              {"contractor", event.contractor},
              {"message", event.message},
              {"created_at", format_iso(event.created_at)}};
}

AlertEvent dispatch_alert(AlertEvent event, NotificationSink& sink, const GovernanceConfig& config,
                          const SleepFn& sleep) {
  if (event.delivery_status == DeliveryStatus::Sent) return event;
  const json body = webhook_payload(event);
  auto backoff = config.backoff_base;
  for (int attempt = 0; attempt < config.delivery_attempts; ++attempt) {
    if (attempt > 0) {
      if (sleep) {
        sleep(backoff);
      } else {
        std::this_thread::sleep_for(backoff);
      }
      backoff *= 2;
    }
    ++event.attempts;
    int status = 0;
    try {
      status = sink.deliver(body);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::SinkUnreachable) throw;
    }
    if (status >= 200 && status < 300) {
      event.delivery_status = DeliveryStatus::Sent;
      return event;
    }
  }
  event.delivery_status = DeliveryStatus::Failed;
  return event;
}

}  // namespace roadwatch
