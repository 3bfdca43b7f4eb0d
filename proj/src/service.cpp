#include "roadwatch/service.hpp"

#include <algorithm>
#include <map>
#include <mutex>
#include <set>

#include "roadwatch/crypto.hpp"
#include "roadwatch/error.hpp"

namespace roadwatch {

using nlohmann::json;

namespace {

const std::string kSystem = "system";

std::mutex& dispatch_mutex() {
  static std::mutex m;
  return m;
}

std::vector<std::int64_t> sorted_unique(std::vector<std::int64_t> ids) {
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

}  // namespace

json IngestReport::statistics() const {
  json j = stats;
  j["clusters"] = clusters;
  j["potholes_created"] = potholes_created;
  j["potholes_merged"] = potholes_merged;
  j["potholes_reopened"] = potholes_reopened;
  j["potholes_repaired"] = potholes_repaired;
  j["alerts"] = alert_ids.size();
  return j;
}

Service::Service(Store& store, Config config, std::unique_ptr<RoutingProvider> router,
                 std::unique_ptr<NotificationSink> sink)
    : store_(store), config_(std::move(config)), router_(std::move(router)), sink_(std::move(sink)) {
  config_.validate();
  if (config_.fixed_now) {
    const UtcInstant fixed = *config_.fixed_now;
    store_.set_clock([fixed] { return fixed; });
  }
}

Service Service::from_config(Store& store, const Config& config) {
  std::unique_ptr<RoutingProvider> router;
  if (!config.routing_url.empty()) router = std::make_unique<OsrmRouter>(config.routing_url);
  std::unique_ptr<NotificationSink> sink;
  if (!config.webhook_url.empty()) sink = std::make_unique<WebhookSink>(config.webhook_url, config.webhook_token);
  return Service(store, config, std::move(router), std::move(sink));
}

// ------------------------------------------------------------------ ingest

IngestReport Service::ingest(std::string_view detections_jsonl, std::string_view gps_csv, const std::string& actor,
                             std::optional<ClockOffset> offset) {
  const GpsTrack track = parse_gps_log(gps_csv);
  const auto records = parse_detections(detections_jsonl);
  const auto geotagged = geotag_batch(records, track, offset.value_or(config_.offset), config_.detection);
  const auto clusters = cluster(geotagged.observations, config_.cluster_threshold_m);

  IngestReport report;
  report.stats = geotagged.stats;
  report.clusters = static_cast<std::int64_t>(clusters.size());

  const std::string detections_digest = crypto::sha256_hex(detections_jsonl);
  const std::string gps_digest = crypto::sha256_hex(gps_csv);

  store_.write([&] {
    const auto segments = store_.all_segments();
    std::map<std::int64_t, Pothole> state;
    std::map<std::int64_t, Pothole> original;
    for (auto& p : store_.all_potholes()) {
      original.emplace(p.id, p);
      state.emplace(p.id, std::move(p));
    }

    std::vector<Pothole> existing;
    existing.reserve(state.size());
    for (const auto& [_, p] : state) existing.push_back(p);
    const auto merged = merge_into_registry(clusters, std::move(existing), store_.next_pothole_id(),
                                            config_.cluster_threshold_m);

    std::map<std::int64_t, RegistryMutation::Kind> touched;
    for (const auto& m : merged.mutations) {
      touched.emplace(m.pothole.id, m.kind);  // first kind wins
      state[m.pothole.id] = m.pothole;
    }
    for (const auto& [id, kind] : touched) {
      Pothole& p = state[id];
      const auto hit = attribute_pothole(p, segments, config_.attribution_radius_m);
      p.segment_id = hit ? std::optional<std::int64_t>(hit->segment_id) : std::nullopt;
      switch (kind) {
        case RegistryMutation::Kind::Created: ++report.potholes_created; break;
        case RegistryMutation::Kind::Merged: ++report.potholes_merged; break;
        case RegistryMutation::Kind::Reopened: ++report.potholes_reopened; break;
      }
    }

    // Merge runs first: anything touched by this batch was re-observed.
    std::vector<Pothole> candidates;
    for (const auto& [id, p] : state) {
      if (!touched.count(id)) candidates.push_back(p);
    }
    const Traversal traversal(track);
    const auto resolved = verify_repairs(traversal, geotagged.observations, candidates, config_.governance,
                                         config_.detection.locate.max_gap, config_.cluster_threshold_m);
    report.potholes_repaired = static_cast<std::int64_t>(resolved.size());

    IngestBatch batch;
    batch.uploaded_at = store_.now();
    batch.detections_digest = detections_digest;
    batch.gps_digest = gps_digest;
    batch.stats = report.stats;
    batch.summary = json{{"clusters", report.clusters},
                         {"potholes_created", report.potholes_created},
                         {"potholes_merged", report.potholes_merged},
                         {"potholes_reopened", report.potholes_reopened},
                         {"potholes_repaired", report.potholes_repaired}};
    report.batch_id = store_.insert_batch(std::move(batch), actor).id;
    const json provenance{{"batch_id", report.batch_id}};

    std::vector<std::int64_t> affected;
    auto note_segments = [&](std::int64_t id) {
      if (auto it = original.find(id); it != original.end() && it->second.segment_id) {
        affected.push_back(*it->second.segment_id);
      }
      if (state[id].segment_id) affected.push_back(*state[id].segment_id);
    };

    for (const auto& [id, kind] : touched) {
      note_segments(id);
      const Pothole& p = state[id];
      if (kind == RegistryMutation::Kind::Created) {
        store_.insert_pothole(p, kSystem);
      } else {
        store_.update_pothole(p, kSystem,
                              kind == RegistryMutation::Kind::Merged ? "pothole.merge" : "pothole.reopen",
                              provenance);
      }
    }
    for (const std::int64_t id : resolved) {
      Pothole& p = state[id];
      p.status = PotholeStatus::Repaired;
      note_segments(id);
      store_.update_pothole(p, kSystem, "pothole.repair", provenance);
    }

    report.alert_ids = evaluate_segments(std::move(affected));
  });

  dispatch(report.alert_ids);
  return report;
}

// ------------------------------------------------------------ attribution

std::vector<std::int64_t> Service::reattribute() {
  const auto segments = store_.all_segments();
  std::vector<std::int64_t> changed;
  for (auto p : store_.all_potholes()) {
    const auto hit = attribute_pothole(p, segments, config_.attribution_radius_m);
    const std::optional<std::int64_t> next = hit ? std::optional<std::int64_t>(hit->segment_id) : std::nullopt;
    if (next == p.segment_id) continue;
    if (p.segment_id) changed.push_back(*p.segment_id);
    if (next) changed.push_back(*next);
    json detail{{"previous_segment_id", p.segment_id ? json(*p.segment_id) : json(nullptr)}};
    p.segment_id = next;
    store_.update_pothole(p, kSystem, "pothole.attribute", detail);
  }
  return changed;
}

std::vector<std::int64_t> Service::evaluate_segments(std::vector<std::int64_t> segment_ids, std::int64_t* changed) {
  segment_ids = sorted_unique(std::move(segment_ids));
  if (segment_ids.empty()) return {};
  std::map<std::int64_t, std::int64_t> active;
  for (const auto& p : store_.all_potholes()) {
    if (p.segment_id && p.status == PotholeStatus::Active) ++active[*p.segment_id];
  }
  const UtcInstant now = store_.now();
  std::vector<std::int64_t> alert_ids;
  std::set<std::string> fresh_keys;
  auto key_exists = [&](const std::string& key) { return fresh_keys.count(key) > 0 || store_.alert_key_live(key); };

  for (const std::int64_t id : segment_ids) {
    auto segment = store_.find_segment(id);
    if (!segment) continue;
    const auto eval = evaluate_health(*segment, active[id], now, config_.governance);
    if (eval.state == segment->health) continue;
    if (changed) ++*changed;
    const auto events =
        on_state_change(*segment, segment->health, eval.state, eval.deadline_breach, now, config_.governance, key_exists);
    segment->health = eval.state;
    store_.update_segment(*segment, kSystem, "segment.health");
    for (const auto& e : events) {
      fresh_keys.insert(e.idempotency_key);
      alert_ids.push_back(store_.insert_alert(e, kSystem).id);
    }
  }
  return alert_ids;
}

// --------------------------------------------------------------- segments

RoadSegment Service::preview_segment(const SegmentRequest& request) const {
  RoadSegment s;
  s.start = request.start;
  s.end = request.end;
  s.mode = request.mode;
  s.geometry = build_geometry(request.start, request.end, request.mode, request.fallback, router_.get());
  s.length_m = polyline_length_m(s.geometry);
  s.contract = request.contract;
  s.category = request.category;
  s.health = HealthState::Green;
  return s;
}

RoadSegment Service::create_segment(const SegmentRequest& request, const std::string& actor) {
  validate(request.contract);
  RoadSegment s = preview_segment(request);
  s.created_by = actor;

  std::vector<std::int64_t> alerts;
  const RoadSegment created = store_.write([&] {
    const RoadSegment inserted = store_.insert_segment(s, actor);
    auto touched = reattribute();
    touched.push_back(inserted.id);
    alerts = evaluate_segments(std::move(touched));
    return store_.get_segment(inserted.id);
  });
  dispatch(alerts);
  return created;
}

RoadSegment Service::edit_segment(std::int64_t id, const SegmentEdit& edit, const std::string& actor) {
  RoadSegment s = store_.get_segment(id);
  const LatLon start = edit.start.value_or(s.start);
  const LatLon end = edit.end.value_or(s.end);
  if (!(start == s.start) || !(end == s.end)) {
    s.geometry = build_geometry(start, end, s.mode, edit.fallback, router_.get());
    s.start = start;
    s.end = end;
    s.length_m = polyline_length_m(s.geometry);
  }
  if (edit.contract) {
    validate(*edit.contract);
    s.contract = *edit.contract;
  }
  if (edit.category) s.category = edit.category->empty() ? std::nullopt : edit.category;

  std::vector<std::int64_t> alerts;
  const RoadSegment updated = store_.write([&] {
    store_.update_segment(s, actor);
    auto touched = reattribute();
    touched.push_back(id);
    alerts = evaluate_segments(std::move(touched));
    return store_.get_segment(id);
  });
  dispatch(alerts);
  return updated;
}

void Service::delete_segment(std::int64_t id, const std::string& actor) {
  std::vector<std::int64_t> alerts;
  store_.write([&] {
    store_.delete_segment(id, actor);
    alerts = evaluate_segments(reattribute());
  });
  dispatch(alerts);
}

TickReport Service::tick(const std::string& actor) {
  TickReport report;
  store_.write([&] {
    std::vector<std::int64_t> ids;
    for (const auto& s : store_.all_segments()) ids.push_back(s.id);
    report.evaluated = static_cast<std::int64_t>(ids.size());
    report.alert_ids = evaluate_segments(std::move(ids), &report.changed);
    store_.append_audit(actor, "governance.tick", "segments",
                        json{{"evaluated", report.evaluated},
                             {"changed", report.changed},
                             {"alerts", report.alert_ids.size()}});
  });
  dispatch(report.alert_ids);
  return report;
}

// ----------------------------------------------------------------- report

json Service::report(std::int64_t segment_id, bool include_private) const {
  const RoadSegment s = store_.get_segment(segment_id);
  std::int64_t active = 0, repaired = 0;
  for (const auto& p : store_.all_potholes()) {
    if (p.segment_id != segment_id) continue;
    (p.status == PotholeStatus::Active ? active : repaired) += 1;
  }
  const UtcInstant now = store_.now();
  const bool warranty = warranty_active(s.contract, now);
  const auto today = std::chrono::floor<std::chrono::days>(now);
  const auto days_left = (std::chrono::sys_days{s.contract.warranty_end} - today).count();

  json contract{{"contractor_name", s.contract.contractor_name},
                {"construction_date", format_date(s.contract.construction_date)},
                {"budget", s.contract.budget},
                {"warranty_end", format_date(s.contract.warranty_end)}};
  if (include_private) contract["contractor_contact"] = s.contract.contractor_contact;

  json events = json::array();
  for (const auto& e : store_.alerts_for_segment(segment_id, 10)) {
    json j = e;
    if (!include_private) j.erase("recipients");
    events.push_back(std::move(j));
  }
  return json{{"segment_id", s.id},
              {"health", to_string(s.health)},
              {"density_per_km", double(active) / (s.length_m / 1000.0)},
              {"active_count", active},
              {"repaired_count", repaired},
              {"length_m", s.length_m},
              {"warranty_status", warranty ? "active" : "expired"},
              {"days_to_deadline", days_left},
              {"category", s.category ? json(*s.category) : json(nullptr)},
              {"contract", std::move(contract)},
              {"recent_events", std::move(events)}};
}

// ----------------------------------------------------------------- alerts

AlertEvent Service::notify(std::int64_t segment_id, const std::string& message, const std::string& actor) {
  const RoadSegment s = store_.get_segment(segment_id);
  AlertEvent e;
  e.segment_id = s.id;
  e.kind = AlertKind::Manual;
  e.from = s.health;
  e.to = s.health;
  e.created_at = store_.now();
  e.contractor = s.contract.contractor_name;
  e.recipients.push_back(s.contract.contractor_contact);
  for (const auto& r : config_.governance.authority_recipients) {
    if (std::find(e.recipients.begin(), e.recipients.end(), r) == e.recipients.end()) e.recipients.push_back(r);
  }
  e.message = message.empty() ? "segment " + std::to_string(s.id) + " (" + s.contract.contractor_name +
                                    ") requires attention: health " + std::string(to_string(s.health))
                              : message;
  e.idempotency_key = crypto::sha256_hex("manual|" + std::to_string(s.id) + "|" + crypto::random_hex(16));
  const AlertEvent stored = store_.insert_alert(e, actor);
  auto delivered = dispatch({stored.id});
  return delivered.empty() ? stored : delivered.front();
}

std::vector<AlertEvent> Service::dispatch(const std::vector<std::int64_t>& alert_ids) {
  std::lock_guard lock(dispatch_mutex());
  std::vector<AlertEvent> events;
  if (alert_ids.empty()) {
    events = store_.pending_alerts();
  } else {
    for (const auto id : alert_ids) events.push_back(store_.get_alert(id));
  }
  if (!sink_) return events;
  for (auto& e : events) {
    if (e.delivery_status == DeliveryStatus::Sent) continue;
    e = store_.update_alert(dispatch_alert(e, *sink_, config_.governance, sleep_), kSystem);
  }
  return events;
}

// ------------------------------------------------------------------- auth

LoginResult Service::login(const std::string& username, const std::string& password) {
  static std::once_flag once;
  static std::string dummy;
  std::call_once(once, [&] { dummy = crypto::hash_password(crypto::random_hex(16), config_.password_strength); });

  const auto account = store_.find_account(username);
  // Unknown users still pay for one verification so timing does not leak.
  const bool ok = crypto::verify_password(account ? account->password_digest : dummy, password) && account;
  if (!ok) throw Error(ErrorCode::Unauthorized, "invalid credentials");

  LoginResult result;
  result.token = crypto::random_hex(32);
  result.expires_at = store_.now() + config_.session_ttl;
  store_.put_session(Session{crypto::sha256_hex(result.token), account->id, result.expires_at}, account->username);
  return result;
}

AuthorityAccount Service::authenticate(const std::string& token) const {
  if (token.empty()) throw Error(ErrorCode::Unauthorized, "missing bearer token");
  const auto session = store_.find_session(crypto::sha256_hex(token));
  if (!session || session->expires_at <= store_.now()) {
    throw Error(ErrorCode::Unauthorized, "invalid or expired token");
  }
  auto account = store_.get_account(session->account_id);
  if (!account) throw Error(ErrorCode::Unauthorized, "account no longer exists");
  return *account;
}

AuthorityAccount Service::create_account(const std::string& username, const std::string& password, Role role,
                                         const std::string& actor) {
  if (password.size() < 8) throw Error(ErrorCode::InvalidArgument, "password must be at least 8 characters");
  return store_.create_account(username, crypto::hash_password(password, config_.password_strength), role, actor);
}

}  // namespace roadwatch
