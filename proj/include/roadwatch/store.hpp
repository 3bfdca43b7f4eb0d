#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "roadwatch/dedupe.hpp"
#include "roadwatch/detection.hpp"
#include "roadwatch/governance.hpp"
#include "roadwatch/segment.hpp"

struct sqlite3;

namespace roadwatch {

enum class Role { Authority, Admin };

std::string_view to_string(Role r) noexcept;
std::optional<Role> role_from_string(std::string_view s) noexcept;

struct AuthorityAccount {
  std::int64_t id = 0;
  std::string username;
  std::string password_digest;
  Role role = Role::Authority;
};

struct Session {
  std::string token_hash;
  std::int64_t account_id = 0;
  UtcInstant expires_at;
};

struct AuditRecord {
  std::int64_t id = 0;
  std::string actor;
  std::string action;
  std::string subject;
  UtcInstant at;
  nlohmann::json detail;
};

void to_json(nlohmann::json& j, const AuditRecord& r);

struct IngestBatch {
  std::int64_t id = 0;
  UtcInstant uploaded_at;
  std::string detections_digest;
  std::string gps_digest;
  IngestStats stats;
  nlohmann::json summary;  // pipeline counts beyond the geotag statistics
};

struct BBox {
  double min_lat, min_lon, max_lat, max_lon;

  /// Throws Error{MalformedBBox} unless ordered and within coordinate range.
  void validate() const;
  bool contains(const LatLon& p) const {
    return p.lat >= min_lat && p.lat <= max_lat && p.lon >= min_lon && p.lon <= max_lon;
  }
};

/// Parses "min_lat,min_lon,max_lat,max_lon". Throws Error{MalformedBBox}.
BBox parse_bbox(std::string_view text);

struct PotholeQuery {
  std::optional<BBox> bbox;
  std::optional<PotholeStatus> status;
  std::optional<UtcInstant> from;  // inclusive, on last_seen
  std::optional<UtcInstant> to;    // inclusive, on last_seen
  std::optional<std::string> category;
};

/// Embedded SQLite persistence for every entity plus an append-only audit
/// trail. Each mutator appends its audit record in the same statement batch.
/// All methods are serialized on one connection; write() groups calls into a
/// single IMMEDIATE transaction.
class Store {
 public:
  using Clock = std::function<UtcInstant()>;

  /// `path` may be ":memory:".
  explicit Store(const std::string& path, Clock clock = {});
  ~Store();
  Store(const Store&) = delete;
  Store& operator=(const Store&) = delete;

  void set_clock(Clock clock);
  UtcInstant now() const;
  int schema_version() const;

  /// Runs `fn` inside one transaction; any exception rolls everything back.
  template <typename Fn>
  decltype(auto) write(Fn&& fn) {
    std::lock_guard lock(mutex_);
    begin();
    try {
      if constexpr (std::is_void_v<decltype(fn())>) {
        fn();
        commit();
      } else {
        decltype(auto) out = fn();
        commit();
        return out;
      }
    } catch (...) {
      rollback();
      throw;
    }
  }

  // Accounts and sessions.
  AuthorityAccount create_account(const std::string& username, const std::string& digest, Role role,
                                  const std::string& actor);
  std::optional<AuthorityAccount> find_account(const std::string& username) const;
  std::optional<AuthorityAccount> get_account(std::int64_t id) const;
  void put_session(const Session& s, const std::string& actor);
  std::optional<Session> find_session(const std::string& token_hash) const;

  // Potholes.
  std::int64_t next_pothole_id() const;
  /// Inserts with the id already set on `p` (id 0 allocates the next one).
  /// A zero version starts at 1.
  Pothole insert_pothole(Pothole p, const std::string& actor);
  /// Optimistic update: `p.version` must match the stored version.
  /// Throws Error{NotFound} or Error{ConflictingWrite}. Returns the stored state.
  Pothole update_pothole(const Pothole& p, const std::string& actor, const std::string& action = "pothole.update",
                         const nlohmann::json& detail = nullptr);
  Pothole get_pothole(std::int64_t id) const;
  std::vector<Pothole> all_potholes() const;
  std::vector<Pothole> query_potholes(const PotholeQuery& q) const;

  // Segments.
  RoadSegment insert_segment(RoadSegment s, const std::string& actor);
  RoadSegment update_segment(const RoadSegment& s, const std::string& actor,
                             const std::string& action = "segment.update");
  /// Removes the segment and clears segment_id on its potholes in the same
  /// transaction.
  void delete_segment(std::int64_t id, const std::string& actor);
  RoadSegment get_segment(std::int64_t id) const;
  std::optional<RoadSegment> find_segment(std::int64_t id) const;
  std::vector<RoadSegment> all_segments() const;

  // Alerts.
  AlertEvent insert_alert(AlertEvent e, const std::string& actor);
  AlertEvent update_alert(const AlertEvent& e, const std::string& actor);
  AlertEvent get_alert(std::int64_t id) const;
  /// True when a Pending or Sent event carries `key`.
  bool alert_key_live(const std::string& key) const;
  std::vector<AlertEvent> alerts_for_segment(std::int64_t segment_id, std::size_t limit = 0) const;
  std::vector<AlertEvent> pending_alerts() const;
  std::vector<AlertEvent> all_alerts() const;

  // Ingest batches.
  IngestBatch insert_batch(IngestBatch b, const std::string& actor);
  std::vector<IngestBatch> all_batches() const;

  // Audit.
  std::int64_t append_audit(const std::string& actor, const std::string& action,
                            const std::string& subject, const nlohmann::json& detail = nullptr);
  std::vector<AuditRecord> audit_records(std::int64_t after_id = 0) const;
  /// One JSON object per line.
  std::string export_audit_jsonl() const;

  /// Bulk insert preserving ids and versions (GeoJSON re-import).
  void import_features(const std::vector<RoadSegment>& segments, const std::vector<Pothole>& potholes,
                       const std::string& actor);

  /// Canonical dump of domain state (potholes, segments, alerts, batches);
  /// excludes accounts, sessions and the audit trail.
  nlohmann::json snapshot() const;

 private:
  void migrate();
  void begin();
  void commit();
  void rollback();
  void exec(const char* sql);

  sqlite3* db_ = nullptr;
  int tx_depth_ = 0;
  Clock clock_;
  mutable std::recursive_mutex mutex_;
};

}  // namespace roadwatch
