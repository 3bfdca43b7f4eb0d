#include "roadwatch/store.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <charconv>

#include "roadwatch/crypto.hpp"
#include "roadwatch/error.hpp"

namespace roadwatch {

using nlohmann::json;

std::string_view to_string(Role r) noexcept { return r == Role::Admin ? "admin" : "authority"; }

std::optional<Role> role_from_string(std::string_view s) noexcept {
  if (s == "authority") return Role::Authority;
  if (s == "admin") return Role::Admin;
  return std::nullopt;
}

void to_json(json& j, const AuditRecord& r) {
  j = json{{"id", r.id},
           {"actor", r.actor},
           {"action", r.action},
           {"subject", r.subject},
           {"at", format_iso(r.at)},
           {"detail", r.detail}};
}

void BBox::validate() const {
  const bool finite = std::isfinite(min_lat) && std::isfinite(min_lon) && std::isfinite(max_lat) &&
                      std::isfinite(max_lon);
  if (!finite || min_lat > max_lat || min_lon > max_lon || min_lat < -90 || max_lat > 90 ||
      min_lon < -180 || max_lon > 180) {
    throw Error(ErrorCode::MalformedBBox, "bbox must be min_lat,min_lon,max_lat,max_lon in order");
  }
}

BBox parse_bbox(std::string_view text) {
  double v[4];
  for (int i = 0; i < 4; ++i) {
    const auto comma = text.find(',');
    if ((i < 3) == (comma == std::string_view::npos)) {
      throw Error(ErrorCode::MalformedBBox, "bbox needs exactly four comma-separated numbers");
    }
    const auto field = text.substr(0, comma);
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v[i]);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size()) {
      throw Error(ErrorCode::MalformedBBox, "bbox field '" + std::string(field) + "' is not a number");
    }
    if (i < 3) text.remove_prefix(comma + 1);
  }
  BBox box{v[0], v[1], v[2], v[3]};
  box.validate();
  return box;
}

namespace {

constexpr std::size_t kThumbnailCap = 64 * 1024;

// Thin RAII statement wrapper. Bind indices are 1-based as in SQLite.
class Stmt {
 public:
  Stmt(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK) {
      throw Error(ErrorCode::Internal, std::string("prepare failed: ") + sqlite3_errmsg(db));
    }
  }
  ~Stmt() { sqlite3_finalize(stmt_); }
  Stmt(const Stmt&) = delete;
  Stmt& operator=(const Stmt&) = delete;

  Stmt& bind(int i, std::int64_t v) { return check(sqlite3_bind_int64(stmt_, i, v)); }
  Stmt& bind(int i, int v) { return check(sqlite3_bind_int64(stmt_, i, v)); }
  Stmt& bind(int i, double v) { return check(sqlite3_bind_double(stmt_, i, v)); }
  Stmt& bind(int i, std::string_view v) {
    return check(sqlite3_bind_text(stmt_, i, v.data(), int(v.size()), SQLITE_TRANSIENT));
  }
  Stmt& bind(int i, const std::string& v) { return bind(i, std::string_view(v)); }
  Stmt& bind(int i, const char* v) { return bind(i, std::string_view(v)); }
  Stmt& bind(int i, std::nullptr_t) { return check(sqlite3_bind_null(stmt_, i)); }
  template <typename T>
  Stmt& bind(int i, const std::optional<T>& v) {
    return v ? bind(i, *v) : bind(i, nullptr);
  }

  /// True while a row is available.
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    if (rc == SQLITE_CONSTRAINT) {
      throw Error(ErrorCode::ConflictingWrite, std::string("constraint violated: ") + sqlite3_errmsg(db_));
    }
    throw Error(ErrorCode::Internal, std::string("step failed: ") + sqlite3_errmsg(db_));
  }
  void run() { step(); }

  std::int64_t i64(int col) const { return sqlite3_column_int64(stmt_, col); }
  double f64(int col) const { return sqlite3_column_double(stmt_, col); }
  bool null(int col) const { return sqlite3_column_type(stmt_, col) == SQLITE_NULL; }
  std::string text(int col) const {
    const auto* p = sqlite3_column_text(stmt_, col);
    return p ? std::string(reinterpret_cast<const char*>(p), sqlite3_column_bytes(stmt_, col))
             : std::string{};
  }
  std::optional<std::string> opt_text(int col) const {
    if (null(col)) return std::nullopt;
    return text(col);
  }

 private:
  Stmt& check(int rc) {
    if (rc != SQLITE_OK) throw Error(ErrorCode::Internal, std::string("bind failed: ") + sqlite3_errmsg(db_));
    return *this;
  }

  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

// Versioned schema scripts; index + 1 is the user_version after applying.
const char* const kMigrations[] = {
    R"sql(
CREATE TABLE accounts (
  id INTEGER PRIMARY KEY,
  username TEXT NOT NULL UNIQUE,
  password_digest TEXT NOT NULL,
  role TEXT NOT NULL CHECK (role IN ('authority','admin'))
);
CREATE TABLE sessions (
  token_hash TEXT PRIMARY KEY,
  account_id INTEGER NOT NULL REFERENCES accounts(id),
  expires_at INTEGER NOT NULL
);
CREATE TABLE segments (
  id INTEGER PRIMARY KEY,
  start_lat REAL NOT NULL, start_lon REAL NOT NULL,
  end_lat REAL NOT NULL, end_lon REAL NOT NULL,
  mode TEXT NOT NULL,
  geometry TEXT NOT NULL,
  contractor_name TEXT NOT NULL,
  contractor_contact TEXT NOT NULL,
  construction_date TEXT NOT NULL,
  budget REAL NOT NULL CHECK (budget >= 0),
  warranty_end TEXT NOT NULL,
  health TEXT NOT NULL,
  length_m REAL NOT NULL,
  created_by TEXT NOT NULL,
  category TEXT,
  version INTEGER NOT NULL
);
CREATE TABLE potholes (
  id INTEGER PRIMARY KEY,
  lat REAL NOT NULL,
  lon REAL NOT NULL,
  severity TEXT NOT NULL,
  status TEXT NOT NULL CHECK (status IN ('active','repaired')),
  first_seen INTEGER NOT NULL,
  last_seen INTEGER NOT NULL,
  detection_count INTEGER NOT NULL CHECK (detection_count >= 1),
  thumbnail TEXT,
  segment_id INTEGER REFERENCES segments(id),
  version INTEGER NOT NULL,
  CHECK (first_seen <= last_seen)
);
CREATE INDEX potholes_segment ON potholes(segment_id);
CREATE INDEX potholes_position ON potholes(lat, lon);
CREATE TABLE alert_events (
  id INTEGER PRIMARY KEY,
  segment_id INTEGER NOT NULL,
  kind TEXT NOT NULL,
  from_health TEXT NOT NULL,
  to_health TEXT NOT NULL,
  recipients TEXT NOT NULL,
  created_at INTEGER NOT NULL,
  delivery_status TEXT NOT NULL,
  idempotency_key TEXT NOT NULL,
  attempts INTEGER NOT NULL,
  contractor TEXT NOT NULL,
  message TEXT NOT NULL
);
CREATE UNIQUE INDEX alert_events_live_key ON alert_events(idempotency_key)
  WHERE delivery_status != 'failed';
CREATE TABLE ingest_batches (
  id INTEGER PRIMARY KEY,
  uploaded_at INTEGER NOT NULL,
  detections_digest TEXT NOT NULL,
  gps_digest TEXT NOT NULL,
  stats TEXT NOT NULL,
  summary TEXT NOT NULL
);
CREATE TABLE audit (
  id INTEGER PRIMARY KEY AUTOINCREMENT,
  actor TEXT NOT NULL,
  action TEXT NOT NULL,
  subject TEXT NOT NULL,
  at INTEGER NOT NULL,
  detail TEXT NOT NULL
);
CREATE TRIGGER audit_no_update BEFORE UPDATE ON audit
  BEGIN SELECT RAISE(ABORT, 'audit trail is append-only'); END;
CREATE TRIGGER audit_no_delete BEFORE DELETE ON audit
  BEGIN SELECT RAISE(ABORT, 'audit trail is append-only'); END;
)sql",
};

std::string geometry_text(const Polyline& p) {
  json arr = json::array();
  for (const auto& v : p.vertices()) arr.push_back({v.lat, v.lon});
  return arr.dump();
}

Polyline geometry_from_text(const std::string& s) {
  std::vector<LatLon> vertices;
  for (const auto& v : json::parse(s)) vertices.push_back({v.at(0).get<double>(), v.at(1).get<double>()});
  return Polyline(std::move(vertices));
}

Date date_or_throw(const std::string& s) {
  auto d = parse_date(s);
  if (!d) throw Error(ErrorCode::Internal, "stored date '" + s + "' is corrupt");
  return *d;
}

constexpr const char* kPotholeColumns =
    "id, lat, lon, severity, status, first_seen, last_seen, detection_count, thumbnail, segment_id, version";

Pothole read_pothole(const Stmt& st) {
  Pothole p;
  p.id = st.i64(0);
  p.position = {st.f64(1), st.f64(2)};
  p.severity = severity_from_string(st.text(3)).value_or(Severity::Minor);
  p.status = status_from_string(st.text(4)).value_or(PotholeStatus::Active);
  p.first_seen = from_epoch_ms(st.i64(5));
  p.last_seen = from_epoch_ms(st.i64(6));
  p.detection_count = st.i64(7);
  p.thumbnail = st.opt_text(8);
  if (!st.null(9)) p.segment_id = st.i64(9);
  p.version = st.i64(10);
  return p;
}

constexpr const char* kSegmentColumns =
    "id, start_lat, start_lon, end_lat, end_lon, mode, geometry, contractor_name, contractor_contact, "
    "construction_date, budget, warranty_end, health, length_m, created_by, category, version";

RoadSegment read_segment(const Stmt& st) {
  RoadSegment s;
  s.id = st.i64(0);
  s.start = {st.f64(1), st.f64(2)};
  s.end = {st.f64(3), st.f64(4)};
  s.mode = mode_from_string(st.text(5)).value_or(SegmentMode::Straight);
  s.geometry = geometry_from_text(st.text(6));
  s.contract.contractor_name = st.text(7);
  s.contract.contractor_contact = st.text(8);
  s.contract.construction_date = date_or_throw(st.text(9));
  s.contract.budget = st.f64(10);
  s.contract.warranty_end = date_or_throw(st.text(11));
  s.health = health_from_string(st.text(12)).value_or(HealthState::Green);
  s.length_m = st.f64(13);
  s.created_by = st.text(14);
  s.category = st.opt_text(15);
  s.version = st.i64(16);
  return s;
}

constexpr const char* kAlertColumns =
    "id, segment_id, kind, from_health, to_health, recipients, created_at, delivery_status, "
    "idempotency_key, attempts, contractor, message";

AlertEvent read_alert(const Stmt& st) {
  AlertEvent e;
  e.id = st.i64(0);
  e.segment_id = st.i64(1);
  e.kind = alert_kind_from_string(st.text(2)).value_or(AlertKind::Escalation);
  e.from = health_from_string(st.text(3)).value_or(HealthState::Green);
  e.to = health_from_string(st.text(4)).value_or(HealthState::Green);
  e.recipients = json::parse(st.text(5)).get<std::vector<std::string>>();
  e.created_at = from_epoch_ms(st.i64(6));
  e.delivery_status = delivery_status_from_string(st.text(7)).value_or(DeliveryStatus::Pending);
  e.idempotency_key = st.text(8);
  e.attempts = static_cast<int>(st.i64(9));
  e.contractor = st.text(10);
  e.message = st.text(11);
  return e;
}

void check_pothole(const Pothole& p) {
  if (!valid_coordinate(p.position)) throw Error(ErrorCode::InvalidArgument, "pothole coordinate out of range");
  if (p.detection_count < 1) throw Error(ErrorCode::InvalidArgument, "detection_count must be >= 1");
  if (p.first_seen > p.last_seen) throw Error(ErrorCode::InvalidArgument, "first_seen after last_seen");
  if (p.thumbnail) {
    if (p.thumbnail->size() > kThumbnailCap) {
      throw Error(ErrorCode::InvalidArgument, "thumbnail exceeds 64 KiB of Base64");
    }
    if (!crypto::is_base64(*p.thumbnail)) throw Error(ErrorCode::InvalidArgument, "thumbnail is not Base64");
  }
}

json pothole_detail(const Pothole& p) {
  return json{{"lat", p.position.lat},
              {"lon", p.position.lon},
              {"severity", to_string(p.severity)},
              {"status", to_string(p.status)},
              {"detection_count", p.detection_count},
              {"segment_id", p.segment_id ? json(*p.segment_id) : json(nullptr)}};
}

json segment_detail(const RoadSegment& s) {
  return json{{"mode", to_string(s.mode)},
              {"vertices", s.geometry.size()},
              {"length_m", s.length_m},
              {"health", to_string(s.health)},
              {"contractor_name", s.contract.contractor_name},
              {"construction_date", format_date(s.contract.construction_date)},
              {"warranty_end", format_date(s.contract.warranty_end)},
              {"budget", s.contract.budget}};
}

}  // namespace

Store::Store(const std::string& path, Clock clock) : clock_(std::move(clock)) {
  if (sqlite3_open_v2(path.c_str(), &db_, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_NOMUTEX,
                      nullptr) != SQLITE_OK) {
    std::string msg = db_ ? sqlite3_errmsg(db_) : "out of memory";
    sqlite3_close(db_);
    db_ = nullptr;
    throw Error(ErrorCode::InvalidArgument, "cannot open store '" + path + "': " + msg);
  }
  sqlite3_busy_timeout(db_, 5000);
  exec("PRAGMA foreign_keys = ON");
  if (path != ":memory:") exec("PRAGMA journal_mode = WAL");
  migrate();
}

Store::~Store() { sqlite3_close(db_); }

void Store::set_clock(Clock clock) {
  std::lock_guard lock(mutex_);
  clock_ = std::move(clock);
}

UtcInstant Store::now() const {
  if (clock_) return clock_();
  return std::chrono::time_point_cast<Millis>(std::chrono::system_clock::now());
}

void Store::exec(const char* sql) {
  char* err = nullptr;
  if (sqlite3_exec(db_, sql, nullptr, nullptr, &err) != SQLITE_OK) {
    std::string msg = err ? err : "unknown";
    sqlite3_free(err);
    throw Error(ErrorCode::Internal, "sql failed: " + msg);
  }
}

int Store::schema_version() const {
  std::lock_guard lock(mutex_);
  Stmt st(db_, "PRAGMA user_version");
  st.step();
  return static_cast<int>(st.i64(0));
}

void Store::migrate() {
  const int current = schema_version();
  const int target = static_cast<int>(std::size(kMigrations));
  if (current > target) {
    throw Error(ErrorCode::InvalidArgument, "store schema v" + std::to_string(current) +
                                                " is newer than this build (v" + std::to_string(target) + ")");
  }
  for (int v = current; v < target; ++v) {
    write([&] {
      exec(kMigrations[v]);
      exec(("PRAGMA user_version = " + std::to_string(v + 1)).c_str());
    });
  }
}

void Store::begin() {
  if (tx_depth_ == 0) {
    exec("BEGIN IMMEDIATE");
  } else {
    exec(("SAVEPOINT sp" + std::to_string(tx_depth_)).c_str());
  }
  ++tx_depth_;
}

void Store::commit() {
  --tx_depth_;
  if (tx_depth_ == 0) {
    exec("COMMIT");
  } else {
    exec(("RELEASE sp" + std::to_string(tx_depth_)).c_str());
  }
}

void Store::rollback() {
  --tx_depth_;
  if (tx_depth_ == 0) {
    sqlite3_exec(db_, "ROLLBACK", nullptr, nullptr, nullptr);
  } else {
    const std::string sp = "sp" + std::to_string(tx_depth_);
    sqlite3_exec(db_, ("ROLLBACK TO " + sp + "; RELEASE " + sp).c_str(), nullptr, nullptr, nullptr);
  }
}

std::int64_t Store::append_audit(const std::string& actor, const std::string& action,
                                 const std::string& subject, const json& detail) {
  std::lock_guard lock(mutex_);
  Stmt st(db_, "INSERT INTO audit(actor, action, subject, at, detail) VALUES (?,?,?,?,?)");
  st.bind(1, actor).bind(2, action).bind(3, subject).bind(4, to_epoch_ms(now())).bind(5, detail.dump());
  st.run();
  return sqlite3_last_insert_rowid(db_);
}

std::vector<AuditRecord> Store::audit_records(std::int64_t after_id) const {
  std::lock_guard lock(mutex_);
  Stmt st(db_, "SELECT id, actor, action, subject, at, detail FROM audit WHERE id > ? ORDER BY id");
  st.bind(1, after_id);
  std::vector<AuditRecord> out;
  while (st.step()) {
    out.push_back({st.i64(0), st.text(1), st.text(2), st.text(3), from_epoch_ms(st.i64(4)),
                   json::parse(st.text(5))});
  }
  return out;
}

std::string Store::export_audit_jsonl() const {
  std::string out;
  for (const auto& r : audit_records()) {
    out += json(r).dump();
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------- accounts

AuthorityAccount Store::create_account(const std::string& username, const std::string& digest, Role role,
                                       const std::string& actor) {
  if (username.empty()) throw Error(ErrorCode::InvalidArgument, "username is required");
  return write([&] {
    if (find_account(username)) throw Error(ErrorCode::ConflictingWrite, "username '" + username + "' is taken");
    Stmt st(db_, "INSERT INTO accounts(username, password_digest, role) VALUES (?,?,?)");
    st.bind(1, username).bind(2, digest).bind(3, to_string(role));
    st.run();
    AuthorityAccount a{sqlite3_last_insert_rowid(db_), username, digest, role};
    append_audit(actor, "account.create", "account:" + std::to_string(a.id),
                 json{{"username", username}, {"role", to_string(role)}});
    return a;
  });
}

std::optional<AuthorityAccount> Store::find_account(const std::string& username) const {
  std::lock_guard lock(mutex_);
  Stmt st(db_, "SELECT id, username, password_digest, role FROM accounts WHERE username = ?");
  st.bind(1, username);
  if (!st.step()) return std::nullopt;
  return AuthorityAccount{st.i64(0), st.text(1), st.text(2), role_from_string(st.text(3)).value_or(Role::Authority)};
}

std::optional<AuthorityAccount> Store::get_account(std::int64_t id) const {
  std::lock_guard lock(mutex_);
  Stmt st(db_, "SELECT id, username, password_digest, role FROM accounts WHERE id = ?");
  st.bind(1, id);
  if (!st.step()) return std::nullopt;
  return AuthorityAccount{st.i64(0), st.text(1), st.text(2), role_from_string(st.text(3)).value_or(Role::Authority)};
}

void Store::put_session(const Session& s, const std::string& actor) {
  write([&] {
    Stmt purge(db_, "DELETE FROM sessions WHERE expires_at <= ?");
    purge.bind(1, to_epoch_ms(now()));
    purge.run();
    Stmt st(db_, "INSERT INTO sessions(token_hash, account_id, expires_at) VALUES (?,?,?)");
    st.bind(1, s.token_hash).bind(2, s.account_id).bind(3, to_epoch_ms(s.expires_at));
    st.run();
    append_audit(actor, "session.create", "account:" + std::to_string(s.account_id),
                 json{{"expires_at", format_iso(s.expires_at)}});
  });
}

std::optional<Session> Store::find_session(const std::string& token_hash) const {
  std::lock_guard lock(mutex_);
  Stmt st(db_, "SELECT token_hash, account_id, expires_at FROM sessions WHERE token_hash = ?");
  st.bind(1, token_hash);
  if (!st.step()) return std::nullopt;
  return Session{st.text(0), st.i64(1), from_epoch_ms(st.i64(2))};
}

// ---------------------------------------------------------------- potholes

std::int64_t Store::next_pothole_id() const {
  std::lock_guard lock(mutex_);
  Stmt st(db_, "SELECT COALESCE(MAX(id), 0) + 1 FROM potholes");
  st.step();
  return st.i64(0);
}

Pothole Store::insert_pothole(Pothole p, const std::string& actor) {
  check_pothole(p);
  return write([&] {
    if (p.id == 0) p.id = next_pothole_id();
    if (p.version == 0) p.version = 1;
    Stmt st(db_,
            "INSERT INTO potholes(id, lat, lon, severity, status, first_seen, last_seen, detection_count, "
            "thumbnail, segment_id, version) VALUES (?,?,?,?,?,?,?,?,?,?,?)");
    st.bind(1, p.id).bind(2, p.position.lat).bind(3, p.position.lon).bind(4, to_string(p.severity));
    st.bind(5, to_string(p.status)).bind(6, to_epoch_ms(p.first_seen)).bind(7, to_epoch_ms(p.last_seen));
    st.bind(8, p.detection_count).bind(9, p.thumbnail).bind(10, p.segment_id).bind(11, p.version);
    st.run();
    append_audit(actor, "pothole.create", "pothole:" + std::to_string(p.id), pothole_detail(p));
    return p;
  });
}

Pothole Store::update_pothole(const Pothole& p, const std::string& actor, const std::string& action,
                              const json& detail) {
  check_pothole(p);
  return write([&] {
    Stmt st(db_,
            "UPDATE potholes SET lat=?, lon=?, severity=?, status=?, first_seen=?, last_seen=?, "
            "detection_count=?, thumbnail=?, segment_id=?, version=version+1 WHERE id=? AND version=?");
    st.bind(1, p.position.lat).bind(2, p.position.lon).bind(3, to_string(p.severity));
    st.bind(4, to_string(p.status)).bind(5, to_epoch_ms(p.first_seen)).bind(6, to_epoch_ms(p.last_seen));
    st.bind(7, p.detection_count).bind(8, p.thumbnail).bind(9, p.segment_id).bind(10, p.id).bind(11, p.version);
    st.run();
    if (sqlite3_changes(db_) == 0) {
      get_pothole(p.id);  // NotFound if absent
      throw Error(ErrorCode::ConflictingWrite, "pothole " + std::to_string(p.id) + " was modified concurrently");
    }
    json d = pothole_detail(p);
    if (!detail.is_null()) d.update(detail);
    append_audit(actor, action, "pothole:" + std::to_string(p.id), d);
    Pothole stored = p;
    stored.version = p.version + 1;
    return stored;
  });
}

Pothole Store::get_pothole(std::int64_t id) const {
  std::lock_guard lock(mutex_);
  Stmt st(db_, (std::string("SELECT ") + kPotholeColumns + " FROM potholes WHERE id = ?").c_str());
  st.bind(1, id);
  if (!st.step()) throw Error(ErrorCode::NotFound, "pothole " + std::to_string(id) + " not found");
  return read_pothole(st);
}

std::vector<Pothole> Store::all_potholes() const { return query_potholes({}); }

std::vector<Pothole> Store::query_potholes(const PotholeQuery& q) const {
  if (q.bbox) q.bbox->validate();
  std::lock_guard lock(mutex_);
  std::string sql = std::string("SELECT ") + kPotholeColumns + " FROM potholes WHERE 1=1";
  if (q.bbox) sql += " AND lat >= ? AND lat <= ? AND lon >= ? AND lon <= ?";
  if (q.status) sql += " AND status = ?";
  if (q.from) sql += " AND last_seen >= ?";
  if (q.to) sql += " AND last_seen <= ?";
  if (q.category) sql += " AND segment_id IN (SELECT id FROM segments WHERE category = ?)";
  sql += " ORDER BY id";
  Stmt st(db_, sql.c_str());
  int i = 1;
  if (q.bbox) {
    for (double v : {q.bbox->min_lat, q.bbox->max_lat, q.bbox->min_lon, q.bbox->max_lon}) st.bind(i++, v);
  }
  if (q.status) st.bind(i++, to_string(*q.status));
  if (q.from) st.bind(i++, to_epoch_ms(*q.from));
  if (q.to) st.bind(i++, to_epoch_ms(*q.to));
  if (q.category) st.bind(i++, *q.category);
  std::vector<Pothole> out;
  while (st.step()) out.push_back(read_pothole(st));
  return out;
}

// ---------------------------------------------------------------- segments

RoadSegment Store::insert_segment(RoadSegment s, const std::string& actor) {
  validate(s.contract);
  return write([&] {
    if (s.id == 0) {
      Stmt next(db_, "SELECT COALESCE(MAX(id), 0) + 1 FROM segments");
      next.step();
      s.id = next.i64(0);
    }
    if (s.version == 0) s.version = 1;
    Stmt st(db_, (std::string("INSERT INTO segments(") + kSegmentColumns +
                  ") VALUES (?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?,?)").c_str());
    st.bind(1, s.id).bind(2, s.start.lat).bind(3, s.start.lon).bind(4, s.end.lat).bind(5, s.end.lon);
    st.bind(6, to_string(s.mode)).bind(7, geometry_text(s.geometry)).bind(8, s.contract.contractor_name);
    st.bind(9, s.contract.contractor_contact).bind(10, format_date(s.contract.construction_date));
    st.bind(11, s.contract.budget).bind(12, format_date(s.contract.warranty_end)).bind(13, to_string(s.health));
    st.bind(14, s.length_m).bind(15, s.created_by).bind(16, s.category).bind(17, s.version);
    st.run();
    append_audit(actor, "segment.create", "segment:" + std::to_string(s.id), segment_detail(s));
    return s;
  });
}

RoadSegment Store::update_segment(const RoadSegment& s, const std::string& actor, const std::string& action) {
  validate(s.contract);
  return write([&] {
    Stmt st(db_,
            "UPDATE segments SET start_lat=?, start_lon=?, end_lat=?, end_lon=?, mode=?, geometry=?, "
            "contractor_name=?, contractor_contact=?, construction_date=?, budget=?, warranty_end=?, health=?, "
            "length_m=?, created_by=?, category=?, version=version+1 WHERE id=? AND version=?");
    st.bind(1, s.start.lat).bind(2, s.start.lon).bind(3, s.end.lat).bind(4, s.end.lon);
    st.bind(5, to_string(s.mode)).bind(6, geometry_text(s.geometry)).bind(7, s.contract.contractor_name);
    st.bind(8, s.contract.contractor_contact).bind(9, format_date(s.contract.construction_date));
    st.bind(10, s.contract.budget).bind(11, format_date(s.contract.warranty_end)).bind(12, to_string(s.health));
    st.bind(13, s.length_m).bind(14, s.created_by).bind(15, s.category).bind(16, s.id).bind(17, s.version);
    st.run();
    if (sqlite3_changes(db_) == 0) {
      get_segment(s.id);
      throw Error(ErrorCode::ConflictingWrite, "segment " + std::to_string(s.id) + " was modified concurrently");
    }
    append_audit(actor, action, "segment:" + std::to_string(s.id), segment_detail(s));
    RoadSegment stored = s;
    stored.version = s.version + 1;
    return stored;
  });
}

void Store::delete_segment(std::int64_t id, const std::string& actor) {
  write([&] {
    const RoadSegment s = get_segment(id);
    std::vector<Pothole> attached;
    {
      Stmt st(db_, (std::string("SELECT ") + kPotholeColumns + " FROM potholes WHERE segment_id = ? ORDER BY id").c_str());
      st.bind(1, id);
      while (st.step()) attached.push_back(read_pothole(st));
    }
    for (auto p : attached) {
      p.segment_id.reset();
      update_pothole(p, "system", "pothole.unattribute", json{{"previous_segment_id", id}});
    }
    Stmt del(db_, "DELETE FROM segments WHERE id = ?");
    del.bind(1, id);
    del.run();
    append_audit(actor, "segment.delete", "segment:" + std::to_string(id), segment_detail(s));
  });
}

RoadSegment Store::get_segment(std::int64_t id) const {
  auto s = find_segment(id);
  if (!s) throw Error(ErrorCode::NotFound, "segment " + std::to_string(id) + " not found");
  return *s;
}

std::optional<RoadSegment> Store::find_segment(std::int64_t id) const {
  std::lock_guard lock(mutex_);
  Stmt st(db_, (std::string("SELECT ") + kSegmentColumns + " FROM segments WHERE id = ?").c_str());
  st.bind(1, id);
  if (!st.step()) return std::nullopt;
  return read_segment(st);
}

std::vector<RoadSegment> Store::all_segments() const {
  std::lock_guard lock(mutex_);
  Stmt st(db_, (std::string("SELECT ") + kSegmentColumns + " FROM segments ORDER BY id").c_str());
  std::vector<RoadSegment> out;
  while (st.step()) out.push_back(read_segment(st));
  return out;
}

// ---------------------------------------------------------------- alerts

AlertEvent Store::insert_alert(AlertEvent e, const std::string& actor) {
  return write([&] {
    Stmt st(db_,
            "INSERT INTO alert_events(segment_id, kind, from_health, to_health, recipients, created_at, "
            "delivery_status, idempotency_key, attempts, contractor, message) VALUES (?,?,?,?,?,?,?,?,?,?,?)");
    st.bind(1, e.segment_id).bind(2, to_string(e.kind)).bind(3, to_string(e.from)).bind(4, to_string(e.to));
    st.bind(5, json(e.recipients).dump()).bind(6, to_epoch_ms(e.created_at)).bind(7, to_string(e.delivery_status));
    st.bind(8, e.idempotency_key).bind(9, e.attempts).bind(10, e.contractor).bind(11, e.message);
    st.run();
    e.id = sqlite3_last_insert_rowid(db_);
    append_audit(actor, "alert.create", "alert:" + std::to_string(e.id),
                 json{{"segment_id", e.segment_id},
                      {"transition", e.transition()},
                      {"kind", to_string(e.kind)},
                      {"delivery_status", to_string(e.delivery_status)},
                      {"recipients", e.recipients.size()}});
    return e;
  });
}

AlertEvent Store::update_alert(const AlertEvent& e, const std::string& actor) {
  return write([&] {
    Stmt st(db_, "UPDATE alert_events SET delivery_status=?, attempts=? WHERE id=?");
    st.bind(1, to_string(e.delivery_status)).bind(2, e.attempts).bind(3, e.id);
    st.run();
    if (sqlite3_changes(db_) == 0) throw Error(ErrorCode::NotFound, "alert " + std::to_string(e.id) + " not found");
    append_audit(actor, "alert.dispatch", "alert:" + std::to_string(e.id),
                 json{{"delivery_status", to_string(e.delivery_status)}, {"attempts", e.attempts}});
    return get_alert(e.id);
  });
}

AlertEvent Store::get_alert(std::int64_t id) const {
  std::lock_guard lock(mutex_);
  Stmt st(db_, (std::string("SELECT ") + kAlertColumns + " FROM alert_events WHERE id = ?").c_str());
  st.bind(1, id);
  if (!st.step()) throw Error(ErrorCode::NotFound, "alert " + std::to_string(id) + " not found");
  return read_alert(st);
}

bool Store::alert_key_live(const std::string& key) const {
  std::lock_guard lock(mutex_);
  Stmt st(db_, "SELECT 1 FROM alert_events WHERE idempotency_key = ? AND delivery_status != 'failed'");
  st.bind(1, key);
  return st.step();
}

std::vector<AlertEvent> Store::alerts_for_segment(std::int64_t segment_id, std::size_t limit) const {
  std::lock_guard lock(mutex_);
  std::string sql = std::string("SELECT ") + kAlertColumns + " FROM alert_events WHERE segment_id = ? ORDER BY id DESC";
  if (limit > 0) sql += " LIMIT " + std::to_string(limit);
  Stmt st(db_, sql.c_str());
  st.bind(1, segment_id);
  std::vector<AlertEvent> out;
  while (st.step()) out.push_back(read_alert(st));
  return out;
}

std::vector<AlertEvent> Store::pending_alerts() const {
  std::lock_guard lock(mutex_);
  Stmt st(db_, (std::string("SELECT ") + kAlertColumns + " FROM alert_events WHERE delivery_status = 'pending' ORDER BY id").c_str());
  std::vector<AlertEvent> out;
  while (st.step()) out.push_back(read_alert(st));
  return out;
}

std::vector<AlertEvent> Store::all_alerts() const {
  std::lock_guard lock(mutex_);
  Stmt st(db_, (std::string("SELECT ") + kAlertColumns + " FROM alert_events ORDER BY id").c_str());
  std::vector<AlertEvent> out;
  while (st.step()) out.push_back(read_alert(st));
  return out;
}

// ---------------------------------------------------------------- batches

IngestBatch Store::insert_batch(IngestBatch b, const std::string& actor) {
  return write([&] {
    Stmt st(db_, "INSERT INTO ingest_batches(uploaded_at, detections_digest, gps_digest, stats, summary) VALUES (?,?,?,?,?)");
    st.bind(1, to_epoch_ms(b.uploaded_at)).bind(2, b.detections_digest).bind(3, b.gps_digest);
    st.bind(4, json(b.stats).dump()).bind(5, b.summary.dump());
    st.run();
    b.id = sqlite3_last_insert_rowid(db_);
    json detail = b.summary;
    detail["statistics"] = json(b.stats);
    append_audit(actor, "ingest", "batch:" + std::to_string(b.id), detail);
    return b;
  });
}

std::vector<IngestBatch> Store::all_batches() const {
  std::lock_guard lock(mutex_);
  Stmt st(db_, "SELECT id, uploaded_at, detections_digest, gps_digest, stats, summary FROM ingest_batches ORDER BY id");
  std::vector<IngestBatch> out;
  while (st.step()) {
    IngestBatch b;
    b.id = st.i64(0);
    b.uploaded_at = from_epoch_ms(st.i64(1));
    b.detections_digest = st.text(2);
    b.gps_digest = st.text(3);
    const json stats = json::parse(st.text(4));
    b.stats.frames = stats.at("frames");
    b.stats.boxes = stats.at("boxes");
    b.stats.observations = stats.at("observations");
    b.stats.thumbnails_rejected = stats.value("thumbnails_rejected", 0);
    b.stats.skipped = stats.at("skipped").get<std::map<std::string, std::int64_t>>();
    b.stats.skipped_frames = stats.at("skipped_frames").get<std::map<std::string, std::int64_t>>();
    b.summary = json::parse(st.text(5));
    out.push_back(std::move(b));
  }
  return out;
}

void Store::import_features(const std::vector<RoadSegment>& segments, const std::vector<Pothole>& potholes,
                            const std::string& actor) {
  write([&] {
    for (const auto& s : segments) insert_segment(s, actor);
    for (const auto& p : potholes) insert_pothole(p, actor);
  });
}

json Store::snapshot() const {
  std::lock_guard lock(mutex_);
  json potholes = json::array();
  for (const auto& p : all_potholes()) {
    json j = pothole_detail(p);
    j["id"] = p.id;
    j["first_seen"] = format_iso(p.first_seen);
    j["last_seen"] = format_iso(p.last_seen);
    j["thumbnail"] = p.thumbnail ? json(*p.thumbnail) : json(nullptr);
    j["version"] = p.version;
    potholes.push_back(std::move(j));
  }
  json segments = json::array();
  for (const auto& s : all_segments()) {
    json j = segment_detail(s);
    j["id"] = s.id;
    j["geometry"] = json::parse(geometry_text(s.geometry));
    j["contractor_contact"] = s.contract.contractor_contact;
    j["created_by"] = s.created_by;
    j["category"] = s.category ? json(*s.category) : json(nullptr);
    j["version"] = s.version;
    segments.push_back(std::move(j));
  }
  json alerts = json::array();
  for (const auto& a : all_alerts()) alerts.push_back(a);
  json batches = json::array();
  for (const auto& b : all_batches()) {
    batches.push_back(json{{"id", b.id},
                           {"uploaded_at", format_iso(b.uploaded_at)},
                           {"detections_digest", b.detections_digest},
                           {"gps_digest", b.gps_digest},
                           {"statistics", b.stats},
                           {"summary", b.summary}});
  }
  return json{{"potholes", potholes}, {"segments", segments}, {"alerts", alerts}, {"batches", batches}};
}

}  // namespace roadwatch
