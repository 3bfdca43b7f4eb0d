#include "roadwatch/api.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <iostream>
#include <map>
#include <mutex>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "roadwatch/crypto.hpp"
#include "roadwatch/geojson.hpp"

namespace roadwatch {

using nlohmann::json;

int http_status(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Unauthorized: return 401;
    case ErrorCode::Forbidden: return 403;
    case ErrorCode::NotFound: return 404;
    case ErrorCode::ConflictingWrite: return 409;
    case ErrorCode::NoRoute: return 422;
    case ErrorCode::ProviderUnreachable:
    case ErrorCode::SinkUnreachable: return 502;
    case ErrorCode::Internal: return 500;
    default: return 400;
  }
}

namespace {

LatLon point(const json& j, const char* field) {
  LatLon p;
  if (j.is_array() && j.size() == 2) {
    p = {j.at(0).get<double>(), j.at(1).get<double>()};
  } else if (j.is_object()) {
    p = {j.at("lat").get<double>(), j.at("lon").get<double>()};
  } else {
    throw Error(ErrorCode::InvalidArgument, std::string(field) + " must be {lat, lon} or [lat, lon]");
  }
  if (!valid_coordinate(p)) throw Error(ErrorCode::InvalidArgument, std::string(field) + " out of range");
  return p;
}

Date date_field(const json& j, const char* field) {
  const auto d = j.is_string() ? parse_date(j.get<std::string>()) : std::nullopt;
  if (!d) throw Error(ErrorCode::InvalidContract, std::string(field) + " must be YYYY-MM-DD");
  return *d;
}

ContractMetadata contract(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidContract, "contract must be an object");
  ContractMetadata c;
  c.contractor_name = j.value("contractor_name", "");
  c.contractor_contact = j.value("contractor_contact", "");
  c.construction_date = date_field(j.value("construction_date", json()), "construction_date");
  c.warranty_end = date_field(j.value("warranty_end", json()), "warranty_end");
  if (!j.contains("budget") || !j.at("budget").is_number()) {
    throw Error(ErrorCode::InvalidContract, "budget must be a number");
  }
  c.budget = j.at("budget").get<double>();
  validate(c);
  return c;
}

template <typename Fn>
auto decoding(Fn&& fn) {
  try {
    return fn();
  } catch (const Error&) {
    throw;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidArgument, std::string("malformed request body: ") + e.what());
  }
}

std::optional<UtcInstant> bound(const std::string& text, bool upper) {
  if (text.empty()) return std::nullopt;
  if (auto t = parse_iso(text)) return t;
  if (auto d = parse_date(text)) return upper ? end_of_day(*d) - Millis{1} : UtcInstant{std::chrono::sys_days{*d}};
  throw Error(ErrorCode::InvalidArgument, "bad time bound '" + text + "'");
}

// Liang-Barsky clip in degree space; adequate for road-length legs.
bool leg_hits_box(const LatLon& a, const LatLon& b, const BBox& box) {
  double t0 = 0.0, t1 = 1.0;
  const double dx = b.lon - a.lon, dy = b.lat - a.lat;
  const double p[4] = {-dx, dx, -dy, dy};
  const double q[4] = {a.lon - box.min_lon, box.max_lon - a.lon, a.lat - box.min_lat, box.max_lat - a.lat};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
    } else {
      const double r = q[i] / p[i];
      if (p[i] < 0.0) t0 = std::max(t0, r);
      else t1 = std::min(t1, r);
      if (t0 > t1) return false;
    }
  }
  return true;
}

bool segment_hits_box(const RoadSegment& s, const BBox& box) {
  const auto& v = s.geometry.vertices();
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    if (leg_hits_box(v[i], v[i + 1], box)) return true;
  }
  return v.size() == 1 && box.contains(v.front());
}

std::string bearer(const httplib::Request& req) {
  const auto header = req.get_header_value("Authorization");
  constexpr std::string_view prefix = "Bearer ";
  if (header.size() <= prefix.size() || header.compare(0, prefix.size(), prefix) != 0) return {};
  return header.substr(prefix.size());
}

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, const Error& e) {
  json body{{"error", to_string(e.code())}, {"message", e.what()}};
  if (e.code() == ErrorCode::MalformedDetections) {
    json diagnostics = json::array();
    std::string_view rest = e.what();
    // One entry per "line N: ..." item; parser messages may contain "; " themselves.
    while (!rest.empty()) {
      const auto cut = rest.find("; line ");
      diagnostics.push_back(std::string(rest.substr(0, cut)));
      rest = cut == std::string_view::npos ? std::string_view{} : rest.substr(cut + 2);
    }
    body["diagnostics"] = std::move(diagnostics);
  }
  send_json(res, http_status(e.code()), body);
}

// Public GETs carry a content hash as a strong validator.
void send_geojson(const httplib::Request& req, httplib::Response& res, const json& doc) {
  const std::string body = doc.dump();
  const std::string etag = "\"" + crypto::sha256_hex(body) + "\"";
  res.set_header("ETag", etag);
  res.set_header("Cache-Control", "no-cache");
  if (req.get_header_value("If-None-Match") == etag) {
    res.status = 304;
    return;
  }
  res.status = 200;
  res.set_content(body, "application/geo+json");
}

std::int64_t path_id(const httplib::Request& req) {
  const std::string text = req.matches[1];
  try {
    return std::stoll(text);
  } catch (const std::exception&) {
    throw Error(ErrorCode::NotFound, "no such segment " + text);
  }
}

json body_json(const httplib::Request& req) {
  if (req.body.empty()) return json::object();
  try {
    return json::parse(req.body);
  } catch (const json::exception&) {
    throw Error(ErrorCode::InvalidArgument, "request body is not valid JSON");
  }
}

}  // namespace

SegmentRequest parse_segment_request(const json& body) {
  return decoding([&] {
    SegmentRequest r;
    if (!body.is_object()) throw Error(ErrorCode::InvalidArgument, "body must be an object");
    r.start = point(body.at("start"), "start");
    r.end = point(body.at("end"), "end");
    if (body.contains("mode")) {
      const auto m = mode_from_string(body.at("mode").get<std::string>());
      if (!m) throw Error(ErrorCode::InvalidArgument, "mode must be routed or straight");
      r.mode = *m;
    }
    r.fallback = body.value("fallback", false);
    r.contract = contract(body.at("contract"));
    if (body.contains("category") && !body.at("category").is_null()) {
      r.category = body.at("category").get<std::string>();
    }
    return r;
  });
}

SegmentEdit parse_segment_edit(const json& body) {
  return decoding([&] {
    SegmentEdit e;
    if (!body.is_object()) throw Error(ErrorCode::InvalidArgument, "body must be an object");
    if (body.contains("start")) e.start = point(body.at("start"), "start");
    if (body.contains("end")) e.end = point(body.at("end"), "end");
    if (body.contains("contract")) e.contract = contract(body.at("contract"));
    if (body.contains("category")) {
      e.category = body.at("category").is_null() ? std::string() : body.at("category").get<std::string>();
    }
    e.fallback = body.value("fallback", false);
    return e;
  });
}

PotholeQuery parse_pothole_query(const std::string& bbox, const std::string& status, const std::string& from,
                                 const std::string& to, const std::string& category) {
  PotholeQuery q;
  if (!bbox.empty()) q.bbox = parse_bbox(bbox);
  // Repaired potholes leave the map unless asked for.
  if (status.empty()) {
    q.status = PotholeStatus::Active;
  } else if (status != "all") {
    q.status = status_from_string(status);
    if (!q.status) throw Error(ErrorCode::InvalidArgument, "status must be active, repaired or all");
  }
  q.from = bound(from, false);
  q.to = bound(to, true);
  if (!category.empty()) q.category = category;
  return q;
}

struct ApiServer::Impl {
  Service& service;
  httplib::Server server;
  std::thread thread;
  std::thread ticker;
  std::mutex tick_mutex;
  std::condition_variable tick_cv;
  bool stopping = false;
  std::mutex rate_mutex;
  std::map<std::int64_t, std::deque<UtcInstant>> ingests;

  explicit Impl(Service& s) : service(s) { routes(); }

  AuthorityAccount require(const httplib::Request& req, std::optional<Role> role = std::nullopt) {
    auto account = service.authenticate(bearer(req));
    if (role && account.role != *role) throw Error(ErrorCode::Forbidden, "requires " + std::string(to_string(*role)));
    return account;
  }

  std::optional<AuthorityAccount> optional_account(const httplib::Request& req) {
    if (bearer(req).empty()) return std::nullopt;
    return service.authenticate(bearer(req));
  }

  bool admit_ingest(const AuthorityAccount& a) {
    const UtcInstant now = service.store().now();
    std::lock_guard lock(rate_mutex);
    auto& window = ingests[a.id];
    while (!window.empty() && window.front() <= now - std::chrono::hours{1}) window.pop_front();
    if (static_cast<int>(window.size()) >= service.config().ingest_rate_limit) return false;
    window.push_back(now);
    return true;
  }

  template <typename Fn>
  httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
      try {
        fn(req, res);
      } catch (const Error& e) {
        send_error(res, e);
      } catch (const std::exception& e) {
        send_json(res, 500, json{{"error", "Internal"}, {"message", e.what()}});
      }
    };
  }

  void routes() {
    server.set_payload_max_length(service.config().max_upload_bytes);

    server.Post("/api/auth/login", guarded([this](const auto& req, auto& res) {
      const json body = body_json(req);
      const auto creds = decoding([&] {
        return std::pair{body.at("username").template get<std::string>(), body.at("password").template get<std::string>()};
      });
      try {
        const auto login = service.login(creds.first, creds.second);
        send_json(res, 200, json{{"token", login.token}, {"expires_at", format_iso(login.expires_at)}});
      } catch (const Error& e) {
        if (e.code() != ErrorCode::Unauthorized) throw;
        send_json(res, 401, json{{"error", "Unauthorized"}, {"message", "invalid credentials"}});
      }
    }));

    server.Post("/api/ingest", guarded([this](const auto& req, auto& res) {
      const auto account = require(req);
      if (!req.is_multipart_form_data()) {
        throw Error(ErrorCode::InvalidArgument, "expected multipart/form-data with detections and gps parts");
      }
      for (const char* part : {"detections", "gps"}) {
        if (!req.has_file(part)) throw Error(ErrorCode::InvalidArgument, std::string("missing part '") + part + "'");
      }
      std::optional<ClockOffset> offset;
      if (req.has_file("offset")) {
        offset = parse_offset(req.get_file_value("offset").content);
        if (!offset) throw Error(ErrorCode::InvalidArgument, "offset must be [-]HH:MM:SS");
      }
      if (!admit_ingest(account)) {
        send_json(res, 429, json{{"error", "RateLimited"},
                                 {"message", "ingest limit of " + std::to_string(service.config().ingest_rate_limit) +
                                                 " per hour reached"}});
        return;
      }
      const auto report = service.ingest(req.get_file_value("detections").content, req.get_file_value("gps").content,
                                         account.username, offset);
      send_json(res, 200,
                json{{"batch_id", report.batch_id}, {"statistics", report.statistics()}, {"alert_ids", report.alert_ids}});
    }));

    server.Get("/api/potholes", guarded([this](const auto& req, auto& res) {
      const auto q = parse_pothole_query(req.get_param_value("bbox"), req.get_param_value("status"),
                                         req.get_param_value("from"), req.get_param_value("to"),
                                         req.get_param_value("category"));
      const auto potholes = service.store().query_potholes(q);
      send_geojson(req, res, export_geojson(potholes, {}, Exposure::Public));
    }));

    server.Get("/api/segments", guarded([this](const auto& req, auto& res) {
      std::optional<BBox> box;
      if (req.has_param("bbox")) box = parse_bbox(req.get_param_value("bbox"));
      std::optional<HealthState> health;
      if (req.has_param("health")) {
        health = health_from_string(req.get_param_value("health"));
        if (!health) throw Error(ErrorCode::InvalidArgument, "unknown health value");
      }
      const std::string category = req.get_param_value("category");
      std::vector<RoadSegment> out;
      for (auto& s : service.store().all_segments()) {
        if (box && !segment_hits_box(s, *box)) continue;
        if (health && s.health != *health) continue;
        if (!category.empty() && s.category != category) continue;
        out.push_back(std::move(s));
      }
      send_geojson(req, res, export_geojson({}, out, Exposure::Public));
    }));

    server.Post("/api/segments", guarded([this](const auto& req, auto& res) {
      const auto account = require(req);
      const auto request = parse_segment_request(body_json(req));
      if (req.get_param_value("dry_run") == "1" || req.get_param_value("dry_run") == "true") {
        send_json(res, 200, segment_feature(service.preview_segment(request), Exposure::Private));
        return;
      }
      send_json(res, 201, segment_feature(service.create_segment(request, account.username), Exposure::Private));
    }));

    server.Patch(R"(/api/segments/([^/]+))", guarded([this](const auto& req, auto& res) {
      const auto account = require(req);
      const auto id = path_id(req);
      const auto edit = parse_segment_edit(body_json(req));
      send_json(res, 200, segment_feature(service.edit_segment(id, edit, account.username), Exposure::Private));
    }));

    server.Delete(R"(/api/segments/([^/]+))", guarded([this](const auto& req, auto& res) {
      const auto account = require(req);
      service.delete_segment(path_id(req), account.username);
      res.status = 204;
    }));

    server.Get(R"(/api/segments/([^/]+)/report)", guarded([this](const auto& req, auto& res) {
      const bool authed = optional_account(req).has_value();
      send_json(res, 200, service.report(path_id(req), authed));
    }));

    server.Post(R"(/api/segments/([^/]+)/notify)", guarded([this](const auto& req, auto& res) {
      const auto account = require(req);
      const json body = body_json(req);
      const std::string message = decoding([&] { return body.value("message", std::string()); });
      send_json(res, 201, service.notify(path_id(req), message, account.username));
    }));

    server.Post("/api/tick", guarded([this](const auto& req, auto& res) {
      const auto account = require(req, Role::Admin);
      const auto report = service.tick(account.username);
      send_json(res, 200,
                json{{"evaluated", report.evaluated}, {"changed", report.changed}, {"alert_ids", report.alert_ids}});
    }));

    server.Get("/api/audit", guarded([this](const auto& req, auto& res) {
      require(req);
      res.status = 200;
      res.set_content(service.store().export_audit_jsonl(), "application/x-ndjson");
    }));
  }
};

ApiServer::ApiServer(Service& service) : impl_(std::make_unique<Impl>(service)) {}

ApiServer::~ApiServer() { stop(); }

int ApiServer::start(const std::string& host, int port) {
  int bound_port = port;
  if (port == 0) {
    bound_port = impl_->server.bind_to_any_port(host);
  } else if (!impl_->server.bind_to_port(host, port)) {
    bound_port = -1;
  }
  if (bound_port < 0) throw Error(ErrorCode::InvalidArgument, "cannot bind " + host + ":" + std::to_string(port));
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return bound_port;
}

void ApiServer::run(const std::string& host, int port) {
  if (!impl_->server.listen(host, port)) {
    throw Error(ErrorCode::InvalidArgument, "cannot listen on " + host + ":" + std::to_string(port));
  }
}

void ApiServer::start_ticker(std::chrono::seconds interval) {
  if (interval.count() <= 0 || impl_->ticker.joinable()) return;
  impl_->ticker = std::thread([this, interval] {
    std::unique_lock lock(impl_->tick_mutex);
    while (!impl_->tick_cv.wait_for(lock, interval, [this] { return impl_->stopping; })) {
      lock.unlock();
      try {
        impl_->service.tick("system");
      } catch (const std::exception& e) {
        std::cerr << "tick failed: " << e.what() << "\n";
      }
      lock.lock();
    }
  });
}

void ApiServer::stop() {
  if (!impl_) return;
  {
    std::lock_guard lock(impl_->tick_mutex);
    impl_->stopping = true;
  }
  impl_->tick_cv.notify_all();
  if (impl_->ticker.joinable()) impl_->ticker.join();
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace roadwatch
