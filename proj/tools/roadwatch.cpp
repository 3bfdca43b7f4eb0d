// roadwatch: operator CLI for the pothole pipeline and road governance service.

#include <unistd.h>
#include <termios.h>

#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "roadwatch/api.hpp"
#include "roadwatch/config.hpp"
#include "roadwatch/error.hpp"
#include "roadwatch/geojson.hpp"
#include "roadwatch/service.hpp"

using namespace roadwatch;
using nlohmann::json;

namespace {

constexpr int kUserError = 1;
constexpr int kInternalError = 2;

int fail(std::string_view code, const std::string& message, int exit_code) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << "\n";
  return exit_code;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::NotFound, "cannot read " + path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string read_password() {
  const bool tty = isatty(STDIN_FILENO);
  termios saved{};
  if (tty) {
    std::cerr << "password: " << std::flush;
    tcgetattr(STDIN_FILENO, &saved);
    termios quiet = saved;
    quiet.c_lflag &= ~static_cast<tcflag_t>(ECHO);
    tcsetattr(STDIN_FILENO, TCSANOW, &quiet);
  }
  std::string password;
  std::getline(std::cin, password);
  if (tty) {
    tcsetattr(STDIN_FILENO, TCSANOW, &saved);
    std::cerr << "\n";
  }
  if (!password.empty() && password.back() == '\r') password.pop_back();
  return password;
}

// Flags that override the environment. Unset optionals leave it alone.
struct Overrides {
  std::optional<std::string> store, offset, routing_url, webhook_url, webhook_token, now;
  std::optional<double> cluster_m, attribution_m, warn_per_km, severe_per_km, coverage_m, confidence_floor;

  Config apply(Config c) const {
    if (store) c.store_path = *store;
    if (offset) {
      auto o = parse_offset(*offset);
      if (!o) throw Error(ErrorCode::InvalidArgument, "--offset must be [-]HH:MM:SS");
      c.offset = *o;
    }
    if (routing_url) c.routing_url = *routing_url;
    if (webhook_url) c.webhook_url = *webhook_url;
    if (webhook_token) c.webhook_token = *webhook_token;
    if (now) {
      auto t = parse_iso(*now);
      if (!t) throw Error(ErrorCode::InvalidArgument, "--now must be an ISO-8601 UTC instant");
      c.fixed_now = *t;
    }
    if (cluster_m) c.cluster_threshold_m = *cluster_m;
    if (attribution_m) c.attribution_radius_m = *attribution_m;
    if (warn_per_km) c.governance.warn_per_km = *warn_per_km;
    if (severe_per_km) c.governance.severe_per_km = *severe_per_km;
    if (coverage_m) c.governance.coverage_radius_m = *coverage_m;
    if (confidence_floor) c.detection.confidence_floor = *confidence_floor;
    c.validate();
    return c;
  }
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"roadwatch - pothole registry and road governance"};
  app.require_subcommand(1);

  Overrides o;
  app.add_option("--store", o.store, "SQLite store path");
  app.add_option("--offset", o.offset, "dashcam clock offset [-]HH:MM:SS (local minus UTC)");
  app.add_option("--routing-url", o.routing_url, "OSRM base URL");
  app.add_option("--webhook-url", o.webhook_url, "alert webhook URL");
  app.add_option("--webhook-token", o.webhook_token, "bearer token for the webhook");
  app.add_option("--now", o.now, "fixed clock, e.g. 2025-08-13T12:00:00Z");
  app.add_option("--cluster-m", o.cluster_m, "dedup threshold in metres");
  app.add_option("--attribution-m", o.attribution_m, "pothole-to-segment radius in metres");
  app.add_option("--warn-per-km", o.warn_per_km);
  app.add_option("--severe-per-km", o.severe_per_km);
  app.add_option("--coverage-m", o.coverage_m, "repair verification radius in metres");
  app.add_option("--confidence-floor", o.confidence_floor);

  std::string actor = "cli";
  app.add_option("--actor", actor, "name recorded in the audit trail");

  auto* ingest = app.add_subcommand("ingest", "geotag, dedupe and register a detection batch");
  std::string detections_path, gps_path, ingest_offset;
  ingest->add_option("--detections", detections_path, "detector output (JSONL)")->required();
  ingest->add_option("--gps", gps_path, "GPS log (CSV)")->required();
  ingest->add_option("--offset", ingest_offset, "clock offset for this batch only");

  auto* serve = app.add_subcommand("serve", "run the HTTP API");
  std::optional<int> port;
  std::optional<std::string> bind;
  serve->add_option("--port", port);
  serve->add_option("--bind", bind);

  auto* report = app.add_subcommand("report", "print a segment health report");
  std::int64_t segment_id = 0;
  report->add_option("--segment", segment_id)->required();

  auto* account = app.add_subcommand("account", "manage authority accounts");
  account->require_subcommand(1);
  auto* account_create = account->add_subcommand("create", "create an account; password is read from stdin");
  std::string username, role_name = "authority";
  account_create->add_option("--username", username)->required();
  account_create->add_option("--role", role_name)->check(CLI::IsMember({"authority", "admin"}));

  auto* tick = app.add_subcommand("tick", "run one governance evaluation pass");

  auto* exporter = app.add_subcommand("export", "write state to stdout");
  bool as_audit = false, as_snapshot = false, include_private = false;
  exporter->add_flag("--audit", as_audit, "audit trail as JSONL");
  exporter->add_flag("--snapshot", as_snapshot, "canonical store snapshot");
  exporter->add_flag("--private", include_private, "GeoJSON with private properties");

  auto* importer = app.add_subcommand("import", "load a private GeoJSON export into an empty store");
  std::string import_path;
  importer->add_option("--geojson", import_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUserError;
  }

  try {
    Config config = o.apply(apply_environment(Config{}, process_env));
    if (port) config.port = *port;
    if (bind) config.bind_address = *bind;
    config.validate();

    Store store(config.store_path);
    Service service = Service::from_config(store, config);

    if (*ingest) {
      std::optional<ClockOffset> offset;
      if (!ingest_offset.empty()) {
        offset = parse_offset(ingest_offset);
        if (!offset) throw Error(ErrorCode::InvalidArgument, "--offset must be [-]HH:MM:SS");
      }
      const std::string detections = slurp(detections_path);
      const std::string gps = slurp(gps_path);
      const auto r = service.ingest(detections, gps, actor, offset);
      std::cout << json{{"batch_id", r.batch_id}, {"statistics", r.statistics()}, {"alert_ids", r.alert_ids}}.dump()
                << "\n";
    } else if (*serve) {
      ApiServer server(service);
      server.start_ticker(config.tick_interval);
      std::cerr << "listening on " << config.bind_address << ":" << config.port << "\n";
      server.run(config.bind_address, config.port);
    } else if (*report) {
      std::cout << service.report(segment_id, true).dump(2) << "\n";
    } else if (*account_create) {
      const auto role = role_from_string(role_name);
      const auto created = service.create_account(username, read_password(), *role, actor);
      std::cout << json{{"id", created.id}, {"username", created.username}, {"role", to_string(created.role)}}.dump()
                << "\n";
    } else if (*tick) {
      const auto r = service.tick(actor);
      std::cout << json{{"evaluated", r.evaluated}, {"changed", r.changed}, {"alert_ids", r.alert_ids}}.dump() << "\n";
    } else if (*exporter) {
      if (as_audit) {
        std::cout << store.export_audit_jsonl();
      } else if (as_snapshot) {
        std::cout << store.snapshot().dump() << "\n";
      } else {
        // The public map shows active potholes; the private export keeps everything.
        PotholeQuery q;
        if (!include_private) q.status = PotholeStatus::Active;
        std::cout << export_geojson(store.query_potholes(q), store.all_segments(),
                                    include_private ? Exposure::Private : Exposure::Public)
                         .dump()
                  << "\n";
      }
    } else if (*importer) {
      const auto doc = json::parse(slurp(import_path), nullptr, false);
      if (doc.is_discarded()) throw Error(ErrorCode::InvalidArgument, import_path + " is not valid JSON");
      const auto features = import_geojson(doc);
      store.import_features(features.segments, features.potholes, actor);
      std::cout << json{{"segments", features.segments.size()}, {"potholes", features.potholes.size()}}.dump() << "\n";
    }
    return 0;
  } catch (const Error& e) {
    return fail(to_string(e.code()), e.what(), e.code() == ErrorCode::Internal ? kInternalError : kUserError);
  } catch (const std::exception& e) {
    return fail("Internal", e.what(), kInternalError);
  }
}
