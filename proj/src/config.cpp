#include "roadwatch/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdlib>

#include "roadwatch/error.hpp"

namespace roadwatch {
namespace {

[[noreturn]] void bad(const std::string& name, const std::string& value) {
  throw Error(ErrorCode::InvalidArgument, "invalid value for " + name + ": '" + value + "'");
}

double number(const std::string& name, const std::string& value) {
  double v = 0;
  auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
  if (value.empty() || ec != std::errc{} || ptr != value.data() + value.size() || !std::isfinite(v)) bad(name, value);
  return v;
}

std::vector<std::string> list(const std::string& value) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= value.size()) {
    auto comma = value.find(',', start);
    if (comma == std::string::npos) comma = value.size();
    auto item = value.substr(start, comma - start);
    while (!item.empty() && item.front() == ' ') item.erase(item.begin());
    while (!item.empty() && item.back() == ' ') item.pop_back();
    if (!item.empty()) out.push_back(item);
    start = comma + 1;
  }
  return out;
}

std::chrono::milliseconds seconds_ms(const std::string& name, const std::string& value) {
  return std::chrono::milliseconds{static_cast<std::int64_t>(std::llround(number(name, value) * 1000.0))};
}

}  // namespace

void Config::validate() const {
  auto positive = [](const char* what, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument, std::string(what) + " must be positive");
    }
  };
  positive("cluster threshold", cluster_threshold_m);
  positive("attribution radius", attribution_radius_m);
  positive("warn density", governance.warn_per_km);
  positive("severe density", governance.severe_per_km);
  positive("coverage radius", governance.coverage_radius_m);
  positive("moderate severity ratio", detection.severity.moderate);
  positive("severe severity ratio", detection.severity.severe);
  positive("max gap", double(detection.locate.max_gap.count()));
  positive("delivery attempts", governance.delivery_attempts);
  positive("ingest rate limit", ingest_rate_limit);
  positive("session ttl", double(session_ttl.count()));
  if (tick_interval.count() < 0) throw Error(ErrorCode::InvalidArgument, "tick interval must not be negative");
  if (detection.locate.edge_tolerance.count() < 0) {
    throw Error(ErrorCode::InvalidArgument, "edge tolerance must not be negative");
  }
  if (governance.severe_per_km <= governance.warn_per_km) {
    throw Error(ErrorCode::InvalidArgument, "severe density must exceed warn density");
  }
  if (detection.severity.severe <= detection.severity.moderate) {
    throw Error(ErrorCode::InvalidArgument, "severe ratio must exceed moderate ratio");
  }
  if (detection.confidence_floor < 0.0 || detection.confidence_floor > 1.0) {
    throw Error(ErrorCode::InvalidArgument, "confidence floor must lie in [0, 1]");
  }
  if (port <= 0 || port > 65535) throw Error(ErrorCode::InvalidArgument, "port out of range");
}

Config apply_environment(Config c, const EnvLookup& lookup) {
  auto with = [&](const char* name, auto&& apply) {
    if (auto v = lookup(name)) apply(std::string(name), *v);
  };
  with("ROADWATCH_STORE", [&](auto, auto v) { c.store_path = v; });
  with("ROADWATCH_OFFSET", [&](auto n, auto v) {
    auto o = parse_offset(v);
    if (!o) bad(n, v);
    c.offset = *o;
  });
  with("ROADWATCH_ROUTING_URL", [&](auto, auto v) { c.routing_url = v; });
  with("ROADWATCH_WEBHOOK_URL", [&](auto, auto v) { c.webhook_url = v; });
  with("ROADWATCH_WEBHOOK_TOKEN", [&](auto, auto v) { c.webhook_token = v; });
  with("ROADWATCH_BIND", [&](auto, auto v) { c.bind_address = v; });
  with("ROADWATCH_PORT", [&](auto n, auto v) { c.port = static_cast<int>(number(n, v)); });
  with("ROADWATCH_CLUSTER_M", [&](auto n, auto v) { c.cluster_threshold_m = number(n, v); });
  with("ROADWATCH_ATTRIBUTION_M", [&](auto n, auto v) { c.attribution_radius_m = number(n, v); });
  with("ROADWATCH_WARN_PER_KM", [&](auto n, auto v) { c.governance.warn_per_km = number(n, v); });
  with("ROADWATCH_SEVERE_PER_KM", [&](auto n, auto v) { c.governance.severe_per_km = number(n, v); });
  with("ROADWATCH_COVERAGE_M", [&](auto n, auto v) { c.governance.coverage_radius_m = number(n, v); });
  with("ROADWATCH_DELIVERY_ATTEMPTS", [&](auto n, auto v) { c.governance.delivery_attempts = static_cast<int>(number(n, v)); });
  with("ROADWATCH_BACKOFF_MS", [&](auto n, auto v) { c.governance.backoff_base = std::chrono::milliseconds{std::llround(number(n, v))}; });
  with("ROADWATCH_AUTHORITY_RECIPIENTS", [&](auto, auto v) { c.governance.authority_recipients = list(v); });
  with("ROADWATCH_ESCALATION_RECIPIENTS", [&](auto, auto v) { c.governance.escalation_recipients = list(v); });
  with("ROADWATCH_CONFIDENCE_FLOOR", [&](auto n, auto v) { c.detection.confidence_floor = number(n, v); });
  with("ROADWATCH_SEVERITY_MODERATE", [&](auto n, auto v) { c.detection.severity.moderate = number(n, v); });
  with("ROADWATCH_SEVERITY_SEVERE", [&](auto n, auto v) { c.detection.severity.severe = number(n, v); });
  with("ROADWATCH_MAX_GAP_S", [&](auto n, auto v) { c.detection.locate.max_gap = seconds_ms(n, v); });
  with("ROADWATCH_EDGE_TOLERANCE_S", [&](auto n, auto v) { c.detection.locate.edge_tolerance = seconds_ms(n, v); });
  with("ROADWATCH_RATE_LIMIT", [&](auto n, auto v) { c.ingest_rate_limit = static_cast<int>(number(n, v)); });
  with("ROADWATCH_TICK_INTERVAL_S", [&](auto n, auto v) { c.tick_interval = std::chrono::seconds{std::llround(number(n, v))}; });
  with("ROADWATCH_NOW", [&](auto n, auto v) {
    auto t = parse_iso(v);
    if (!t) bad(n, v);
    c.fixed_now = *t;
  });
  return c;
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* v = std::getenv(name.c_str())) return std::string(v);
  return std::nullopt;
}

}  // namespace roadwatch
