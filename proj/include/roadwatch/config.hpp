#pragma once

#include <chrono>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>

#include "roadwatch/crypto.hpp"
#include "roadwatch/detection.hpp"
#include "roadwatch/governance.hpp"
#include "roadwatch/gps.hpp"
#include "roadwatch/segment.hpp"

namespace roadwatch {

/// Resolved runtime configuration. Defaults are the documented deployment
/// values; environment variables override them and CLI flags override both.
struct Config {
  std::string store_path = "roadwatch.db";
  ClockOffset offset = ClockOffset::dashcam_default();
  DetectionOptions detection;
  double cluster_threshold_m = kClusterThresholdM;
  double attribution_radius_m = kAttributionRadiusM;
  GovernanceConfig governance;

  std::string routing_url;  // empty: no routing provider
  std::string webhook_url;  // empty: alerts stay Pending
  std::string webhook_token;

  std::string bind_address = "0.0.0.0";
  int port = 8080;
  std::chrono::seconds session_ttl{12 * 3600};
  int ingest_rate_limit = 10;  // per account per hour
  std::size_t max_upload_bytes = 64 * 1024 * 1024;
  std::chrono::seconds tick_interval{3600};  // serve only; 0 disables
  crypto::HashStrength password_strength = crypto::HashStrength::Interactive;

  /// Fixed clock for reproducible runs; unset uses the system clock.
  std::optional<UtcInstant> fixed_now;

  /// Throws Error{InvalidArgument} if a threshold is not positive.
  void validate() const;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Applies ROADWATCH_* variables on top of `base`.
/// Throws Error{InvalidArgument} naming the variable on a bad value.
Config apply_environment(Config base, const EnvLookup& lookup);

/// Reads the process environment.
std::optional<std::string> process_env(const std::string& name);

}  // namespace roadwatch
