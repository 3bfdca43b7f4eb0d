#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "roadwatch/detection.hpp"
#include "roadwatch/geo.hpp"

namespace roadwatch {

inline constexpr double kClusterThresholdM = 2.5;

enum class PotholeStatus { Active, Repaired };

std::string_view to_string(PotholeStatus s) noexcept;
std::optional<PotholeStatus> status_from_string(std::string_view s) noexcept;

struct Pothole {
  std::int64_t id = 0;
  LatLon position;  // five-decimal centroid
  Severity severity = Severity::Minor;
  PotholeStatus status = PotholeStatus::Active;
  UtcInstant first_seen;
  UtcInstant last_seen;
  std::int64_t detection_count = 1;
  std::optional<std::string> thumbnail;
  std::optional<std::int64_t> segment_id;
  std::int64_t version = 0;

  friend bool operator==(const Pothole&, const Pothole&) = default;
};

/// A group of observations of one physical defect within a batch.
struct Cluster {
  std::vector<std::size_t> members;  // indices into the clustered input
  double sum_lat = 0;
  double sum_lon = 0;
  Severity severity = Severity::Minor;
  UtcInstant first_seen;
  UtcInstant last_seen;
  std::optional<std::string> thumbnail;
  /// Distance from each member to the running centroid at the moment it
  /// joined (0 for the founding member).
  std::vector<double> join_distance_m;

  /// Unrounded running mean.
  LatLon centroid() const {
    const double n = double(members.size());
    return {sum_lat / n, sum_lon / n};
  }
  std::size_t size() const { return members.size(); }
};

/// Greedy first-fit clustering. Each observation joins the earliest-created
/// cluster whose running centroid lies within `threshold_m`, otherwise it
/// founds a new cluster. Input must be sorted by (observed_at, source_frame).
std::vector<Cluster> cluster(std::span<const Observation> observations,
                             double threshold_m = kClusterThresholdM);

struct RegistryMutation {
  enum class Kind { Created, Merged, Reopened };
  Kind kind;
  std::size_t cluster_index;
  Pothole pothole;  // state after the mutation
};

/// Result of folding a batch's clusters into the known potholes.
struct MergeResult {
  std::vector<RegistryMutation> mutations;
  /// Pothole id assigned to each cluster, by cluster index.
  std::vector<std::int64_t> cluster_pothole;
};

/// Matches each cluster, in order, to the nearest Active pothole within
/// threshold, else the nearest Repaired pothole within threshold (reopened),
/// else creates a pothole with id `next_id++`. Ties go to the smaller id.
/// Potholes created earlier in the same call are candidates for later clusters.
MergeResult merge_into_registry(std::span<const Cluster> clusters, std::vector<Pothole> existing,
                                std::int64_t next_id, double threshold_m = kClusterThresholdM);

}  // namespace roadwatch
