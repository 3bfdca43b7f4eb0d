#include "roadwatch/dedupe.hpp"

#include <algorithm>
#include <limits>
#include <map>

namespace roadwatch {

std::string_view to_string(PotholeStatus s) noexcept {
  return s == PotholeStatus::Active ? "active" : "repaired";
}

std::optional<PotholeStatus> status_from_string(std::string_view s) noexcept {
  if (s == "active") return PotholeStatus::Active;
  if (s == "repaired") return PotholeStatus::Repaired;
  return std::nullopt;
}

std::vector<Cluster> cluster(std::span<const Observation> observations, double threshold_m) {
  std::vector<Cluster> clusters;
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const Observation& obs = observations[i];
    Cluster* home = nullptr;
    double joined_at = 0.0;
    for (auto& c : clusters) {
      const double d = haversine_m(c.centroid(), obs.position);
      if (d <= threshold_m) {
        home = &c;
        joined_at = d;
        break;
      }
    }
    if (home == nullptr) {
      Cluster fresh;
      fresh.severity = obs.severity;
      fresh.first_seen = obs.observed_at;
      fresh.last_seen = obs.observed_at;
      clusters.push_back(std::move(fresh));
      home = &clusters.back();
    }
    home->members.push_back(i);
    home->join_distance_m.push_back(joined_at);
    home->sum_lat += obs.position.lat;
    home->sum_lon += obs.position.lon;
    home->severity = std::max(home->severity, obs.severity);
    home->first_seen = std::min(home->first_seen, obs.observed_at);
    home->last_seen = std::max(home->last_seen, obs.observed_at);
    if (!home->thumbnail && obs.thumbnail) home->thumbnail = obs.thumbnail;
  }
  return clusters;
}

MergeResult merge_into_registry(std::span<const Cluster> clusters, std::vector<Pothole> existing,
                                std::int64_t next_id, double threshold_m) {
  MergeResult result;
  std::sort(existing.begin(), existing.end(),
            [](const Pothole& a, const Pothole& b) { return a.id < b.id; });

  for (std::size_t ci = 0; ci < clusters.size(); ++ci) {
    const Cluster& c = clusters[ci];
    const LatLon centroid = c.centroid();

    // Strict '<' over ascending ids keeps the smallest id on ties.
    auto nearest = [&](PotholeStatus wanted) -> Pothole* {
      Pothole* best = nullptr;
      double best_d = std::numeric_limits<double>::infinity();
      for (auto& p : existing) {
        if (p.status != wanted) continue;
        const double d = haversine_m(centroid, p.position);
        if (d <= threshold_m && d < best_d) {
          best = &p;
          best_d = d;
        }
      }
      return best;
    };

    const auto n = static_cast<std::int64_t>(c.size());
    if (Pothole* p = nearest(PotholeStatus::Active)) {
      p->detection_count += n;
      p->severity = std::max(p->severity, c.severity);
      p->first_seen = std::min(p->first_seen, c.first_seen);
      p->last_seen = std::max(p->last_seen, c.last_seen);
      if (!p->thumbnail) p->thumbnail = c.thumbnail;
      result.mutations.push_back({RegistryMutation::Kind::Merged, ci, *p});
      result.cluster_pothole.push_back(p->id);
    } else if (Pothole* p = nearest(PotholeStatus::Repaired)) {
      p->status = PotholeStatus::Active;
      p->detection_count += n;
      p->severity = c.severity;
      p->last_seen = std::max(p->last_seen, c.last_seen);
      if (!p->thumbnail) p->thumbnail = c.thumbnail;
      result.mutations.push_back({RegistryMutation::Kind::Reopened, ci, *p});
      result.cluster_pothole.push_back(p->id);
    } else {
      Pothole fresh;
      fresh.id = next_id++;
      fresh.position = round5(centroid);
      fresh.severity = c.severity;
      fresh.status = PotholeStatus::Active;
      fresh.first_seen = c.first_seen;
      fresh.last_seen = c.last_seen;
      fresh.detection_count = n;
      fresh.thumbnail = c.thumbnail;
      existing.push_back(fresh);
      result.mutations.push_back({RegistryMutation::Kind::Created, ci, fresh});
      result.cluster_pothole.push_back(fresh.id);
    }
  }

  // A pothole touched by several clusters keeps only its final state.
  std::map<std::int64_t, std::size_t> last_index;
  for (std::size_t i = 0; i < result.mutations.size(); ++i) {
    last_index[result.mutations[i].pothole.id] = i;
  }
  for (auto& m : result.mutations) {
    m.pothole = result.mutations[last_index[m.pothole.id]].pothole;
  }
  return result;
}

}  // namespace roadwatch
