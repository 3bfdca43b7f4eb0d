#include <gtest/gtest.h>
#include <httplib.h>

#include <random>
#include <thread>

#include "roadwatch/segment.hpp"
#include "support.hpp"

using namespace roadwatch;
using rwtest::at;
using rwtest::vector_distance_m;

namespace {

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

// Minimum over 1,000 samples per leg, vector-distance metric.
double sampled_polyline_distance(LatLon p, const Polyline& line) {
  double best = 1e300;
  const auto& v = line.vertices();
  for (std::size_t k = 1; k < v.size(); ++k) {
    for (int i = 0; i <= 1000; ++i) {
      const double t = i / 1000.0;
      best = std::min(best, vector_distance_m(p, {v[k - 1].lat + t * (v[k].lat - v[k - 1].lat),
                                                  v[k - 1].lon + t * (v[k].lon - v[k - 1].lon)}));
    }
  }
  return best;
}

LatLon north_of(LatLon p, double metres) { return {p.lat + metres / kEarthRadiusM * 180.0 / M_PI, p.lon}; }

const char* kThreeVertexRoute =
    R"({"code":"Ok","routes":[{"geometry":{"type":"LineString","coordinates":[[85.2,20.1],[85.25,20.15],[85.3,20.2]]}}]})";

// Routing stub served over HTTP for the OSRM client.
struct OsrmStub {
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::string last_target;
  std::string body = kThreeVertexRoute;
  int status = 200;

  OsrmStub() {
    server.Get(R"(/route/v1/driving/.*)", [this](const httplib::Request& req, httplib::Response& res) {
      last_target = req.target;
      res.status = status;
      res.set_content(body, "application/json");
    });
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~OsrmStub() {
    server.stop();
    thread.join();
  }
  std::string url() const { return "http://127.0.0.1:" + std::to_string(port); }
};

}  // namespace

TEST(Osrm, RequestTargetIsLonFirst) {
  EXPECT_EQ(osrm_route_target({20.1, 85.2}, {20.2, 85.3}),
            "/route/v1/driving/85.2,20.1;85.3,20.2?overview=full&geometries=geojson");
}

TEST(Osrm, ResponseSwappedToLatFirst) {
  const auto line = parse_osrm_response(kThreeVertexRoute);
  ASSERT_EQ(line.size(), 3u);
  EXPECT_EQ(line.vertices()[0], (LatLon{20.1, 85.2}));
  EXPECT_EQ(line.vertices()[1], (LatLon{20.15, 85.25}));
  EXPECT_EQ(line.vertices()[2], (LatLon{20.2, 85.3}));
}

TEST(Osrm, NoRouteCode) {
  EXPECT_EQ(code_of([] { parse_osrm_response(R"({"code":"NoRoute","routes":[]})"); }), ErrorCode::NoRoute);
  EXPECT_EQ(code_of([] { parse_osrm_response("<html>"); }), ErrorCode::ProviderUnreachable);
}

TEST(Osrm, HttpClientAgainstStub) {
  OsrmStub stub;
  OsrmRouter router(stub.url(), 2);
  const auto line = router.route({20.1, 85.2}, {20.2, 85.3});
  EXPECT_EQ(stub.last_target, "/route/v1/driving/85.2,20.1;85.3,20.2?overview=full&geometries=geojson");
  EXPECT_EQ(line.size(), 3u);

  stub.status = 400;
  stub.body = R"({"code":"NoRoute","message":"Impossible route"})";
  EXPECT_EQ(code_of([&] { router.route({20.1, 85.2}, {20.2, 85.3}); }), ErrorCode::NoRoute);
  stub.status = 503;
  EXPECT_EQ(code_of([&] { router.route({20.1, 85.2}, {20.2, 85.3}); }), ErrorCode::ProviderUnreachable);
}

TEST(Osrm, UnreachableProvider) {
  int port;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  OsrmRouter router("http://127.0.0.1:" + std::to_string(port), 1);
  EXPECT_EQ(code_of([&] { router.route({20.1, 85.2}, {20.2, 85.3}); }), ErrorCode::ProviderUnreachable);
}

TEST(BuildGeometry, StraightOneKilometre) {
  const LatLon a{20.0, 85.0};
  const LatLon b = north_of(a, 1000.0);
  const auto line = build_geometry(a, b, SegmentMode::Straight, false, nullptr);
  ASSERT_EQ(line.size(), 2u);
  EXPECT_NEAR(polyline_length_m(line), 1000.0, 0.01);
  EXPECT_NEAR(polyline_length_m(line), vector_distance_m(a, b), 1e-3);
}

TEST(BuildGeometry, RoutedPassesStubThrough) {
  rwtest::StubRouter router;
  router.vertices = {{20.1, 85.2}, {20.12, 85.22}, {20.2, 85.3}};
  const auto line = build_geometry({20.1, 85.2}, {20.2, 85.3}, SegmentMode::Routed, false, &router);
  EXPECT_EQ(line.vertices(), router.vertices);
  EXPECT_EQ(router.calls, 1);
}

TEST(BuildGeometry, FallbackIsOptIn) {
  rwtest::StubRouter router;
  router.fail = ErrorCode::NoRoute;
  EXPECT_EQ(code_of([&] { build_geometry({20.1, 85.2}, {20.2, 85.3}, SegmentMode::Routed, false, &router); }),
            ErrorCode::NoRoute);
  const auto line = build_geometry({20.1, 85.2}, {20.2, 85.3}, SegmentMode::Routed, true, &router);
  EXPECT_EQ(line.vertices(), (std::vector<LatLon>{{20.1, 85.2}, {20.2, 85.3}}));
  EXPECT_EQ(code_of([] { build_geometry({20.1, 85.2}, {20.2, 85.3}, SegmentMode::Routed, false, nullptr); }),
            ErrorCode::ProviderUnreachable);
  EXPECT_EQ(code_of([] { build_geometry({20.1, 85.2}, {20.1, 85.2}, SegmentMode::Straight, true, nullptr); }),
            ErrorCode::InvalidGeometry);
}

TEST(Contract, Validation) {
  EXPECT_NO_THROW(validate(rwtest::contract()));
  auto c = rwtest::contract("2023-12-31");
  EXPECT_EQ(code_of([&] { validate(c); }), ErrorCode::InvalidContract);
  c = rwtest::contract();
  c.warranty_end = c.construction_date;
  EXPECT_NO_THROW(validate(c));
  c.budget = -1;
  EXPECT_EQ(code_of([&] { validate(c); }), ErrorCode::InvalidContract);
  c = rwtest::contract();
  c.contractor_name.clear();
  EXPECT_EQ(code_of([&] { validate(c); }), ErrorCode::InvalidContract);
}

TEST(Attribution, VertexHitIsZero) {
  auto s = rwtest::straight_segment(20.0, 85.0, 500);
  s.id = 3;
  const auto a = attribute_pothole(rwtest::pothole(1, s.start, at("2025-08-13T00:00:00Z")), std::vector{s});
  ASSERT_TRUE(a);
  EXPECT_EQ(a->segment_id, 3);
  EXPECT_NEAR(a->distance_m, 0.0, 1e-9);
}

TEST(Attribution, EightMetresBeatsThirty) {
  auto a = rwtest::straight_segment(20.0, 85.0, 500);
  a.id = 1;
  auto b = rwtest::straight_segment(20.0, 85.0, 500);
  b.id = 2;
  const LatLon mid{20.0, (a.start.lon + a.end.lon) / 2};
  // B runs 38 m north of A; the pothole sits 8 m north of A.
  for (auto* v : {&b.start, &b.end}) *v = north_of(*v, 38.0);
  b.geometry = Polyline({b.start, b.end});
  const auto p = rwtest::pothole(7, north_of(mid, 8.0), at("2025-08-13T00:00:00Z"));
  EXPECT_NEAR(sampled_polyline_distance(p.position, a.geometry), 8.0, 0.01);
  EXPECT_NEAR(sampled_polyline_distance(p.position, b.geometry), 30.0, 0.01);
  const auto got = attribute_pothole(p, std::vector{b, a});
  ASSERT_TRUE(got);
  EXPECT_EQ(got->segment_id, 1);
  EXPECT_NEAR(got->distance_m, sampled_polyline_distance(p.position, a.geometry), 0.02);
}

TEST(Attribution, FortyMetresIsUnattributed) {
  auto a = rwtest::straight_segment(20.0, 85.0, 500);
  a.id = 1;
  const LatLon mid{20.0, (a.start.lon + a.end.lon) / 2};
  const auto p = rwtest::pothole(7, north_of(mid, 40.0), at("2025-08-13T00:00:00Z"));
  EXPECT_NEAR(sampled_polyline_distance(p.position, a.geometry), 40.0, 0.01);
  EXPECT_FALSE(attribute_pothole(p, std::vector{a}));
}

TEST(Attribution, TieGoesToSmallerId) {
  auto a = rwtest::straight_segment(20.0, 85.0, 500);
  auto b = a;
  a.id = 9;
  b.id = 4;
  const auto p = rwtest::pothole(1, north_of(a.start, 3.0), at("2025-08-13T00:00:00Z"));
  EXPECT_EQ(attribute_pothole(p, std::vector{a, b})->segment_id, 4);
}

TEST(Attribution, RandomPotholesMatchSamplingOracle) {
  std::mt19937_64 rng(51);
  std::uniform_real_distribution<double> d(-0.0004, 0.0004), jitter(-0.0003, 0.0003);
  for (int round = 0; round < 200; ++round) {
    std::vector<RoadSegment> segments;
    for (int k = 0; k < 3; ++k) {
      RoadSegment s;
      s.id = k + 1;
      std::vector<LatLon> v{{20.3 + d(rng), 85.8 + d(rng)}};
      for (int j = 0; j < 3; ++j) v.push_back({v.back().lat + d(rng), v.back().lon + d(rng)});
      s.geometry = Polyline(v);
      segments.push_back(s);
    }
    const auto p = rwtest::pothole(1, {20.3 + jitter(rng), 85.8 + jitter(rng)}, at("2025-08-13T00:00:00Z"));
    std::vector<double> oracle;
    for (const auto& s : segments) oracle.push_back(sampled_polyline_distance(p.position, s.geometry));
    const double best = *std::min_element(oracle.begin(), oracle.end());
    const auto got = attribute_pothole(p, segments);
    // Keep clear of the radius edge where sampling error could flip the answer.
    if (std::abs(best - kAttributionRadiusM) < 0.1) continue;
    if (best > kAttributionRadiusM) {
      ASSERT_FALSE(got) << round;
      continue;
    }
    ASSERT_TRUE(got) << round;
    ASSERT_GE(got->distance_m, 0.0);
    ASSERT_LE(got->distance_m, kAttributionRadiusM);
    ASSERT_NEAR(got->distance_m, oracle[std::size_t(got->segment_id - 1)], 0.05);
    ASSERT_LE(got->distance_m, best + 0.05);
  }
}

TEST(Attribution, FixedPointOnUnchangedRegistry) {
  std::vector<RoadSegment> segments;
  for (int k = 0; k < 4; ++k) {
    auto s = rwtest::straight_segment(20.0 + k * 0.0001, 85.0, 300);
    s.id = k + 1;
    segments.push_back(s);
  }
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> lat(19.9998, 20.0005), lon(85.0, 85.003);
  for (int i = 0; i < 200; ++i) {
    auto p = rwtest::pothole(i + 1, {lat(rng), lon(rng)}, at("2025-08-13T00:00:00Z"));
    const auto first = attribute_pothole(p, segments);
    p.segment_id = first ? std::optional(first->segment_id) : std::nullopt;
    const auto second = attribute_pothole(p, segments);
    ASSERT_EQ(first.has_value(), second.has_value());
    if (first) ASSERT_EQ(first->segment_id, second->segment_id);
  }
}
