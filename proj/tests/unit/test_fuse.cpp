#include <doctest.h>

#include <algorithm>
#include <random>

#include "../support/oracles.hpp"
#include "treegeo/fuse.hpp"

using namespace treegeo;

namespace {

ProjectedDetection det(GeoPoint p, double score, std::string pano) { return {p, score, std::move(pano), 5.0}; }

}  // namespace

TEST_CASE("fuse: empty and single inputs") {
  CHECK(fuse_detections({}).empty());
  const GeoPoint p{37.0, -122.0};
  const auto out = fuse_detections({det(p, 0.8, "a")});
  REQUIRE(out.size() == 1);
  CHECK(out[0].point == p);
  CHECK(out[0].member_count == 1);
  CHECK(out[0].fused_score == doctest::Approx(0.8));
  CHECK(out[0].member_panos == std::set<std::string>{"a"});
}

TEST_CASE("fuse: equal scores 1 m apart") {
  const GeoPoint a{37.0, -122.0};
  const GeoPoint b = offset(a, 90.0, 1.0);
  const auto out = fuse_detections({det(a, 0.5, "p"), det(b, 0.5, "p")});
  REQUIRE(out.size() == 1);
  CHECK(out[0].member_count == 2);
  // Weights are taken relative to the chosen center (score / (1 + 0) vs
  // score / (1 + 1)), so the point sits 1/3 m from it. Equal aggregates and
  // equal panoramas: the tie goes to the lower (lat, lon), i.e. a.
  CHECK(std::abs(local_distance_m(out[0].point, a) - 1.0 / 3.0) < 1e-9);
  CHECK(std::abs(local_distance_m(out[0].point, b) - 2.0 / 3.0) < 1e-9);
  // With a dominant smoothing term the weights equalize: midpoint.
  FuseOptions flat;
  flat.idw_epsilon_m = 1e9;
  const auto mid = fuse_detections({det(a, 0.5, "p"), det(b, 0.5, "p")}, flat);
  CHECK(std::abs(local_distance_m(mid[0].point, a) - 0.5) < 1e-6);
}

TEST_CASE("fuse: three-detection worked example") {
  // Hand evaluation in local meters (A at origin, B 0.5 m east, C 10 m north):
  //   S_A = 0.9/1 + 0.8/1.5 = 1.4333..., S_B = 0.8 + 0.9/1.5 = 1.4, S_C = 0.95
  //   pick A; cluster {A, B}; centroid x = 0.5 * (0.8/1.5) / S_A = 0.186046511627907 m
  //   then {C} alone with S = 0.95.
  const GeoPoint A{37.0, -122.0};
  const GeoPoint B{37.0, A.lon + 0.5 / (oracle::kR * oracle::kDeg * std::cos(37.0 * oracle::kDeg))};
  const GeoPoint C{A.lat + 10.0 / (oracle::kR * oracle::kDeg), -122.0};
  REQUIRE(std::abs(oracle::equirect_m(A, B) - 0.5) < 1e-9);  // degrees carry ~1e-9 m resolution

  const auto out = fuse_detections({det(A, 0.9, "pa"), det(B, 0.8, "pb"), det(C, 0.95, "pc")});
  REQUIRE(out.size() == 2);
  CHECK(out[0].members == std::vector<std::size_t>{0, 1});
  CHECK(out[1].members == std::vector<std::size_t>{2});
  CHECK(std::abs(out[0].fused_score - 1.4333333333333333) < 1e-9);
  CHECK(std::abs(out[1].fused_score - 0.95) < 1e-12);

  const double wb = 0.8 / 1.5;
  const double expected_lon = A.lon + wb * (B.lon - A.lon) / (0.9 + wb);
  const GeoPoint expected{A.lat, expected_lon};
  CHECK(oracle::equirect_m(out[0].point, expected) < 1e-9);
  CHECK(std::abs(oracle::equirect_m(A, out[0].point) - 0.18604651162790697) < 1e-9);
  CHECK(oracle::equirect_m(out[1].point, C) < 1e-9);
}

TEST_CASE("fuse: detections farther apart than the radius stay separate") {
  const GeoPoint a{37.0, -122.0};
  const auto out = fuse_detections({det(a, 0.5, "p"), det(offset(a, 0.0, 4.5), 0.6, "q")});
  REQUIRE(out.size() == 2);
  CHECK(out[0].fused_score > out[1].fused_score);
}

TEST_CASE("fuse: idw weight and parameters") {
  FuseOptions o;
  CHECK(idw_weight(0.8, 0.0, o) == doctest::Approx(0.8));
  CHECK(idw_weight(0.8, 1.0, o) == doctest::Approx(0.4));
  o.idw_exponent = 2.0;
  CHECK(idw_weight(0.8, 1.0, o) == doctest::Approx(0.2));
  o.radius_m = 0.0;
  CHECK_THROWS_AS(fuse_detections({det({0, 0}, 1, "a")}, o), std::invalid_argument);
}

TEST_CASE("fuse: ties break by panorama id, not input order") {
  const GeoPoint a{37.0, -122.0};
  const GeoPoint b = offset(a, 90.0, 3.0);
  const auto one = fuse_detections({det(a, 0.7, "zz"), det(b, 0.7, "aa")});
  const auto two = fuse_detections({det(b, 0.7, "aa"), det(a, 0.7, "zz")});
  REQUIRE(one.size() == 1);
  REQUIRE(two.size() == 1);
  // equal aggregates; "aa" wins, so the centroid leans toward b
  CHECK(local_distance_m(one[0].point, b) < local_distance_m(one[0].point, a));
  CHECK(one[0].point == two[0].point);
}

TEST_CASE("street filter matches a brute-force nearest-camera check") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> brg(0.0, 360.0), d(0.0, 120.0);
  const GeoPoint o{51.5, -0.1};
  std::vector<GeoPoint> cams;
  for (int i = 0; i < 5; ++i) cams.push_back(offset(o, brg(rng), d(rng)));
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<FusedTree> trees;
    for (int i = 0; i < 10; ++i) {
      FusedTree t;
      t.point = offset(o, brg(rng), d(rng) * 1.5);
      t.fused_score = i;
      trees.push_back(t);
    }
    const auto kept = filter_far_from_street(trees, cams, 50.0);
    std::vector<double> expected;
    for (const auto& t : trees) {
      double best = 1e300;
      for (const auto& c : cams) best = std::min(best, oracle::equirect_m(t.point, c));
      if (best <= 50.0) expected.push_back(t.fused_score);
    }
    std::vector<double> got;
    for (const auto& t : kept) got.push_back(t.fused_score);
    CHECK(got == expected);
  }
}

TEST_CASE("street filter: simple cases") {
  const GeoPoint c{0.0, 0.0};
  FusedTree near, far;
  near.point = offset(c, 10.0, 5.0);
  far.point = offset(c, 10.0, 60.0);
  CHECK(filter_far_from_street({near, far}, {c}).size() == 1);
  CHECK(filter_far_from_street({}, {}).empty());
  CHECK_THROWS_AS(filter_far_from_street({near}, {}), std::invalid_argument);
}
