#include <doctest.h>

#include <atomic>
#include <filesystem>
#include <random>
#include <sstream>

#include "../support/oracles.hpp"
#include "treegeo/geocode.hpp"
#include "treegeo/io.hpp"

using namespace treegeo;

namespace {

std::vector<AddressGroup> groups_of(int n) {
  std::vector<AddressGroup> g;
  for (int i = 0; i < n; ++i) g.push_back({"ADDR " + std::to_string(i), {"t" + std::to_string(i)}});
  return g;
}

class CountingGeocoder : public Geocoder {
 public:
  std::atomic<int> calls{0};
  std::string fail_on;
  GeocodeResponse resolve(const std::string& address) override {
    ++calls;
    if (address == fail_on) return GeocodeResponse::failed();
    return {GeoPoint{37.0, -122.0 + 0.0001 * static_cast<double>(address.size())}, Accuracy::Rooftop};
  }
};

// Fails with a transport error the first `failures` times it sees each address.
class FlakyGeocoder : public Geocoder {
 public:
  explicit FlakyGeocoder(int failures) : failures_(failures) {}
  int calls = 0;
  GeocodeResponse resolve(const std::string& address) override {
    ++calls;
    if (seen_[address]++ < failures_) throw TransportError("timeout");
    return {GeoPoint{1.0, 2.0}, Accuracy::Interpolated};
  }

 private:
  int failures_;
  std::map<std::string, int> seen_;
};

GeocodedAddress rec(double lat, double lon) { return {"a", GeoPoint{lat, lon}, Accuracy::Rooftop, 1, false}; }

std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("treegeo_unit_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("geocode: warm cache means zero client calls") {
  const auto groups = groups_of(10);
  GeocodeCache cache;
  for (const auto& g : groups) cache.store(g.address, {GeoPoint{1, 1}, Accuracy::Rooftop});
  CountingGeocoder client;
  const auto run = geocode_all(groups, client, cache);
  CHECK(client.calls == 0);
  CHECK(run.client_calls == 0);
  CHECK(run.cache_hits == 10);
  CHECK(run.records.size() == 10);
}

TEST_CASE("geocode: one semantic failure among ten") {
  const auto groups = groups_of(10);
  GeocodeCache cache;
  CountingGeocoder client;
  client.fail_on = "ADDR 3";
  const auto run = geocode_all(groups, client, cache);
  REQUIRE(run.records.size() == 10);
  int failed = 0;
  for (const auto& r : run.records) {
    if (r.accuracy == Accuracy::Failed) {
      ++failed;
      CHECK(r.address == "ADDR 3");
      CHECK_FALSE(r.point);
    }
  }
  CHECK(failed == 1);
  CHECK(run.semantic_failures == 1);
  CHECK(run.transport_failures == 0);
  // FAILED answers are cached too.
  CHECK(cache.lookup("ADDR 3").has_value());
}

TEST_CASE("geocode: file-backed client reproduces its fixture exactly") {
  std::istringstream fixture(
      "1 OAK STREET\t37.100000001\t-122.100000002\tROOFTOP\n"
      "2 OAK STREET\t37.200000000\t-122.200000000\tROOFTOP\n"
      "3 OAK STREET\t37.300000000\t-122.300000000\tROOFTOP\n"
      "4 OAK STREET\t37.400000000\t-122.400000000\tROOFTOP\n"
      "5 OAK STREET\t37.500000000\t-122.500000000\tROOFTOP\n");
  FileGeocoder client(GeocodeCache::parse(fixture));
  std::vector<AddressGroup> groups;
  for (int i = 1; i <= 5; ++i) groups.push_back({std::to_string(i) + " OAK STREET", {"t"}});
  GeocodeCache cache;
  const auto run = geocode_all(groups, client, cache);
  REQUIRE(run.records.size() == 5);
  const std::vector<GeoPoint> expected{
      {37.100000001, -122.100000002}, {37.2, -122.2}, {37.3, -122.3}, {37.4, -122.4}, {37.5, -122.5}};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(run.records[i].accuracy == Accuracy::Rooftop);
    CHECK(run.records[i].point == expected[i]);
  }
}

TEST_CASE("geocode: transport failures retry, then fail without caching") {
  const auto groups = groups_of(3);
  SUBCASE("recovers within the retry budget") {
    FlakyGeocoder client(2);
    GeocodeCache cache;
    GeocodeOptions opt;
    opt.max_retries = 2;
    const auto run = geocode_all(groups, client, cache, opt);
    CHECK(run.transport_failures == 0);
    CHECK(run.client_calls == 9);
    for (const auto& r : run.records) CHECK(r.accuracy == Accuracy::Interpolated);
  }
  SUBCASE("exhausts the budget") {
    FlakyGeocoder client(5);
    GeocodeCache cache;
    GeocodeOptions opt;
    opt.max_retries = 1;
    const auto run = geocode_all(groups, client, cache, opt);
    CHECK(run.transport_failures == 3);
    CHECK(run.semantic_failures == 0);
    CHECK(run.client_calls == 6);
    CHECK(cache.size() == 0);
    for (const auto& r : run.records) CHECK(r.accuracy == Accuracy::Failed);
  }
}

TEST_CASE("geocode: concurrency gives the same records") {
  const auto groups = groups_of(200);
  GeocodeCache c1, c2;
  CountingGeocoder a, b;
  GeocodeOptions par;
  par.concurrency = 8;
  const auto r1 = geocode_all(groups, a, c1);
  const auto r2 = geocode_all(groups, b, c2, par);
  REQUIRE(r1.records.size() == r2.records.size());
  for (std::size_t i = 0; i < r1.records.size(); ++i) {
    CHECK(r1.records[i].address == r2.records[i].address);
    CHECK(r1.records[i].point == r2.records[i].point);
  }
  CHECK(c1.serialize() == c2.serialize());
  CHECK(b.calls == 200);
}

TEST_CASE("geocode: client exceptions propagate from worker threads") {
  class Broken : public Geocoder {
   public:
    GeocodeResponse resolve(const std::string&) override { throw std::logic_error("boom"); }
  } client;
  GeocodeCache cache;
  GeocodeOptions par;
  par.concurrency = 4;
  CHECK_THROWS_AS(geocode_all(groups_of(20), client, cache, par), std::logic_error);
}

TEST_CASE("cache: file format round trip and missing file") {
  const auto dir = temp_dir("cache");
  CHECK(GeocodeCache::load(dir / "nope.tsv").size() == 0);
  GeocodeCache cache;
  cache.store("B ST", {GeoPoint{37.123456789, -122.000000001}, Accuracy::Approximate});
  cache.store("A ST", GeocodeResponse::failed());
  cache.save(dir / "c.tsv");
  const std::string text = cache.serialize();
  CHECK(text == "A ST\t\t\tFAILED\nB ST\t37.123456789\t-122.000000001\tAPPROXIMATE\n");
  const auto back = GeocodeCache::load(dir / "c.tsv");
  CHECK(back.serialize() == text);
  CHECK(back.lookup("B ST")->point == GeoPoint{37.123456789, -122.000000001});
  CHECK_FALSE(back.lookup("A ST")->point);
}

TEST_CASE("cache: malformed lines report the line number") {
  std::istringstream in("A\t1\t2\tROOFTOP\nB\t1\t2\n");
  try {
    GeocodeCache::parse(in, "cache.tsv");
    FAIL("expected an error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("cache.tsv:2") != std::string::npos);
  }
  std::istringstream bad("A\t1\t2\tGUESS\n");
  CHECK_THROWS_AS(GeocodeCache::parse(bad), InputError);
  CHECK_THROWS_AS(FileGeocoder::load("/nonexistent/geocoder.tsv"), InputError);
}

TEST_CASE("zscore: degenerate inputs flag nothing") {
  std::vector<GeocodedAddress> same(20, rec(37.0, -122.0));
  CHECK(zscore_filter(same).outliers.empty());
  std::vector<GeocodedAddress> one{rec(37.0, -122.0)};
  CHECK(zscore_filter(one).outliers.empty());
  // sigma is zero on one axis only
  std::vector<GeocodedAddress> line;
  for (int i = 0; i < 30; ++i) line.push_back(rec(37.0, -122.0 + 0.001 * i));
  line.push_back(rec(37.0, -121.0));
  const auto part = zscore_filter(line);
  CHECK(part.outliers.size() == 1);
  CHECK(part.stats.sigma_lat == 0.0);
}

TEST_CASE("zscore: 100 tight points plus one distant point") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> j(-0.001, 0.001);
  std::vector<GeocodedAddress> recs;
  for (int i = 0; i < 100; ++i) recs.push_back(rec(37.0 + j(rng), -122.0 + j(rng)));
  recs.push_back(rec(38.0, -122.0));
  recs.back().address = "far";
  const auto part = zscore_filter(recs);
  REQUIRE(part.outliers.size() == 1);
  CHECK(part.outliers[0].address == "far");
  CHECK(part.inliers.size() == 100);
}

TEST_CASE("zscore: flags match the formula evaluated directly; points below the mean count") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 0.01);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<GeocodedAddress> recs;
    std::vector<GeoPoint> pts;
    for (int i = 0; i < 60; ++i) {
      pts.push_back({40.0 + n(rng), -75.0 + n(rng)});
      if (i % 17 == 0) pts.back().lat -= 0.08;  // south of the mean
    }
    for (const auto& p : pts) recs.push_back(rec(p.lat, p.lon));
    const auto expected = oracle::zscore_flags(pts, 3.0);
    const auto stats = zscore_stats(recs);
    for (std::size_t i = 0; i < pts.size(); ++i) CHECK(is_zscore_outlier(pts[i], stats, 3.0) == expected[i]);
  }
}

TEST_CASE("zscore: single pass, partition, order preserved, FAILED rejected") {
  std::vector<GeocodedAddress> recs;
  for (int i = 0; i < 50; ++i) recs.push_back(rec(10.0 + 0.0001 * (i % 5), 10.0));
  recs.push_back(rec(10.1, 10.0));
  recs.push_back(rec(10.1, 10.0));
  recs.push_back(rec(10.03, 10.0));  // masked by the two above on a single pass
  for (std::size_t i = 0; i < recs.size(); ++i) recs[i].address = std::to_string(i);
  const auto part = zscore_filter(recs);
  CHECK(part.inliers.size() + part.outliers.size() == recs.size());
  CHECK(part.outliers.size() == 2);
  // A second pass over the inliers would flag the masked point; the filter does not iterate.
  CHECK(zscore_filter(part.inliers).outliers.size() == 1);
  for (std::size_t i = 1; i < part.inliers.size(); ++i) {
    CHECK(std::stoi(part.inliers[i - 1].address) < std::stoi(part.inliers[i].address));
  }
  std::vector<GeocodedAddress> bad = recs;
  bad.push_back({"x", std::nullopt, Accuracy::Failed, 1, false});
  CHECK_THROWS_AS(zscore_filter(bad), std::invalid_argument);
}

TEST_CASE("accuracy names") {
  for (auto a : {Accuracy::Rooftop, Accuracy::Interpolated, Accuracy::Approximate, Accuracy::Failed}) {
    CHECK(parse_accuracy(to_string(a)) == a);
  }
  CHECK_FALSE(parse_accuracy("rooftop_ish"));
}
