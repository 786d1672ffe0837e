#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "treegeo/geo.hpp"
#include "treegeo/inventory.hpp"

namespace treegeo {

/// How a geocoder derived a coordinate, best first.
enum class Accuracy { Rooftop, Interpolated, Approximate, Failed };

std::string_view to_string(Accuracy a) noexcept;
std::optional<Accuracy> parse_accuracy(std::string_view name) noexcept;

struct GeocodeResponse {
  std::optional<GeoPoint> point;  // empty iff accuracy == Failed
  Accuracy accuracy = Accuracy::Failed;

  static GeocodeResponse failed() { return {}; }
};

/// Raised by a Geocoder when the lookup could not be performed at all
/// (network, quota). Distinct from an address the service cannot resolve.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Resolves a normalized address. Implementations must be safe to call from
/// several threads when geocode_all runs with concurrency > 1.
class Geocoder {
 public:
  virtual ~Geocoder() = default;
  virtual GeocodeResponse resolve(const std::string& address) = 0;
};

/// Persistent address -> response store. Text form is one record per line:
/// address<TAB>lat<TAB>lon<TAB>ACCURACY, coordinates with 9 decimals and
/// empty for FAILED entries. Records are written sorted by address.
class GeocodeCache {
 public:
  GeocodeCache() = default;
  GeocodeCache(GeocodeCache&& other) noexcept;
  GeocodeCache& operator=(GeocodeCache&& other) noexcept;

  /// Missing file yields an empty cache.
  static GeocodeCache load(const std::filesystem::path& path);
  static GeocodeCache parse(std::istream& in, std::string_view source_name = "geocode cache");

  std::optional<GeocodeResponse> lookup(const std::string& address) const;
  void store(const std::string& address, const GeocodeResponse& response);

  std::size_t size() const;
  std::string serialize() const;
  void save(const std::filesystem::path& path) const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, GeocodeResponse> entries_;
};

/// Offline geocoder backed by a file in the cache format. Addresses absent
/// from the file resolve to FAILED.
class FileGeocoder : public Geocoder {
 public:
  explicit FileGeocoder(GeocodeCache table) : table_(std::move(table)) {}
  static FileGeocoder load(const std::filesystem::path& path);

  GeocodeResponse resolve(const std::string& address) override;

 private:
  GeocodeCache table_;
};

struct GeocodedAddress {
  std::string address;
  std::optional<GeoPoint> point;
  Accuracy accuracy = Accuracy::Failed;
  int capacity = 1;
  bool outlier = false;  // set by the pipeline from zscore_filter
};

struct GeocodeOptions {
  int max_retries = 2;
  int concurrency = 1;
};

struct GeocodeRun {
  std::vector<GeocodedAddress> records;  // same order as the input groups
  std::size_t cache_hits = 0;
  std::size_t client_calls = 0;
  std::size_t semantic_failures = 0;
  std::size_t transport_failures = 0;
};

/// One record per group. Cache hits skip the client; successful and
/// semantically failed lookups are written back to the cache, transport
/// failures are not.
GeocodeRun geocode_all(const std::vector<AddressGroup>& groups, Geocoder& client, GeocodeCache& cache,
                       const GeocodeOptions& options = {});

struct ZScoreStats {
  double mu_lat = 0.0;
  double mu_lon = 0.0;
  double sigma_lat = 0.0;  // population standard deviation
  double sigma_lon = 0.0;
  std::size_t n = 0;
};

struct ZScorePartition {
  std::vector<GeocodedAddress> inliers;
  std::vector<GeocodedAddress> outliers;
  ZScoreStats stats;
};

/// Mean and population standard deviation of the coordinates. Every record
/// must carry a point.
ZScoreStats zscore_stats(std::span<const GeocodedAddress> records);

/// True when |z| exceeds `threshold` on either axis. An axis with zero
/// dispersion flags nothing.
bool is_zscore_outlier(const GeoPoint& p, const ZScoreStats& stats, double threshold) noexcept;

/// Single pass: statistics are computed once over the whole input and never
/// re-estimated after removing outliers. Throws std::invalid_argument for
/// FAILED records. Relative order is preserved in both outputs.
ZScorePartition zscore_filter(std::span<const GeocodedAddress> records, double threshold = 3.0);

}  // namespace treegeo
