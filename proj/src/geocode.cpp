#include "treegeo/geocode.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <thread>

#include <fmt/format.h>

#include "treegeo/io.hpp"

namespace treegeo {

std::string_view to_string(Accuracy a) noexcept {
  switch (a) {
    case Accuracy::Rooftop:
      return "ROOFTOP";
    case Accuracy::Interpolated:
      return "INTERPOLATED";
    case Accuracy::Approximate:
      return "APPROXIMATE";
    case Accuracy::Failed:
      return "FAILED";
  }
  return "FAILED";
}

std::optional<Accuracy> parse_accuracy(std::string_view name) noexcept {
  for (auto a : {Accuracy::Rooftop, Accuracy::Interpolated, Accuracy::Approximate, Accuracy::Failed}) {
    if (to_string(a) == name) return a;
  }
  return std::nullopt;
}

GeocodeCache::GeocodeCache(GeocodeCache&& other) noexcept {
  std::lock_guard lock(other.mutex_);
  entries_ = std::move(other.entries_);
}

GeocodeCache& GeocodeCache::operator=(GeocodeCache&& other) noexcept {
  if (this != &other) {
    std::scoped_lock lock(mutex_, other.mutex_);
    entries_ = std::move(other.entries_);
  }
  return *this;
}

GeocodeCache GeocodeCache::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return {};
  auto in = io::open_input(path);
  return parse(in, path.string());
}

GeocodeCache GeocodeCache::parse(std::istream& in, std::string_view source_name) {
  GeocodeCache cache;
  std::string line;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    first = false;
    if (line.empty()) continue;
    const auto fields = io::split_row(line, '\t');
    if (fields.size() != 4) {
      throw InputError(fmt::format("{}:{}: expected 4 tab-separated fields, got {}", source_name, line_no,
                                   fields.size()));
    }
    const auto accuracy = parse_accuracy(io::trim(fields[3]));
    if (!accuracy) {
      throw InputError(fmt::format("{}:{}: unknown accuracy '{}'", source_name, line_no, fields[3]));
    }
    GeocodeResponse response;
    response.accuracy = *accuracy;
    if (*accuracy != Accuracy::Failed) {
      const auto lat = io::parse_double(fields[1]);
      const auto lon = io::parse_double(fields[2]);
      if (!lat || !lon || !is_valid(GeoPoint{*lat, *lon})) {
        throw InputError(fmt::format("{}:{}: invalid coordinate", source_name, line_no));
      }
      response.point = GeoPoint{*lat, *lon};
    }
    cache.entries_[fields[0]] = response;
  }
  return cache;
}

std::optional<GeocodeResponse> GeocodeCache::lookup(const std::string& address) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(address);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void GeocodeCache::store(const std::string& address, const GeocodeResponse& response) {
  std::lock_guard lock(mutex_);
  entries_[address] = response;
}

std::size_t GeocodeCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::string GeocodeCache::serialize() const {
  std::lock_guard lock(mutex_);
  std::string out;
  for (const auto& [address, r] : entries_) {
    if (r.point) {
      out += fmt::format("{}\t{}\t{}\t{}\n", address, io::fixed(r.point->lat, 9), io::fixed(r.point->lon, 9),
                         to_string(r.accuracy));
    } else {
      out += fmt::format("{}\t\t\t{}\n", address, to_string(Accuracy::Failed));
    }
  }
  return out;
}

void GeocodeCache::save(const std::filesystem::path& path) const { io::write_atomic(path, serialize()); }

FileGeocoder FileGeocoder::load(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw InputError(fmt::format("geocoder file '{}' does not exist", path.string()));
  }
  return FileGeocoder(GeocodeCache::load(path));
}

GeocodeResponse FileGeocoder::resolve(const std::string& address) {
  return table_.lookup(address).value_or(GeocodeResponse::failed());
}

GeocodeRun geocode_all(const std::vector<AddressGroup>& groups, Geocoder& client, GeocodeCache& cache,
                       const GeocodeOptions& options) {
  GeocodeRun run;
  run.records.resize(groups.size());
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> hits{0}, calls{0}, semantic{0}, transport{0};

  std::mutex error_mutex;
  std::exception_ptr error;

  auto work = [&] {
    try {
      for (std::size_t i = next++; i < groups.size(); i = next++) {
        const auto& group = groups[i];
        auto& rec = run.records[i];
        rec.address = group.address;
        rec.capacity = group.capacity();
  
        GeocodeResponse response;
        bool transport_failed = false;
        if (auto cached = cache.lookup(group.address)) {
          ++hits;
          response = *cached;
        } else {
          bool resolved = false;
          for (int attempt = 0; attempt <= options.max_retries && !resolved; ++attempt) {
            ++calls;
            try {
              response = client.resolve(group.address);
              resolved = true;
            } catch (const TransportError&) {
            }
          }
          if (!resolved) {
            ++transport;
            transport_failed = true;
            response = GeocodeResponse::failed();
          } else {
            if (response.accuracy == Accuracy::Failed || !response.point) {
              response = GeocodeResponse::failed();
            }
            cache.store(group.address, response);
          }
        }
        if (response.accuracy == Accuracy::Failed && !transport_failed) ++semantic;
        rec.point = response.point;
        rec.accuracy = response.accuracy;
      }
    } catch (...) {
      // Stop handing out work and rethrow on the calling thread.
      next = groups.size();
      std::lock_guard lock(error_mutex);
      if (!error) error = std::current_exception();
    }
  };

  const int workers = std::max(1, std::min<int>(options.concurrency, static_cast<int>(groups.size())));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  if (error) std::rethrow_exception(error);

  run.cache_hits = hits;
  run.client_calls = calls;
  run.semantic_failures = semantic;
  run.transport_failures = transport;
  return run;
}

ZScoreStats zscore_stats(std::span<const GeocodedAddress> records) {
  ZScoreStats s;
  s.n = records.size();
  if (s.n == 0) return s;
  for (const auto& r : records) {
    if (!r.point) throw std::invalid_argument("z-score input contains a record without coordinates");
    s.mu_lat += r.point->lat;
    s.mu_lon += r.point->lon;
  }
  const double n = static_cast<double>(s.n);
  s.mu_lat /= n;
  s.mu_lon /= n;
  double var_lat = 0.0;
  double var_lon = 0.0;
  for (const auto& r : records) {
    const double dl = r.point->lat - s.mu_lat;
    const double dn = r.point->lon - s.mu_lon;
    var_lat += dl * dl;
    var_lon += dn * dn;
  }
  s.sigma_lat = std::sqrt(var_lat / n);
  s.sigma_lon = std::sqrt(var_lon / n);
  return s;
}

bool is_zscore_outlier(const GeoPoint& p, const ZScoreStats& stats, double threshold) noexcept {
  if (stats.n <= 1) return false;
  const bool lat_out = stats.sigma_lat > 0.0 && std::abs((p.lat - stats.mu_lat) / stats.sigma_lat) > threshold;
  const bool lon_out = stats.sigma_lon > 0.0 && std::abs((p.lon - stats.mu_lon) / stats.sigma_lon) > threshold;
  return lat_out || lon_out;
}

ZScorePartition zscore_filter(std::span<const GeocodedAddress> records, double threshold) {
  for (const auto& r : records) {
    if (r.accuracy == Accuracy::Failed || !r.point) {
      throw std::invalid_argument(fmt::format("z-score filter received FAILED address '{}'", r.address));
    }
  }
  ZScorePartition out;
  out.stats = zscore_stats(records);
  for (const auto& r : records) {
    (is_zscore_outlier(*r.point, out.stats, threshold) ? out.outliers : out.inliers).push_back(r);
  }
  return out;
}

}  // namespace treegeo
