#pragma once

#include <stdexcept>
#include <string>

namespace treegeo {

/// IUGG mean Earth radius in meters.
inline constexpr double kEarthRadiusM = 6371008.8;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kDegToRad = kPi / 180.0;
inline constexpr double kRadToDeg = 180.0 / kPi;

/// WGS84 latitude/longitude in degrees. lat in [-90, 90], lon in [-180, 180).
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

class InvalidGeoPoint : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

bool is_valid(const GeoPoint& p) noexcept;

/// Builds a GeoPoint, throwing InvalidGeoPoint when out of range or non-finite.
GeoPoint make_geo_point(double lat, double lon);

/// Wraps a longitude into [-180, 180).
double wrap_longitude(double lon) noexcept;

/// Wraps a bearing into [0, 360).
double wrap_bearing(double bearing_deg) noexcept;

/// Equirectangular distance in meters, evaluated at the mid latitude.
/// Valid for separations below ~10 km.
double local_distance_m(const GeoPoint& a, const GeoPoint& b) noexcept;

/// Point reached from `origin` after `distance_m` along `bearing_deg`
/// (clockwise from true north). Exact inverse of local_distance_m.
GeoPoint offset(const GeoPoint& origin, double bearing_deg, double distance_m) noexcept;

/// Local metric frame: east/north meters relative to a reference latitude.
/// Used for spatial hashing and hull checks, never for reported distances.
struct LocalXY {
  double x = 0.0;
  double y = 0.0;
};

class LocalFrame {
 public:
  explicit LocalFrame(GeoPoint origin) noexcept;

  LocalXY to_local(const GeoPoint& p) const noexcept;
  GeoPoint to_geo(const LocalXY& xy) const noexcept;

  const GeoPoint& origin() const noexcept { return origin_; }
  double meters_per_deg_lat() const noexcept { return m_per_deg_lat_; }
  double meters_per_deg_lon() const noexcept { return m_per_deg_lon_; }

 private:
  GeoPoint origin_;
  double m_per_deg_lat_;
  double m_per_deg_lon_;
};

std::string to_string(const GeoPoint& p);

}  // namespace treegeo
