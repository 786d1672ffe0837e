#include "treegeo/geo.hpp"

#include <cmath>

#include <fmt/format.h>

namespace treegeo {

bool is_valid(const GeoPoint& p) noexcept {
  return std::isfinite(p.lat) && std::isfinite(p.lon) && p.lat >= -90.0 &&
         p.lat <= 90.0 && p.lon >= -180.0 && p.lon < 180.0;
}

GeoPoint make_geo_point(double lat, double lon) {
  GeoPoint p{lat, lon};
  if (!is_valid(p)) {
    throw InvalidGeoPoint(fmt::format("invalid coordinate ({}, {})", lat, lon));
  }
  return p;
}

double wrap_longitude(double lon) noexcept {
  if (lon >= -180.0 && lon < 180.0) return lon;
  double w = std::fmod(lon + 180.0, 360.0);
  if (w < 0.0) w += 360.0;
  w -= 180.0;
  return w >= 180.0 ? -180.0 : w;
}

double wrap_bearing(double bearing_deg) noexcept {
  if (bearing_deg >= 0.0 && bearing_deg < 360.0) return bearing_deg;
  double w = std::fmod(bearing_deg, 360.0);
  if (w < 0.0) w += 360.0;
  return w >= 360.0 ? 0.0 : w;
}

namespace {

// Longitude difference folded into [-180, 180] so pairs straddling the
// antimeridian stay local.
double delta_lon_deg(double from, double to) noexcept {
  double d = to - from;
  if (d > 180.0) d -= 360.0;
  if (d < -180.0) d += 360.0;
  return d;
}

}  // namespace

double local_distance_m(const GeoPoint& a, const GeoPoint& b) noexcept {
  const double lat_mid = 0.5 * (a.lat + b.lat) * kDegToRad;
  const double dx = kEarthRadiusM * delta_lon_deg(a.lon, b.lon) * kDegToRad * std::cos(lat_mid);
  const double dy = kEarthRadiusM * (b.lat - a.lat) * kDegToRad;
  return std::hypot(dx, dy);
}

GeoPoint offset(const GeoPoint& origin, double bearing_deg, double distance_m) noexcept {
  if (distance_m == 0.0) return origin;
  const double b = bearing_deg * kDegToRad;
  const double dlat = distance_m * std::cos(b) / kEarthRadiusM * kRadToDeg;
  const double lat = origin.lat + dlat;
  // The distance formula evaluates cos() at the mid latitude, so the east
  // component is inverted with the same factor.
  const double lat_mid = 0.5 * (origin.lat + lat) * kDegToRad;
  const double dlon = distance_m * std::sin(b) / (kEarthRadiusM * std::cos(lat_mid)) * kRadToDeg;
  return GeoPoint{lat, wrap_longitude(origin.lon + dlon)};
}

LocalFrame::LocalFrame(GeoPoint origin) noexcept
    : origin_(origin),
      m_per_deg_lat_(kEarthRadiusM * kDegToRad),
      m_per_deg_lon_(kEarthRadiusM * kDegToRad * std::cos(origin.lat * kDegToRad)) {}

LocalXY LocalFrame::to_local(const GeoPoint& p) const noexcept {
  return LocalXY{delta_lon_deg(origin_.lon, p.lon) * m_per_deg_lon_,
                 (p.lat - origin_.lat) * m_per_deg_lat_};
}

GeoPoint LocalFrame::to_geo(const LocalXY& xy) const noexcept {
  return GeoPoint{origin_.lat + xy.y / m_per_deg_lat_,
                  wrap_longitude(origin_.lon + xy.x / m_per_deg_lon_)};
}

std::string to_string(const GeoPoint& p) { return fmt::format("({:.9f}, {:.9f})", p.lat, p.lon); }

}  // namespace treegeo
