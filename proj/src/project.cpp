#include "treegeo/project.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <fmt/format.h>

#include "treegeo/io.hpp"

namespace treegeo {

void validate(const PanoramaMeta& pano) {
  if (pano.width_px <= 0 || pano.height_px <= 0 || pano.width_px != 2 * pano.height_px) {
    throw std::invalid_argument(fmt::format("panorama '{}': size {}x{} is not a 2:1 equirectangular sphere",
                                            pano.pano_id, pano.width_px, pano.height_px));
  }
  if (!(pano.heading >= 0.0 && pano.heading < 360.0)) {
    throw std::invalid_argument(fmt::format("panorama '{}': heading {} outside [0, 360)", pano.pano_id, pano.heading));
  }
  if (!is_valid(pano.camera)) {
    throw std::invalid_argument(fmt::format("panorama '{}': invalid camera position", pano.pano_id));
  }
  if (!(pano.camera_height_m > 0.0)) {
    throw std::invalid_argument(fmt::format("panorama '{}': camera height must be positive", pano.pano_id));
  }
}

void validate(const Detection& det, const PanoramaMeta& pano) {
  const auto& b = det.bbox;
  if (!(b.x_min < b.x_max && b.y_min < b.y_max)) {
    throw std::invalid_argument(fmt::format("detection in '{}': empty box", det.pano_id));
  }
  if (b.x_min < 0.0 || b.y_min < 0.0 || b.x_max > pano.width_px || b.y_max > pano.height_px) {
    throw std::invalid_argument(fmt::format("detection in '{}': box outside the image", det.pano_id));
  }
  if (!(det.score >= 0.0 && det.score <= 1.0)) {
    throw std::invalid_argument(fmt::format("detection in '{}': score {} outside [0, 1]", det.pano_id, det.score));
  }
}

double column_bearing(const PanoramaMeta& pano, double u) noexcept {
  return wrap_bearing(pano.heading + (u / pano.width_px - 0.5) * 360.0);
}

double row_depression(const PanoramaMeta& pano, double v) noexcept {
  return (v - 0.5 * pano.height_px) / pano.height_px * 180.0;
}

ProjectionResult project_detection(const PanoramaMeta& pano, const Detection& det, double max_distance_m) {
  if (det.pano_id != pano.pano_id) {
    throw std::invalid_argument(
        fmt::format("detection for '{}' projected against panorama '{}'", det.pano_id, pano.pano_id));
  }
  const double u = 0.5 * (det.bbox.x_min + det.bbox.x_max);
  const double v = det.bbox.y_max;
  const double depression = row_depression(pano, v);
  if (!(depression > 0.0)) return {std::nullopt, ProjectionSkip::NoGroundIntersection};

  const double distance = pano.camera_height_m / std::tan(depression * kDegToRad);
  if (distance > max_distance_m) return {std::nullopt, ProjectionSkip::TooFar};

  ProjectedDetection out;
  out.point = offset(pano.camera, column_bearing(pano, u), distance);
  out.score = det.score;
  out.source_pano = pano.pano_id;
  out.camera_distance_m = distance;
  return {std::move(out), ProjectionSkip::None};
}

Detection synthesize_detection(const PanoramaMeta& pano, const GeoPoint& tree, double score,
                               const TreeSilhouette& silhouette) {
  // Components as in local_distance_m so that offset() inverts them exactly.
  const double lat_mid = 0.5 * (pano.camera.lat + tree.lat) * kDegToRad;
  double dlon = tree.lon - pano.camera.lon;
  if (dlon > 180.0) dlon -= 360.0;
  if (dlon < -180.0) dlon += 360.0;
  const double dx = kEarthRadiusM * dlon * kDegToRad * std::cos(lat_mid);
  const double dy = kEarthRadiusM * (tree.lat - pano.camera.lat) * kDegToRad;
  const double distance = std::hypot(dx, dy);
  if (!(distance > 0.0)) {
    throw std::invalid_argument(fmt::format("tree coincides with camera of panorama '{}'", pano.pano_id));
  }

  const double W = pano.width_px;
  const double H = pano.height_px;
  const double bearing = std::atan2(dx, dy) * kRadToDeg;
  double rel = (bearing - pano.heading) / 360.0 + 0.5;
  rel -= std::floor(rel);
  double u = rel * W;
  if (u >= W) u = 0.0;
  if (u <= 0.0) u = W * 1e-12;  // keep a non-empty box on the seam

  const double depression = std::atan(pano.camera_height_m / distance) * kRadToDeg;
  const double v = 0.5 * H + depression / 180.0 * H;

  const double nominal_half = std::atan(0.5 * silhouette.trunk_width_m / distance) * kRadToDeg / 360.0 * W;
  const double half = std::min({nominal_half, u, W - u});
  const double elevation = std::atan((silhouette.tree_height_m - pano.camera_height_m) / distance) * kRadToDeg;
  const double top = std::max(0.0, 0.5 * H - elevation / 180.0 * H);

  Detection det;
  det.pano_id = pano.pano_id;
  det.bbox = BoundingBox{u - half, std::min(top, v - 1e-9 * H), u + half, v};
  det.score = score;
  return det;
}

ProjectionRun project_all(const std::vector<PanoramaMeta>& panoramas, const std::vector<Detection>& detections,
                          double max_distance_m) {
  std::unordered_map<std::string, const PanoramaMeta*> by_id;
  for (const auto& p : panoramas) by_id.emplace(p.pano_id, &p);

  ProjectionRun run;
  run.projected.reserve(detections.size());
  for (const auto& det : detections) {
    auto it = by_id.find(det.pano_id);
    if (it == by_id.end()) {
      throw InputError(fmt::format("detection references unknown panorama '{}'", det.pano_id));
    }
    auto result = project_detection(*it->second, det, max_distance_m);
    switch (result.skip) {
      case ProjectionSkip::None:
        run.projected.push_back(std::move(*result.value));
        break;
      case ProjectionSkip::NoGroundIntersection:
        ++run.no_ground_intersection;
        break;
      case ProjectionSkip::TooFar:
        ++run.too_far;
        break;
    }
  }
  return run;
}

}  // namespace treegeo
