#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "treegeo/geo.hpp"

namespace treegeo {

inline constexpr double kDefaultCameraHeightM = 3.0;
inline constexpr double kDefaultMaxProjectionDistanceM = 50.0;

/// Full-sphere equirectangular panorama (width = 2 * height) taken by a level
/// camera. `heading` is the compass bearing of the image center column.
struct PanoramaMeta {
  std::string pano_id;
  GeoPoint camera;
  double heading = 0.0;
  int width_px = 0;
  int height_px = 0;
  double camera_height_m = kDefaultCameraHeightM;
};

/// Pixel box, y grows downward.
struct BoundingBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
};

struct Detection {
  std::string pano_id;
  BoundingBox bbox;
  double score = 0.0;
};

struct ProjectedDetection {
  GeoPoint point;
  double score = 0.0;
  std::string source_pano;
  double camera_distance_m = 0.0;
};

/// Throws std::invalid_argument describing the first violated invariant.
void validate(const PanoramaMeta& pano);
void validate(const Detection& det, const PanoramaMeta& pano);

enum class ProjectionSkip { None, NoGroundIntersection, TooFar };

struct ProjectionResult {
  std::optional<ProjectedDetection> value;
  ProjectionSkip skip = ProjectionSkip::None;
};

/// Compass bearing of an image column.
double column_bearing(const PanoramaMeta& pano, double u) noexcept;

/// Angle below the horizon, in degrees, of an image row.
double row_depression(const PanoramaMeta& pano, double v) noexcept;

/// Ground point under the bottom-center pixel of the box, assuming flat
/// terrain and zero pitch. Bottoms on or above the horizon yield
/// NoGroundIntersection; ground distances beyond `max_distance_m` yield TooFar.
/// Throws std::invalid_argument when the detection belongs to another panorama.
ProjectionResult project_detection(const PanoramaMeta& pano, const Detection& det,
                                   double max_distance_m = kDefaultMaxProjectionDistanceM);

struct TreeSilhouette {
  double trunk_width_m = 2.0;
  double tree_height_m = 8.0;
};

/// Box whose bottom-center pixel projects back onto `tree`. Throws
/// std::invalid_argument when the tree coincides with the camera.
Detection synthesize_detection(const PanoramaMeta& pano, const GeoPoint& tree, double score,
                               const TreeSilhouette& silhouette = {});

struct ProjectionRun {
  std::vector<ProjectedDetection> projected;  // input order, skipped removed
  std::size_t no_ground_intersection = 0;
  std::size_t too_far = 0;
};

/// Projects every detection against its panorama. A detection naming an
/// unknown panorama is an InputError.
ProjectionRun project_all(const std::vector<PanoramaMeta>& panoramas, const std::vector<Detection>& detections,
                          double max_distance_m = kDefaultMaxProjectionDistanceM);

}  // namespace treegeo
