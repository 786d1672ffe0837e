#pragma once

#include <cstddef>
#include <set>
#include <string>
#include <vector>

#include "treegeo/geo.hpp"
#include "treegeo/project.hpp"

namespace treegeo {

/// One physical tree reconstructed from several projected detections.
struct FusedTree {
  GeoPoint point;
  double fused_score = 0.0;
  int member_count = 0;
  std::set<std::string> member_panos;
  std::vector<std::size_t> members;  // indices into the fused input, ascending
};

struct FuseOptions {
  double radius_m = 4.0;
  double idw_epsilon_m = 1.0;
  double idw_exponent = 1.0;
};

/// Inverse-distance weight of a detection seen from a cluster center.
double idw_weight(double score, double distance_m, const FuseOptions& options) noexcept;

/// Greedy suppression: pick the remaining detection with the largest
/// inverse-distance-weighted neighborhood score, absorb every remaining
/// detection within the radius, place the tree at the weight-averaged
/// position, repeat until nothing remains.
///
/// Ties on the score go to the lower pano_id, then the lower detection score,
/// then the lower (lat, lon). The result does not depend on input order.
/// Output is sorted by descending fused_score.
std::vector<FusedTree> fuse_detections(const std::vector<ProjectedDetection>& detections,
                                       const FuseOptions& options = {});

/// Keeps trees within `max_offset_m` of at least one camera.
std::vector<FusedTree> filter_far_from_street(const std::vector<FusedTree>& trees,
                                              const std::vector<GeoPoint>& cameras, double max_offset_m = 50.0);

}  // namespace treegeo
