#include "treegeo/fuse.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <tuple>

#include "treegeo/spatial_grid.hpp"

namespace treegeo {

double idw_weight(double score, double distance_m, const FuseOptions& options) noexcept {
  const double denom = options.idw_epsilon_m + distance_m;
  return options.idw_exponent == 1.0 ? score / denom : score / std::pow(denom, options.idw_exponent);
}

namespace {

struct Neighbor {
  std::size_t rank;  // canonical rank
  double distance_m;
};

}  // namespace

std::vector<FusedTree> fuse_detections(const std::vector<ProjectedDetection>& detections,
                                       const FuseOptions& options) {
  if (!(options.radius_m > 0.0)) throw std::invalid_argument("fusion radius must be positive");
  const std::size_t n = detections.size();
  if (n == 0) return {};

  // Work in a canonical content order so that sums, ties and outputs are
  // independent of how the caller ordered the input.
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto content = [&](std::size_t i) {
    const auto& d = detections[i];
    return std::tie(d.source_pano, d.point.lat, d.point.lon, d.score, d.camera_distance_m);
  };
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return content(a) < content(b); });
  auto det = [&](std::size_t rank) -> const ProjectedDetection& { return detections[order[rank]]; };

  SpatialGrid grid(LocalFrame(det(0).point), options.radius_m);
  for (std::size_t r = 0; r < n; ++r) grid.insert(det(r).point, r);

  std::vector<std::vector<Neighbor>> neighbors(n);
  for (std::size_t r = 0; r < n; ++r) {
    auto& list = neighbors[r];
    grid.for_each_near(det(r).point, 2, [&](std::size_t q) {
      const double d = q == r ? 0.0 : local_distance_m(det(r).point, det(q).point);
      if (d <= options.radius_m) list.push_back({q, d});
    });
    std::sort(list.begin(), list.end(), [](const Neighbor& a, const Neighbor& b) { return a.rank < b.rank; });
  }

  std::vector<char> alive(n, 1);
  std::vector<double> score(n, 0.0);
  auto aggregate = [&](std::size_t r) {
    double s = 0.0;
    for (const auto& nb : neighbors[r]) {
      if (alive[nb.rank]) s += idw_weight(det(nb.rank).score, nb.distance_m, options);
    }
    return s;
  };

  auto better = [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    const auto& da = det(a);
    const auto& db = det(b);
    if (da.source_pano != db.source_pano) return da.source_pano < db.source_pano;
    if (da.score != db.score) return da.score < db.score;
    return a < b;  // canonical rank already orders by (lat, lon)
  };
  std::set<std::size_t, decltype(better)> queue(better);
  for (std::size_t r = 0; r < n; ++r) {
    score[r] = aggregate(r);
    queue.insert(r);
  }

  std::vector<FusedTree> fused;
  std::vector<char> dirty(n, 0);
  std::vector<std::size_t> touched;
  while (!queue.empty()) {
    const std::size_t center = *queue.begin();
    const GeoPoint c = det(center).point;

    FusedTree tree;
    tree.fused_score = score[center];
    double wsum = 0.0;
    double lat_acc = 0.0;
    double lon_acc = 0.0;
    std::vector<std::size_t> cluster;
    for (const auto& nb : neighbors[center]) {
      if (!alive[nb.rank]) continue;
      cluster.push_back(nb.rank);
      const auto& d = det(nb.rank);
      const double w = idw_weight(d.score, nb.distance_m, options);
      double dlon = d.point.lon - c.lon;
      if (dlon > 180.0) dlon -= 360.0;
      if (dlon < -180.0) dlon += 360.0;
      wsum += w;
      lat_acc += w * (d.point.lat - c.lat);
      lon_acc += w * dlon;
      tree.member_panos.insert(d.source_pano);
      tree.members.push_back(order[nb.rank]);
    }
    tree.point = wsum > 0.0 ? GeoPoint{c.lat + lat_acc / wsum, wrap_longitude(c.lon + lon_acc / wsum)} : c;
    tree.member_count = static_cast<int>(cluster.size());
    std::sort(tree.members.begin(), tree.members.end());
    fused.push_back(std::move(tree));

    for (std::size_t r : cluster) {
      queue.erase(r);
      alive[r] = 0;
    }
    for (std::size_t r : cluster) {
      for (const auto& nb : neighbors[r]) {
        if (alive[nb.rank] && !dirty[nb.rank]) {
          dirty[nb.rank] = 1;
          touched.push_back(nb.rank);
        }
      }
    }
    for (std::size_t r : touched) {
      queue.erase(r);
      score[r] = aggregate(r);
      queue.insert(r);
      dirty[r] = 0;
    }
    touched.clear();
  }

  std::stable_sort(fused.begin(), fused.end(), [](const FusedTree& a, const FusedTree& b) {
    return std::tie(b.fused_score, a.point.lat, a.point.lon) < std::tie(a.fused_score, b.point.lat, b.point.lon);
  });
  return fused;
}

std::vector<FusedTree> filter_far_from_street(const std::vector<FusedTree>& trees,
                                              const std::vector<GeoPoint>& cameras, double max_offset_m) {
  if (trees.empty()) return {};
  if (cameras.empty()) throw std::invalid_argument("street filter needs at least one camera position");

  SpatialGrid grid(LocalFrame(cameras.front()), max_offset_m);
  for (std::size_t i = 0; i < cameras.size(); ++i) grid.insert(cameras[i], i);

  std::vector<FusedTree> kept;
  for (const auto& t : trees) {
    bool near = false;
    grid.for_each_near(t.point, 2, [&](std::size_t i) {
      if (!near && local_distance_m(t.point, cameras[i]) <= max_offset_m) near = true;
    });
    if (near) kept.push_back(t);
  }
  return kept;
}

}  // namespace treegeo
