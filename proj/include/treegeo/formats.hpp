#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <string>
#include <vector>

#include "treegeo/assign.hpp"
#include "treegeo/fuse.hpp"
#include "treegeo/geocode.hpp"
#include "treegeo/inventory.hpp"
#include "treegeo/project.hpp"

// Line-oriented, tab-separated intermediate files, each with a header row.
// Coordinates carry 9 decimals; scores, pixels and internal distances are
// written in shortest round-trip form.
namespace treegeo::formats {

// inventory.tsv: tree_id, address, species
std::string write_inventory(const std::vector<InventoryTree>& trees);
std::vector<InventoryTree> read_inventory(std::istream& in, std::string_view name = "inventory.tsv");

// ground_truth.tsv: tree_id, lat, lon
std::string write_ground_truth(const std::vector<InventoryTree>& trees);
std::map<std::string, GeoPoint> read_ground_truth(std::istream& in, std::string_view name = "ground_truth.tsv");

// geocoded.tsv: address, lat, lon, accuracy, capacity, outlier
std::string write_geocoded(const std::vector<GeocodedAddress>& records);
std::vector<GeocodedAddress> read_geocoded(std::istream& in, std::string_view name = "geocoded.tsv");

// panoramas.tsv: pano_id, lat, lon, heading, width_px, height_px
// (optional trailing camera_height_m column overrides the default height)
std::string write_panoramas(const std::vector<PanoramaMeta>& panos);
std::vector<PanoramaMeta> read_panoramas(std::istream& in, double default_camera_height_m,
                                         std::string_view name = "panoramas.tsv");

// detections.tsv: pano_id, x_min, y_min, x_max, y_max, score
std::string write_detections(const std::vector<Detection>& dets);
std::vector<Detection> read_detections(std::istream& in, std::string_view name = "detections.tsv");

// projected.tsv: pano_id, lat, lon, score, camera_distance_m
std::string write_projected(const std::vector<ProjectedDetection>& dets);
std::vector<ProjectedDetection> read_projected(std::istream& in, std::string_view name = "projected.tsv");

// fused.tsv: tree_index, lat, lon, fused_score, member_count, member_panos
std::string write_fused(const std::vector<FusedTree>& trees);
std::vector<FusedTree> read_fused(std::istream& in, std::string_view name = "fused.tsv");

// assignment.tsv: address, tree_index, dist_m
std::string write_assignment(const AssignmentResult& result, const std::vector<GeocodedAddress>& addresses);
/// Address strings are resolved against `addresses`; returns matches with
/// address_index into that list.
std::vector<Match> read_assignment(std::istream& in, const std::vector<GeocodedAddress>& addresses,
                                   std::string_view name = "assignment.tsv");

// matches.tsv: tree_id, address, lat, lon, dist_m
std::string write_matches(const std::vector<TreeGeocode>& matches);

// GeoJSON FeatureCollections of point features.
std::string fused_geojson(const std::vector<FusedTree>& trees);
std::string matches_geojson(const std::vector<TreeGeocode>& matches, const std::vector<FusedTree>& trees);

}  // namespace treegeo::formats
