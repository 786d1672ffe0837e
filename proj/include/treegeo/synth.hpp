#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "treegeo/geo.hpp"
#include "treegeo/geocode.hpp"
#include "treegeo/inventory.hpp"
#include "treegeo/project.hpp"

namespace treegeo {

/// Failure a generated address was deliberately given. Each maps onto one
/// evaluation category for all trees at that address.
enum class InjectedFailure { None, FailedGeocode, OutlierGeocode, WrongGeocode, UncoveredBlock };

std::string_view to_string(InjectedFailure f) noexcept;

struct SynthConfig {
  std::uint64_t seed = 1;
  GeoPoint origin{37.44, -122.16};

  // Layout: n_streets parallel east-west streets, each cut into blocks.
  int n_streets = 4;
  int blocks_per_street = 4;
  double block_length_m = 200.0;
  double block_gap_m = 60.0;
  double street_spacing_m = 120.0;
  double street_half_width_m = 6.0;
  double parcel_depth_m = 30.0;
  double address_spacing_m = 20.0;
  double camera_spacing_m = 15.0;
  double tree_setback_min_m = 2.0;
  double tree_setback_max_m = 6.0;
  double tree_jitter_m = 1.0;

  /// P(K = 0..3) trees per parcel; the default puts ~84% of trees at shared
  /// addresses.
  std::array<double, 4> trees_per_address{0.20, 0.25, 0.30, 0.25};

  double detection_noise_sigma_m = 0.0;
  double miss_rate = 0.0;
  double false_positive_rate = 0.0;
  double false_positive_radius_m = 20.0;
  double score_min = 0.6;
  double score_max = 1.0;

  double non_rooftop_fraction = 0.0;
  double geocode_offset_m = 30.0;  // non-rooftop shift toward the centerline
  double unit_suffix_rate = 0.05;  // raw addresses carrying "APT n" / "#n"

  // Exactly-counted failure injection.
  int failed_geocodes = 0;
  int outlier_geocodes = 0;
  int wrong_geocodes = 0;
  int uncovered_blocks = 0;
  double wrong_geocode_offset_m = 75.0;
  double outlier_offset_m = 5000.0;

  int pano_width_px = 4096;
  double camera_height_m = kDefaultCameraHeightM;
  double max_detection_distance_m = 50.0;
};

/// Throws InputError naming the first bad field.
void validate(const SynthConfig& config);

struct SynthAddress {
  std::string address;  // normalized
  GeoPoint parcel_center;
  GeocodeResponse geocode;
  InjectedFailure injected = InjectedFailure::None;
  /// Every tree here is strictly closer to this geocode than to any other
  /// usable geocode.
  bool unambiguous = false;
  int street = 0;
  int block = 0;
  std::vector<std::size_t> trees;  // indices into SynthScene::inventory
};

struct SynthScene {
  std::vector<InventoryTree> inventory;  // ground_truth always set
  std::vector<std::string> raw_addresses;  // as written to the inventory file
  std::vector<SynthAddress> addresses;
  std::vector<PanoramaMeta> panoramas;
  std::vector<Detection> detections;
  std::size_t false_positives = 0;

  /// Trees per injected failure, indexed by InjectedFailure.
  std::array<std::size_t, 5> injected_trees() const;
  std::vector<GeocodedAddress> geocoded() const;
};

/// Deterministic for a fixed config; uses only mt19937_64 bits so scenes are
/// identical across standard library implementations.
SynthScene generate(const SynthConfig& config);

/// Writes inventory.csv, geocoder.tsv, panoramas.tsv, detections.tsv,
/// ground_truth.tsv, injected.tsv and a scene.conf that runs the pipeline on
/// them with output under `dir`/run.
void write_scene(const SynthScene& scene, const std::filesystem::path& dir);

}  // namespace treegeo
