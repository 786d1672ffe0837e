#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "treegeo/synth.hpp"

namespace treegeo {

/// Everything a pipeline run needs. Defaults are the documented constants;
/// README's constants table is checked against them by a test.
struct RunConfig {
  std::string municipality = "default";

  // Inventory schema.
  std::filesystem::path inventory;
  std::string inventory_delimiter = ",";
  std::string address_column = "address";
  std::string id_column;       // empty: row number
  std::string species_column;  // empty: none
  std::string lat_column;      // both set: coordinates become ground truth
  std::string lon_column;

  std::filesystem::path geocoder;       // address table standing in for the web service
  std::filesystem::path geocode_cache;  // empty: <output_dir>/geocode_cache.tsv
  std::filesystem::path panoramas;
  std::filesystem::path detections;
  std::filesystem::path ground_truth;  // optional
  std::filesystem::path output_dir = "out";

  double max_match_distance_m = 50.0;
  double fuse_radius_m = 4.0;
  double z_threshold = 3.0;
  double camera_height_m = 3.0;
  double idw_epsilon_m = 1.0;
  double idw_exponent = 1.0;
  double max_projection_distance_m = 50.0;
  double street_filter_m = 50.0;
  double truth_match_radius_m = 4.0;
  int geocode_retries = 2;
  int parallelism = 1;
  std::uint64_t seed = 1;

  // synth subcommand.
  std::filesystem::path synth_dir = "scene";
  int synth_streets = 4;
  int synth_blocks_per_street = 4;
  double synth_noise_sigma_m = 0.0;
  double synth_miss_rate = 0.0;
  double synth_false_positive_rate = 0.0;
  double synth_non_rooftop_fraction = 0.0;
  double synth_geocode_offset_m = 30.0;
  int synth_failed_geocodes = 0;
  int synth_outlier_geocodes = 0;
  int synth_wrong_geocodes = 0;
  int synth_uncovered_blocks = 0;

  std::filesystem::path cache_path() const;
  SynthConfig synth_config() const;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One settable key. `set` parses the text and throws ConfigError on bad values.
struct ConfigKey {
  std::string name;
  std::string help;
  bool is_path = false;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

const std::vector<ConfigKey>& config_keys();

/// Parses `key = value` lines; '#' starts a comment, blank lines are ignored.
/// Relative paths resolve against `base_dir`. Errors carry the line number.
void parse_config(std::istream& in, RunConfig& config, const std::filesystem::path& base_dir = {},
                  std::string_view source_name = "config");
RunConfig load_config(const std::filesystem::path& path);

/// Sets one key by name. Relative paths are kept as given (command line
/// paths are relative to the working directory).
void set_config_value(RunConfig& config, std::string_view key, const std::string& value);

/// Canonical `key = value` rendering of every key, in table order.
std::string dump_config(const RunConfig& config);

}  // namespace treegeo
