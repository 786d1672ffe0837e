#include "treegeo/config.hpp"

#include <charconv>
#include <fstream>
#include <limits>

#include <fmt/format.h>

#include "treegeo/io.hpp"

namespace treegeo {

std::filesystem::path RunConfig::cache_path() const {
  return geocode_cache.empty() ? output_dir / "geocode_cache.tsv" : geocode_cache;
}

SynthConfig RunConfig::synth_config() const {
  SynthConfig s;
  s.seed = seed;
  s.n_streets = synth_streets;
  s.blocks_per_street = synth_blocks_per_street;
  s.detection_noise_sigma_m = synth_noise_sigma_m;
  s.miss_rate = synth_miss_rate;
  s.false_positive_rate = synth_false_positive_rate;
  s.non_rooftop_fraction = synth_non_rooftop_fraction;
  s.geocode_offset_m = synth_geocode_offset_m;
  s.failed_geocodes = synth_failed_geocodes;
  s.outlier_geocodes = synth_outlier_geocodes;
  s.wrong_geocodes = synth_wrong_geocodes;
  s.uncovered_blocks = synth_uncovered_blocks;
  s.camera_height_m = camera_height_m;
  s.max_detection_distance_m = max_projection_distance_m;
  return s;
}

namespace {

double to_double(const std::string& name, const std::string& v) {
  auto d = io::parse_double(v);
  if (!d) throw ConfigError(fmt::format("{}: expected a number, got '{}'", name, v));
  return *d;
}

long long to_int(const std::string& name, const std::string& v, long long lo, long long hi) {
  auto i = io::parse_int(v);
  if (!i || *i < lo || *i > hi) throw ConfigError(fmt::format("{}: expected an integer in [{}, {}], got '{}'", name, lo, hi, v));
  return *i;
}

ConfigKey str_key(std::string name, std::string help, std::string RunConfig::*m) {
  return {name, std::move(help), false, [m](RunConfig& c, const std::string& v) { c.*m = v; },
          [m](const RunConfig& c) { return c.*m; }};
}

ConfigKey path_key(std::string name, std::string help, std::filesystem::path RunConfig::*m) {
  return {name, std::move(help), true, [m](RunConfig& c, const std::string& v) { c.*m = v; },
          [m](const RunConfig& c) { return (c.*m).generic_string(); }};
}

ConfigKey num_key(std::string name, std::string help, double RunConfig::*m, double lo,
                  double hi = std::numeric_limits<double>::infinity()) {
  return {name, std::move(help), false,
          [m, name, lo, hi](RunConfig& c, const std::string& v) {
            const double d = to_double(name, v);
            if (!(d >= lo && d <= hi)) throw ConfigError(fmt::format("{}: {} is outside [{}, {}]", name, v, lo, hi));
            c.*m = d;
          },
          [m](const RunConfig& c) { return io::exact(c.*m); }};
}

ConfigKey int_key(std::string name, std::string help, int RunConfig::*m, int lo, int hi = 1 << 30) {
  return {name, std::move(help), false,
          [m, name, lo, hi](RunConfig& c, const std::string& v) { c.*m = static_cast<int>(to_int(name, v, lo, hi)); },
          [m](const RunConfig& c) { return std::to_string(c.*m); }};
}

std::vector<ConfigKey> make_keys() {
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<ConfigKey> k;
  k.push_back(str_key("municipality", "name used in report titles", &RunConfig::municipality));
  k.push_back(path_key("inventory", "inventory file (delimited text with header)", &RunConfig::inventory));
  k.push_back({"inventory_delimiter", "single-character delimiter, or 'tab'", false,
               [](RunConfig& c, const std::string& v) {
                 if (v != "tab" && v.size() != 1) throw ConfigError("inventory_delimiter: expected one character or 'tab'");
                 c.inventory_delimiter = v;
               },
               [](const RunConfig& c) { return c.inventory_delimiter; }});
  k.push_back(str_key("address_column", "inventory column holding the street address", &RunConfig::address_column));
  k.push_back(str_key("id_column", "inventory column holding the tree id (empty: row number)", &RunConfig::id_column));
  k.push_back(str_key("species_column", "inventory column holding the species (optional)", &RunConfig::species_column));
  k.push_back(str_key("lat_column", "inventory latitude column used as ground truth (optional)", &RunConfig::lat_column));
  k.push_back(str_key("lon_column", "inventory longitude column used as ground truth (optional)", &RunConfig::lon_column));
  k.push_back(path_key("geocoder", "address table consulted on cache misses", &RunConfig::geocoder));
  k.push_back(path_key("geocode_cache", "persistent geocode cache (default <output_dir>/geocode_cache.tsv)",
                       &RunConfig::geocode_cache));
  k.push_back(path_key("panoramas", "panorama metadata table", &RunConfig::panoramas));
  k.push_back(path_key("detections", "detector output table", &RunConfig::detections));
  k.push_back(path_key("ground_truth", "surveyed tree coordinates for evaluation (optional)", &RunConfig::ground_truth));
  k.push_back(path_key("output_dir", "directory for stage outputs", &RunConfig::output_dir));
  k.push_back(num_key("max_match_distance_m", "assignment cap M in meters", &RunConfig::max_match_distance_m, 1e-9, inf));
  k.push_back(num_key("fuse_radius_m", "detection fusion radius", &RunConfig::fuse_radius_m, 1e-9, inf));
  k.push_back(num_key("z_threshold", "geocode outlier z-score threshold", &RunConfig::z_threshold, 1e-9, inf));
  k.push_back(num_key("camera_height_m", "default camera height above ground", &RunConfig::camera_height_m, 1e-9, inf));
  k.push_back(num_key("idw_epsilon_m", "inverse-distance weight smoothing", &RunConfig::idw_epsilon_m, 0.0, inf));
  k.push_back(num_key("idw_exponent", "inverse-distance weight exponent", &RunConfig::idw_exponent, 0.0, inf));
  k.push_back(num_key("max_projection_distance_m", "drop projections farther than this from the camera",
                      &RunConfig::max_projection_distance_m, 1e-9, inf));
  k.push_back(num_key("street_filter_m", "drop fused trees farther than this from every camera",
                      &RunConfig::street_filter_m, 1e-9, inf));
  k.push_back(num_key("truth_match_radius_m", "evaluation: detected tree to true tree radius",
                      &RunConfig::truth_match_radius_m, 1e-9, inf));
  k.push_back(int_key("geocode_retries", "retries after a geocoder transport failure", &RunConfig::geocode_retries, 0, 100));
  k.push_back(int_key("parallelism", "concurrent geocoder calls", &RunConfig::parallelism, 1, 256));
  k.push_back({"seed", "random seed (synth)", false,
               [](RunConfig& c, const std::string& v) {
                 std::uint64_t s = 0;
                 auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), s);
                 if (ec != std::errc{} || p != v.data() + v.size()) throw ConfigError(fmt::format("seed: expected an unsigned integer, got '{}'", v));
                 c.seed = s;
               },
               [](const RunConfig& c) { return std::to_string(c.seed); }});
  k.push_back(path_key("synth_dir", "synth: directory the scene is written to", &RunConfig::synth_dir));
  k.push_back(int_key("synth_streets", "synth: number of streets", &RunConfig::synth_streets, 1, 1000));
  k.push_back(int_key("synth_blocks_per_street", "synth: blocks per street", &RunConfig::synth_blocks_per_street, 1, 1000));
  k.push_back(num_key("synth_noise_sigma_m", "synth: detection position noise", &RunConfig::synth_noise_sigma_m, 0.0, inf));
  k.push_back(num_key("synth_miss_rate", "synth: detector miss probability", &RunConfig::synth_miss_rate, 0.0, 1.0));
  k.push_back(num_key("synth_false_positive_rate", "synth: false positives per panorama",
                      &RunConfig::synth_false_positive_rate, 0.0, 1.0));
  k.push_back(num_key("synth_non_rooftop_fraction", "synth: share of interpolated/approximate geocodes",
                      &RunConfig::synth_non_rooftop_fraction, 0.0, 1.0));
  k.push_back(num_key("synth_geocode_offset_m", "synth: offset of non-rooftop geocodes",
                      &RunConfig::synth_geocode_offset_m, 0.0, inf));
  k.push_back(int_key("synth_failed_geocodes", "synth: addresses that fail to geocode", &RunConfig::synth_failed_geocodes, 0));
  k.push_back(int_key("synth_outlier_geocodes", "synth: addresses geocoded far outside the city",
                      &RunConfig::synth_outlier_geocodes, 0));
  k.push_back(int_key("synth_wrong_geocodes", "synth: addresses geocoded >50 m off", &RunConfig::synth_wrong_geocodes, 0));
  k.push_back(int_key("synth_uncovered_blocks", "synth: blocks without panoramas", &RunConfig::synth_uncovered_blocks, 0));
  return k;
}

const ConfigKey* find_key(std::string_view name) {
  for (const auto& k : config_keys()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = make_keys();
  return keys;
}

void set_config_value(RunConfig& config, std::string_view key, const std::string& value) {
  const auto* k = find_key(key);
  if (!k) throw ConfigError(fmt::format("unknown config key '{}'", key));
  k->set(config, value);
}

void parse_config(std::istream& in, RunConfig& config, const std::filesystem::path& base_dir,
                  std::string_view source_name) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line.erase(0, 3);
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string text = io::trim(line);
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("{}:{}: expected 'key = value'", source_name, lineno));
    }
    const std::string name = io::trim(std::string_view(text).substr(0, eq));
    const std::string value = io::trim(std::string_view(text).substr(eq + 1));
    const auto* k = find_key(name);
    if (!k) throw ConfigError(fmt::format("{}:{}: unknown config key '{}'", source_name, lineno, name));
    try {
      if (k->is_path && !value.empty() && std::filesystem::path(value).is_relative() && !base_dir.empty()) {
        k->set(config, (base_dir / value).lexically_normal().generic_string());
      } else {
        k->set(config, value);
      }
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}:{}: {}", source_name, lineno, e.what()));
    }
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in = io::open_input(path);
  RunConfig config;
  parse_config(in, config, path.parent_path(), path.generic_string());
  return config;
}

std::string dump_config(const RunConfig& config) {
  std::string out;
  for (const auto& k : config_keys()) out += fmt::format("{} = {}\n", k.name, k.get(config));
  return out;
}

}  // namespace treegeo
