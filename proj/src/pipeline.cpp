#include "treegeo/pipeline.hpp"

#include <fstream>
#include <sstream>

#include <fmt/format.h>

#include "treegeo/assign.hpp"
#include "treegeo/evaluate.hpp"
#include "treegeo/formats.hpp"
#include "treegeo/fuse.hpp"
#include "treegeo/inventory.hpp"
#include "treegeo/io.hpp"
#include "treegeo/project.hpp"
#include "treegeo/synth.hpp"

namespace treegeo {

namespace {

std::filesystem::path out(const RunConfig& c, const char* name) { return c.output_dir / name; }

const std::filesystem::path& required(const std::filesystem::path& p, std::string_view key) {
  if (p.empty()) throw InputError(fmt::format("config key '{}' is not set", key));
  return p;
}

template <typename F>
auto read_file(const std::filesystem::path& path, F&& reader) {
  std::ifstream in = io::open_input(path);
  return reader(in, path.generic_string());
}

std::vector<InventoryTree> read_inventory_stage(const RunConfig& c) {
  return read_file(out(c, files::kInventory),
                   [](std::istream& in, const std::string& name) { return formats::read_inventory(in, name); });
}

std::vector<GeocodedAddress> read_geocoded_stage(const RunConfig& c) {
  return read_file(out(c, files::kGeocoded),
                   [](std::istream& in, const std::string& name) { return formats::read_geocoded(in, name); });
}

std::vector<FusedTree> read_fused_stage(const RunConfig& c) {
  return read_file(out(c, files::kFused),
                   [](std::istream& in, const std::string& name) { return formats::read_fused(in, name); });
}

std::vector<PanoramaMeta> read_panoramas_stage(const RunConfig& c) {
  return read_file(required(c.panoramas, "panoramas"), [&](std::istream& in, const std::string& name) {
    return formats::read_panoramas(in, c.camera_height_m, name);
  });
}

// Geocoded records in inventory group order; every inventory address must
// be present.
std::vector<GeocodedAddress> align_geocoded(const std::vector<AddressGroup>& groups,
                                            const std::vector<GeocodedAddress>& geocoded) {
  std::map<std::string, const GeocodedAddress*> by_address;
  for (const auto& g : geocoded) by_address.emplace(g.address, &g);
  std::vector<GeocodedAddress> out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    auto it = by_address.find(g.address);
    if (it == by_address.end()) {
      throw InputError(fmt::format("{} has no record for address '{}'; rerun geocode", files::kGeocoded, g.address));
    }
    GeocodedAddress rec = *it->second;
    rec.capacity = g.capacity();
    out.push_back(std::move(rec));
  }
  return out;
}

// Used when no geocoder is configured: cache misses fail as transport
// errors, so nothing is written to the cache for them.
class CacheOnlyGeocoder : public Geocoder {
 public:
  GeocodeResponse resolve(const std::string& address) override {
    throw TransportError(fmt::format("no geocoder configured for '{}'", address));
  }
};

}  // namespace

std::string run_ingest(const RunConfig& c) {
  SchemaMap schema;
  schema.address_column = c.address_column;
  if (!c.id_column.empty()) schema.id_column = c.id_column;
  if (!c.species_column.empty()) schema.species_column = c.species_column;
  if (c.lat_column.empty() != c.lon_column.empty()) {
    throw InputError("lat_column and lon_column must be set together");
  }
  if (!c.lat_column.empty()) {
    schema.lat_column = c.lat_column;
    schema.lon_column = c.lon_column;
  }
  schema.delimiter = c.inventory_delimiter == "tab" ? '\t' : c.inventory_delimiter.at(0);

  const auto& path = required(c.inventory, "inventory");
  std::ifstream in = io::open_input(path);
  const InventoryLoad load = load_inventory(in, schema, path.generic_string());
  io::write_atomic(out(c, files::kInventory), formats::write_inventory(load.trees));
  std::size_t with_truth = 0;
  for (const auto& t : load.trees) with_truth += t.ground_truth.has_value();
  if (schema.lat_column) io::write_atomic(out(c, files::kGroundTruth), formats::write_ground_truth(load.trees));
  return fmt::format("ingest: trees={} addresses={} dropped_empty_address={} coordinate_warnings={} with_coordinates={}",
                     load.trees.size(), group_by_address(load.trees).size(), load.dropped_empty_address,
                     load.coordinate_warnings, with_truth);
}

std::string run_geocode(const RunConfig& c, Geocoder& client) {
  const auto trees = read_inventory_stage(c);
  const auto groups = group_by_address(trees);
  GeocodeCache cache = GeocodeCache::load(c.cache_path());
  GeocodeOptions options;
  options.max_retries = c.geocode_retries;
  options.concurrency = c.parallelism;
  GeocodeRun run = geocode_all(groups, client, cache, options);

  std::vector<GeocodedAddress> usable;
  std::vector<std::size_t> usable_index;
  for (std::size_t i = 0; i < run.records.size(); ++i) {
    if (run.records[i].accuracy != Accuracy::Failed) {
      usable.push_back(run.records[i]);
      usable_index.push_back(i);
    }
  }
  const ZScoreStats stats = zscore_stats(usable);
  std::size_t outliers = 0;
  for (std::size_t i : usable_index) {
    auto& r = run.records[i];
    r.outlier = is_zscore_outlier(*r.point, stats, c.z_threshold);
    outliers += r.outlier;
  }
  cache.save(c.cache_path());
  io::write_atomic(out(c, files::kGeocoded), formats::write_geocoded(run.records));
  return fmt::format(
      "geocode: addresses={} cache_hits={} client_calls={} semantic_failures={} transport_failures={} outliers={}",
      run.records.size(), run.cache_hits, run.client_calls, run.semantic_failures, run.transport_failures, outliers);
}

std::string run_geocode(const RunConfig& c) {
  if (c.geocoder.empty()) {
    CacheOnlyGeocoder client;
    RunConfig no_retry = c;
    no_retry.geocode_retries = 0;
    return run_geocode(no_retry, client);
  }
  FileGeocoder client = FileGeocoder::load(c.geocoder);
  return run_geocode(c, client);
}

std::string run_project(const RunConfig& c) {
  const auto panos = read_panoramas_stage(c);
  const auto dets = read_file(required(c.detections, "detections"), [](std::istream& in, const std::string& name) {
    return formats::read_detections(in, name);
  });
  const ProjectionRun run = project_all(panos, dets, c.max_projection_distance_m);
  io::write_atomic(out(c, files::kProjected), formats::write_projected(run.projected));
  return fmt::format("project: panoramas={} detections={} projected={} no_ground_intersection={} too_far={}",
                     panos.size(), dets.size(), run.projected.size(), run.no_ground_intersection, run.too_far);
}

std::string run_fuse(const RunConfig& c) {
  const auto projected = read_file(out(c, files::kProjected), [](std::istream& in, const std::string& name) {
    return formats::read_projected(in, name);
  });
  const auto panos = read_panoramas_stage(c);
  FuseOptions options;
  options.radius_m = c.fuse_radius_m;
  options.idw_epsilon_m = c.idw_epsilon_m;
  options.idw_exponent = c.idw_exponent;
  const auto fused = fuse_detections(projected, options);
  std::vector<GeoPoint> cameras;
  cameras.reserve(panos.size());
  for (const auto& p : panos) cameras.push_back(p.camera);
  const auto kept = fused.empty() ? fused : filter_far_from_street(fused, cameras, c.street_filter_m);
  io::write_atomic(out(c, files::kFused), formats::write_fused(kept));
  io::write_atomic(out(c, files::kFusedGeoJson), formats::fused_geojson(kept));
  return fmt::format("fuse: detections={} clusters={} far_from_street={} trees={}", projected.size(), fused.size(),
                     fused.size() - kept.size(), kept.size());
}

std::string run_assign(const RunConfig& c) {
  const auto trees = read_inventory_stage(c);
  const auto groups = group_by_address(trees);
  const auto geocoded = align_geocoded(groups, read_geocoded_stage(c));
  const auto fused = read_fused_stage(c);

  // Only usable geocodes take part; indices are mapped back afterwards.
  std::vector<GeocodedAddress> usable;
  std::vector<std::size_t> to_full;
  std::vector<int> capacities;
  for (std::size_t i = 0; i < geocoded.size(); ++i) {
    if (geocoded[i].accuracy == Accuracy::Failed || geocoded[i].outlier) continue;
    usable.push_back(geocoded[i]);
    to_full.push_back(i);
    capacities.push_back(geocoded[i].capacity);
  }
  const auto candidates = build_candidates(usable, fused, c.max_match_distance_m);
  AssignmentResult result = solve_assignment(candidates, capacities, fused.size(), c.max_match_distance_m);
  for (auto& m : result.matches) m.address_index = to_full[m.address_index];

  const auto matches = expand_to_trees(result, groups, fused);
  io::write_atomic(out(c, files::kAssignment), formats::write_assignment(result, geocoded));
  io::write_atomic(out(c, files::kMatches), formats::write_matches(matches));
  io::write_atomic(out(c, files::kMatchesGeoJson), formats::matches_geojson(matches, fused));
  return fmt::format("assign: addresses={} trees={} candidates={} matched={} unmatched_trees={} unfilled_capacity={} objective={}",
                     usable.size(), fused.size(), candidates.size(), result.matches.size(), result.unmatched_trees,
                     result.unfilled_capacity, io::fixed(result.objective_value, 6));
}

std::string run_evaluate(const RunConfig& c) {
  RunOutputs run;
  run.inventory = read_inventory_stage(c);
  const auto groups = group_by_address(run.inventory);
  run.geocoded = align_geocoded(groups, read_geocoded_stage(c));
  run.fused = read_fused_stage(c);
  const auto matches = read_file(out(c, files::kAssignment), [&](std::istream& in, const std::string& name) {
    return formats::read_assignment(in, run.geocoded, name);
  });
  AssignmentResult result;
  result.matches = matches;
  for (const auto& m : matches) {
    if (m.tree_index >= run.fused.size()) {
      throw InputError(fmt::format("{}: tree_index {} is beyond {}", files::kAssignment, m.tree_index, files::kFused));
    }
  }
  run.assigned = expand_to_trees(result, groups, run.fused);

  EvaluationOptions options;
  options.max_match_distance_m = c.max_match_distance_m;
  options.truth_match_radius_m = c.truth_match_radius_m;

  std::filesystem::path truth_path = c.ground_truth;
  if (truth_path.empty() && std::filesystem::exists(out(c, files::kGroundTruth))) {
    truth_path = out(c, files::kGroundTruth);
  }
  std::optional<std::map<std::string, GeoPoint>> truth;
  if (!truth_path.empty()) {
    truth = read_file(truth_path,
                      [](std::istream& in, const std::string& name) { return formats::read_ground_truth(in, name); });
  }

  std::string text;
  std::string kv = fmt::format("municipality={}\n", c.municipality);
  auto prefixed = [](std::string_view prefix, const std::string& body) {
    std::string s;
    std::istringstream lines(body);
    for (std::string line; std::getline(lines, line);) s += fmt::format("{}.{}\n", prefix, line);
    return s;
  };
  std::string summary = "evaluate:";
  const RunOutputs rooftop = rooftop_filter(run);
  if (truth) {
    const auto full = categorize(run, *truth, options);
    const auto roof = categorize(rooftop, *truth, options);
    text += full.to_table(fmt::format("{}: all trees", c.municipality)) + "\n";
    text += roof.to_table(fmt::format("{}: rooftop geocodes only", c.municipality)) + "\n";
    kv += prefixed("all", full.to_key_values()) + prefixed("rooftop", roof.to_key_values());
    summary += fmt::format(" trees={} tree_correct={} ({}%) rooftop_trees={} rooftop_correct={} ({}%)", full.total,
                           full.count(Category::TreeCorrect), io::fixed(full.percent(Category::TreeCorrect), 1),
                           roof.total, roof.count(Category::TreeCorrect),
                           io::fixed(roof.percent(Category::TreeCorrect), 1));
  }
  const auto blind = blind_report(run, options);
  const auto blind_roof = blind_report(rooftop, options);
  text += blind.to_table(fmt::format("{}: without ground truth", c.municipality)) + "\n";
  text += blind_roof.to_table(fmt::format("{}: without ground truth, rooftop geocodes only", c.municipality));
  kv += prefixed("blind", blind.to_key_values()) + prefixed("blind_rooftop", blind_roof.to_key_values());
  if (!truth) {
    summary += fmt::format(" trees={} assigned={} ({}%) no ground truth", blind.total,
                           blind.count(BlindCategory::Assigned), io::fixed(blind.percent(BlindCategory::Assigned), 1));
  }
  io::write_atomic(out(c, files::kReport), text);
  io::write_atomic(out(c, files::kReportKv), kv);
  return summary;
}

std::string run_synth(const RunConfig& c) {
  const SynthScene scene = generate(c.synth_config());
  write_scene(scene, c.synth_dir);
  const auto injected = scene.injected_trees();
  std::size_t unambiguous = 0;
  for (const auto& a : scene.addresses) unambiguous += a.unambiguous ? a.trees.size() : 0;
  return fmt::format(
      "synth: trees={} addresses={} panoramas={} detections={} false_positives={} unambiguous_trees={} "
      "failed={} outlier={} wrong={} uncovered={}",
      scene.inventory.size(), scene.addresses.size(), scene.panoramas.size(), scene.detections.size(),
      scene.false_positives, unambiguous, injected[1], injected[2], injected[3], injected[4]);
}

std::string run_all(const RunConfig& c) {
  std::string s;
  s += run_ingest(c) + "\n";
  s += run_geocode(c) + "\n";
  s += run_project(c) + "\n";
  s += run_fuse(c) + "\n";
  s += run_assign(c) + "\n";
  s += run_evaluate(c);
  return s;
}

}  // namespace treegeo
