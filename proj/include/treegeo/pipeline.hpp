#pragma once

#include <filesystem>
#include <string>

#include "treegeo/config.hpp"
#include "treegeo/geocode.hpp"

namespace treegeo {

/// File names every stage reads and writes inside output_dir.
namespace files {
inline constexpr const char* kInventory = "inventory.tsv";
inline constexpr const char* kGroundTruth = "ground_truth.tsv";
inline constexpr const char* kGeocoded = "geocoded.tsv";
inline constexpr const char* kProjected = "projected.tsv";
inline constexpr const char* kFused = "fused.tsv";
inline constexpr const char* kFusedGeoJson = "fused.geojson";
inline constexpr const char* kAssignment = "assignment.tsv";
inline constexpr const char* kMatches = "matches.tsv";
inline constexpr const char* kMatchesGeoJson = "matches.geojson";
inline constexpr const char* kReport = "report.txt";
inline constexpr const char* kReportKv = "report.kv";
}  // namespace files

/// Each stage returns its one-line summary (counts only, so it is
/// deterministic); the CLI appends timings.
std::string run_ingest(const RunConfig& config);
std::string run_geocode(const RunConfig& config);
std::string run_geocode(const RunConfig& config, Geocoder& client);
std::string run_project(const RunConfig& config);
std::string run_fuse(const RunConfig& config);
std::string run_assign(const RunConfig& config);
std::string run_evaluate(const RunConfig& config);
std::string run_synth(const RunConfig& config);

/// ingest -> geocode -> project -> fuse -> assign -> evaluate, through the
/// files above. Returns the summary lines joined by newlines.
std::string run_all(const RunConfig& config);

}  // namespace treegeo
