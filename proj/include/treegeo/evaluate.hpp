#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "treegeo/assign.hpp"
#include "treegeo/fuse.hpp"
#include "treegeo/geocode.hpp"
#include "treegeo/inventory.hpp"

namespace treegeo {

/// Error taxonomy, in precedence order: a tree gets the first category that
/// applies.
enum class Category {
  GeocodingNotPossible,
  GeocodingOutlier,
  GeocodingWrong,
  NoTreeDetected,
  NoTreeAssigned,
  TreeAssignedIncorrectly,
  TreeCorrect,
};

inline constexpr std::array<Category, 7> kAllCategories{
    Category::GeocodingNotPossible, Category::GeocodingOutlier,        Category::GeocodingWrong,
    Category::NoTreeDetected,       Category::NoTreeAssigned,          Category::TreeAssignedIncorrectly,
    Category::TreeCorrect,
};

std::string_view key(Category c) noexcept;    // geocoding_not_possible, ...
std::string_view label(Category c) noexcept;  // "Geocoding not possible", ...

/// Everything a finished run produced, as seen by the evaluator.
struct RunOutputs {
  std::vector<InventoryTree> inventory;
  std::vector<GeocodedAddress> geocoded;  // every address, FAILED and outliers included
  std::vector<FusedTree> fused;
  std::vector<TreeGeocode> assigned;      // expand_to_trees output; fused_index refers to `fused`
  /// Inventory positions to score. Unset scores every tree. The full
  /// inventory is still used to attribute detected trees to true addresses.
  std::optional<std::vector<std::size_t>> subset;

  std::vector<std::size_t> evaluated_indices() const;
};

struct EvaluationOptions {
  double max_match_distance_m = 50.0;  // geocoding_wrong / no_tree_detected radius
  double truth_match_radius_m = 4.0;   // detected tree -> nearest true tree
};

struct EvaluationReport {
  std::array<std::size_t, 7> counts{};
  std::size_t total = 0;

  std::size_t count(Category c) const noexcept { return counts[static_cast<std::size_t>(c)]; }
  double percent(Category c) const noexcept;

  std::string to_table(std::string_view title = "") const;
  std::string to_key_values() const;
};

/// Per-tree category aligned with run.evaluated_indices(). `truth` must hold every
/// inventory tree id (InputError otherwise).
///
/// A detected tree is attributed to the address of the nearest ground-truth
/// tree within truth_match_radius_m; an assignment is correct when that
/// address equals the inventory tree's address.
std::vector<Category> categorize_trees(const RunOutputs& run, const std::map<std::string, GeoPoint>& truth,
                                       const EvaluationOptions& options = {});

EvaluationReport categorize(const RunOutputs& run, const std::map<std::string, GeoPoint>& truth,
                            const EvaluationOptions& options = {});

/// Ground-truth-free categories.
enum class BlindCategory { GeocodingNotPossible, GeocodingOutlier, NoTreeDetected, Assigned, Unassigned };

inline constexpr std::array<BlindCategory, 5> kAllBlindCategories{
    BlindCategory::GeocodingNotPossible, BlindCategory::GeocodingOutlier, BlindCategory::NoTreeDetected,
    BlindCategory::Assigned, BlindCategory::Unassigned};

std::string_view key(BlindCategory c) noexcept;
std::string_view label(BlindCategory c) noexcept;

struct BlindReport {
  std::array<std::size_t, 5> counts{};
  std::size_t total = 0;

  std::size_t count(BlindCategory c) const noexcept { return counts[static_cast<std::size_t>(c)]; }
  double percent(BlindCategory c) const noexcept;

  std::string to_table(std::string_view title = "") const;
  std::string to_key_values() const;
};

std::vector<BlindCategory> blind_categorize_trees(const RunOutputs& run, const EvaluationOptions& options = {});
BlindReport blind_report(const RunOutputs& run, const EvaluationOptions& options = {});

/// Restricts scoring to trees whose address was geocoded at rooftop accuracy.
RunOutputs rooftop_filter(const RunOutputs& run);

}  // namespace treegeo
