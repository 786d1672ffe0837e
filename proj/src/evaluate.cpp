#include "treegeo/evaluate.hpp"

#include <limits>
#include <numeric>
#include <unordered_map>

#include <fmt/format.h>

#include "treegeo/io.hpp"
#include "treegeo/spatial_grid.hpp"

namespace treegeo {

std::string_view key(Category c) noexcept {
  switch (c) {
    case Category::GeocodingNotPossible:
      return "geocoding_not_possible";
    case Category::GeocodingOutlier:
      return "geocoding_outlier";
    case Category::GeocodingWrong:
      return "geocoding_wrong";
    case Category::NoTreeDetected:
      return "no_tree_detected";
    case Category::NoTreeAssigned:
      return "no_tree_assigned";
    case Category::TreeAssignedIncorrectly:
      return "tree_assigned_incorrectly";
    case Category::TreeCorrect:
      return "tree_correct";
  }
  return "";
}

std::string_view label(Category c) noexcept {
  switch (c) {
    case Category::GeocodingNotPossible:
      return "Geocoding not possible";
    case Category::GeocodingOutlier:
      return "Geocoding outlier";
    case Category::GeocodingWrong:
      return "Geocoding wrong";
    case Category::NoTreeDetected:
      return "No tree detected";
    case Category::NoTreeAssigned:
      return "No tree assigned";
    case Category::TreeAssignedIncorrectly:
      return "Tree assigned incorrectly";
    case Category::TreeCorrect:
      return "Tree correct";
  }
  return "";
}

std::string_view key(BlindCategory c) noexcept {
  switch (c) {
    case BlindCategory::GeocodingNotPossible:
      return "geocoding_not_possible";
    case BlindCategory::GeocodingOutlier:
      return "geocoding_outlier";
    case BlindCategory::NoTreeDetected:
      return "no_tree_detected";
    case BlindCategory::Assigned:
      return "assigned";
    case BlindCategory::Unassigned:
      return "unassigned";
  }
  return "";
}

std::string_view label(BlindCategory c) noexcept {
  switch (c) {
    case BlindCategory::GeocodingNotPossible:
      return "Geocoding not possible";
    case BlindCategory::GeocodingOutlier:
      return "Geocoding outlier";
    case BlindCategory::NoTreeDetected:
      return "No tree detected";
    case BlindCategory::Assigned:
      return "Assigned";
    case BlindCategory::Unassigned:
      return "Unassigned";
  }
  return "";
}

std::vector<std::size_t> RunOutputs::evaluated_indices() const {
  if (subset) return *subset;
  std::vector<std::size_t> all(inventory.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return all;
}

namespace {

double percent_of(std::size_t count, std::size_t total) {
  return total == 0 ? 0.0 : 100.0 * static_cast<double>(count) / static_cast<double>(total);
}

// Address lookup plus the "any detected tree near the geocode" test shared by
// the full and blind evaluations.
class AddressIndex {
 public:
  AddressIndex(const RunOutputs& run, const EvaluationOptions& options) : run_(run), options_(options) {
    for (const auto& g : run.geocoded) by_address_.emplace(g.address, &g);
    if (!run.fused.empty()) {
      grid_.emplace(LocalFrame(run.fused.front().point), options.max_match_distance_m);
      for (std::size_t i = 0; i < run.fused.size(); ++i) grid_->insert(run.fused[i].point, i);
    }
  }

  const GeocodedAddress& lookup(const std::string& address) const {
    auto it = by_address_.find(address);
    if (it == by_address_.end()) {
      throw InputError(fmt::format("inventory address '{}' missing from the geocoded table", address));
    }
    return *it->second;
  }

  bool detection_near(const GeoPoint& p) const {
    if (!grid_) return false;
    bool found = false;
    grid_->for_each_near(p, 2, [&](std::size_t i) {
      if (!found && local_distance_m(p, run_.fused[i].point) <= options_.max_match_distance_m) found = true;
    });
    return found;
  }

 private:
  const RunOutputs& run_;
  const EvaluationOptions& options_;
  std::unordered_map<std::string, const GeocodedAddress*> by_address_;
  std::optional<SpatialGrid> grid_;
};

std::unordered_map<std::string, std::size_t> assigned_by_tree(const RunOutputs& run) {
  std::unordered_map<std::string, std::size_t> out;
  for (const auto& a : run.assigned) out.emplace(a.tree_id, a.fused_index);
  return out;
}

}  // namespace

double EvaluationReport::percent(Category c) const noexcept { return percent_of(count(c), total); }
double BlindReport::percent(BlindCategory c) const noexcept { return percent_of(count(c), total); }

std::vector<Category> categorize_trees(const RunOutputs& run, const std::map<std::string, GeoPoint>& truth,
                                       const EvaluationOptions& options) {
  for (const auto& t : run.inventory) {
    if (!truth.count(t.tree_id)) throw InputError(fmt::format("no ground truth for tree '{}'", t.tree_id));
  }
  const AddressIndex addresses(run, options);
  const auto assigned = assigned_by_tree(run);

  // Attribute each detected tree to the address of its nearest true tree.
  std::vector<const std::string*> true_address(run.fused.size(), nullptr);
  if (!run.inventory.empty() && !run.fused.empty()) {
    SpatialGrid grid(LocalFrame(truth.at(run.inventory.front().tree_id)), options.truth_match_radius_m);
    for (std::size_t i = 0; i < run.inventory.size(); ++i) grid.insert(truth.at(run.inventory[i].tree_id), i);
    for (std::size_t f = 0; f < run.fused.size(); ++f) {
      double best = std::numeric_limits<double>::infinity();
      std::size_t best_idx = 0;
      grid.for_each_near(run.fused[f].point, 2, [&](std::size_t i) {
        const double d = local_distance_m(run.fused[f].point, truth.at(run.inventory[i].tree_id));
        if (d < best || (d == best && run.inventory[i].tree_id < run.inventory[best_idx].tree_id)) {
          best = d;
          best_idx = i;
        }
      });
      if (best <= options.truth_match_radius_m) true_address[f] = &run.inventory[best_idx].address;
    }
  }

  std::vector<Category> out;
  for (std::size_t idx : run.evaluated_indices()) {
    const auto& tree = run.inventory.at(idx);
    const auto& geo = addresses.lookup(tree.address);
    Category c;
    if (geo.accuracy == Accuracy::Failed || !geo.point) {
      c = Category::GeocodingNotPossible;
    } else if (geo.outlier) {
      c = Category::GeocodingOutlier;
    } else if (local_distance_m(*geo.point, truth.at(tree.tree_id)) > options.max_match_distance_m) {
      c = Category::GeocodingWrong;
    } else if (!addresses.detection_near(*geo.point)) {
      c = Category::NoTreeDetected;
    } else if (auto it = assigned.find(tree.tree_id); it == assigned.end()) {
      c = Category::NoTreeAssigned;
    } else {
      const auto* addr = it->second < true_address.size() ? true_address[it->second] : nullptr;
      c = addr && *addr == tree.address ? Category::TreeCorrect : Category::TreeAssignedIncorrectly;
    }
    out.push_back(c);
  }
  return out;
}

EvaluationReport categorize(const RunOutputs& run, const std::map<std::string, GeoPoint>& truth,
                            const EvaluationOptions& options) {
  EvaluationReport report;
  for (auto c : categorize_trees(run, truth, options)) {
    ++report.counts[static_cast<std::size_t>(c)];
    ++report.total;
  }
  return report;
}

std::vector<BlindCategory> blind_categorize_trees(const RunOutputs& run, const EvaluationOptions& options) {
  const AddressIndex addresses(run, options);
  const auto assigned = assigned_by_tree(run);
  std::vector<BlindCategory> out;
  for (std::size_t idx : run.evaluated_indices()) {
    const auto& tree = run.inventory.at(idx);
    const auto& geo = addresses.lookup(tree.address);
    BlindCategory c;
    if (geo.accuracy == Accuracy::Failed || !geo.point) {
      c = BlindCategory::GeocodingNotPossible;
    } else if (geo.outlier) {
      c = BlindCategory::GeocodingOutlier;
    } else if (!addresses.detection_near(*geo.point)) {
      c = BlindCategory::NoTreeDetected;
    } else if (assigned.count(tree.tree_id)) {
      c = BlindCategory::Assigned;
    } else {
      c = BlindCategory::Unassigned;
    }
    out.push_back(c);
  }
  return out;
}

BlindReport blind_report(const RunOutputs& run, const EvaluationOptions& options) {
  BlindReport report;
  for (auto c : blind_categorize_trees(run, options)) {
    ++report.counts[static_cast<std::size_t>(c)];
    ++report.total;
  }
  return report;
}

RunOutputs rooftop_filter(const RunOutputs& run) {
  std::unordered_map<std::string, Accuracy> accuracy;
  for (const auto& g : run.geocoded) accuracy.emplace(g.address, g.accuracy);
  RunOutputs out = run;
  std::vector<std::size_t> kept;
  for (std::size_t idx : run.evaluated_indices()) {
    auto it = accuracy.find(run.inventory.at(idx).address);
    if (it != accuracy.end() && it->second == Accuracy::Rooftop) kept.push_back(idx);
  }
  out.subset = std::move(kept);
  return out;
}

namespace {

template <typename Report, typename Cats>
std::string table(const Report& r, const Cats& cats, std::string_view title) {
  std::string out;
  if (!title.empty()) out += fmt::format("{}\n", title);
  out += fmt::format("{:<28}{:>10}{:>10}\n", "Category", "Count", "Percent");
  out += fmt::format("{:<28}{:>10}{:>10}\n", "Tree number", r.total, "100.0");
  for (auto c : cats) {
    out += fmt::format("{:<28}{:>10}{:>10}\n", label(c), r.count(c), io::fixed(r.percent(c), 1));
  }
  return out;
}

template <typename Report, typename Cats>
std::string key_values(const Report& r, const Cats& cats) {
  std::string out = fmt::format("total={}\n", r.total);
  for (auto c : cats) {
    out += fmt::format("{}.count={}\n{}.percent={}\n", key(c), r.count(c), key(c), io::fixed(r.percent(c), 3));
  }
  return out;
}

}  // namespace

std::string EvaluationReport::to_table(std::string_view title) const { return table(*this, kAllCategories, title); }
std::string EvaluationReport::to_key_values() const { return key_values(*this, kAllCategories); }
std::string BlindReport::to_table(std::string_view title) const { return table(*this, kAllBlindCategories, title); }
std::string BlindReport::to_key_values() const { return key_values(*this, kAllBlindCategories); }

}  // namespace treegeo
