#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "treegeo/fuse.hpp"
#include "treegeo/geo.hpp"
#include "treegeo/geocode.hpp"
#include "treegeo/inventory.hpp"

namespace treegeo {

inline constexpr double kDefaultMaxMatchDistanceM = 50.0;

struct CandidatePair {
  std::size_t address_index = 0;
  std::size_t tree_index = 0;
  double dist_m = 0.0;

  friend bool operator==(const CandidatePair&, const CandidatePair&) = default;
};

using Match = CandidatePair;

struct AssignmentResult {
  std::vector<Match> matches;  // sorted by (address_index, tree_index)
  double objective_value = 0.0;
  std::size_t unmatched_trees = 0;
  std::size_t unfilled_capacity = 0;
};

/// Every (address, tree) pair with local_distance_m <= max_distance_m,
/// sorted by (address_index, tree_index). Trees are bucketed in a degree
/// grid one max_distance_m wide, so each address only inspects its 3x3 block.
/// Inputs must not straddle the antimeridian.
std::vector<CandidatePair> build_candidates(std::span<const GeoPoint> addresses, std::span<const GeoPoint> trees,
                                            double max_distance_m = kDefaultMaxMatchDistanceM);

/// Convenience overload; every address must carry a point.
std::vector<CandidatePair> build_candidates(std::span<const GeocodedAddress> addresses,
                                            std::span<const FusedTree> trees,
                                            double max_distance_m = kDefaultMaxMatchDistanceM);

/// Maximizes sum(max_distance_m - dist) over the chosen pairs subject to each
/// tree used at most once and each address at most capacities[address]
/// times. Solved exactly as a min-cost flow (source -> address with capacity
/// K, address -> tree with cost -(M - dist), tree -> sink with capacity 1) on
/// integer nanometer gains, independently per connected component.
///
/// Among optimal match sets the result is canonical: scanning pairs in
/// (address_index, tree_index) order, each pair is kept whenever an optimum
/// exists that contains every pair kept so far and none rejected so far.
/// Zero-gain pairs (dist == M) are therefore included whenever capacity allows.
///
/// Throws InputError for a non-positive capacity and std::invalid_argument
/// for malformed candidates.
AssignmentResult solve_assignment(std::span<const CandidatePair> candidates, std::span<const int> capacities,
                                  std::size_t tree_count, double max_distance_m = kDefaultMaxMatchDistanceM);

/// Inventory tree that received a detected position.
struct TreeGeocode {
  std::string tree_id;
  std::string address;
  GeoPoint point;
  double dist_m = 0.0;
  std::size_t address_index = 0;
  std::size_t fused_index = 0;
};

/// Hands each address's matched detections to its inventory trees in
/// inventory order, nearest detection first. `groups` and `trees` are indexed
/// like the address and tree indices of `result`.
std::vector<TreeGeocode> expand_to_trees(const AssignmentResult& result, std::span<const AddressGroup> groups,
                                         std::span<const FusedTree> trees);

}  // namespace treegeo
