#pragma once
// Independent reference implementations used as test oracles. None of these
// call into the library except for plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <vector>

#include "treegeo/assign.hpp"
#include "treegeo/geo.hpp"

namespace oracle {

inline constexpr double kR = 6371008.8;
inline constexpr double kDeg = 3.14159265358979323846 / 180.0;

inline double haversine_m(const treegeo::GeoPoint& a, const treegeo::GeoPoint& b) {
  const double dlat = (b.lat - a.lat) * kDeg;
  const double dlon = (b.lon - a.lon) * kDeg;
  const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                   std::cos(a.lat * kDeg) * std::cos(b.lat * kDeg) * std::sin(dlon / 2) * std::sin(dlon / 2);
  return 2 * kR * std::asin(std::min(1.0, std::sqrt(h)));
}

// Equirectangular distance written out independently of the library.
inline double equirect_m(const treegeo::GeoPoint& a, const treegeo::GeoPoint& b) {
  const double mid = 0.5 * (a.lat + b.lat) * kDeg;
  const double dx = kR * (b.lon - a.lon) * kDeg * std::cos(mid);
  const double dy = kR * (b.lat - a.lat) * kDeg;
  return std::sqrt(dx * dx + dy * dy);
}

// O(n*m) candidate filter.
inline std::vector<treegeo::CandidatePair> brute_candidates(const std::vector<treegeo::GeoPoint>& a,
                                                            const std::vector<treegeo::GeoPoint>& t, double m) {
  std::vector<treegeo::CandidatePair> out;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < t.size(); ++j) {
      const double d = treegeo::local_distance_m(a[i], t[j]);
      if (d <= m) out.push_back({i, j, d});
    }
  }
  return out;
}

struct Instance {
  std::vector<int> capacity;
  std::size_t trees = 0;
  std::vector<treegeo::CandidatePair> candidates;  // sorted (address, tree)
  double m = 50.0;
};

// Exhaustive search over every feasible assignment: each tree picks "none"
// or one candidate address with capacity left. Returns the best objective.
// Memoized on (tree, remaining capacities) so dense 8x8 cases stay fast;
// every feasible assignment is still covered.
inline double brute_force_objective(const Instance& in) {
  std::vector<std::vector<std::pair<std::size_t, double>>> by_tree(in.trees);
  for (const auto& c : in.candidates) by_tree[c.tree_index].push_back({c.address_index, in.m - c.dist_m});
  std::map<std::pair<std::size_t, std::vector<int>>, double> memo;
  std::vector<int> left = in.capacity;
  auto rec = [&](auto&& self, std::size_t t) -> double {
    if (t == in.trees) return 0.0;
    auto key = std::make_pair(t, left);
    if (auto it = memo.find(key); it != memo.end()) return it->second;
    double best = self(self, t + 1);
    for (const auto& [a, gain] : by_tree[t]) {
      if (left[a] == 0) continue;
      --left[a];
      best = std::max(best, gain + self(self, t + 1));
      ++left[a];
    }
    memo.emplace(std::move(key), best);
    return best;
  };
  return rec(rec, 0);
}

// Full enumeration of all feasible match sets (small instances only).
// Returns every optimal set as an indicator over `candidates`.
inline std::vector<std::vector<char>> all_optima(const Instance& in, double tol = 0.0) {
  std::vector<std::vector<std::size_t>> by_tree(in.trees);
  for (std::size_t k = 0; k < in.candidates.size(); ++k) by_tree[in.candidates[k].tree_index].push_back(k);
  std::vector<int> left = in.capacity;
  std::vector<char> chosen(in.candidates.size(), 0);
  double best = -1.0;
  std::vector<std::vector<char>> optima;
  auto rec = [&](auto&& self, std::size_t t, double value) -> void {
    if (t == in.trees) {
      if (value > best + tol) {
        best = value;
        optima.clear();
      }
      if (value >= best - tol) optima.push_back(chosen);
      return;
    }
    self(self, t + 1, value);
    for (std::size_t k : by_tree[t]) {
      const auto& c = in.candidates[k];
      if (left[c.address_index] == 0) continue;
      --left[c.address_index];
      chosen[k] = 1;
      self(self, t + 1, value + (in.m - c.dist_m));
      chosen[k] = 0;
      ++left[c.address_index];
    }
  };
  rec(rec, 0, 0.0);
  return optima;
}

// Random instance. `grid` > 0 snaps distances to multiples of 1/grid m; with
// a power-of-two grid all sums are exact in binary floating point.
inline Instance random_instance(std::mt19937_64& rng, std::size_t max_addr, std::size_t max_trees, int max_k,
                                double density, double grid) {
  auto u = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  Instance in;
  const std::size_t na = 1 + static_cast<std::size_t>(u() * max_addr) % max_addr;
  in.trees = 1 + static_cast<std::size_t>(u() * max_trees) % max_trees;
  for (std::size_t a = 0; a < na; ++a) in.capacity.push_back(1 + static_cast<int>(u() * max_k) % max_k);
  for (std::size_t a = 0; a < na; ++a) {
    for (std::size_t t = 0; t < in.trees; ++t) {
      if (u() >= density) continue;
      double d = u() * in.m;
      if (grid > 0) d = std::floor(d * grid) / grid;
      in.candidates.push_back({a, t, d});
    }
  }
  return in;
}

// z-scores evaluated directly from the formula, in long double.
inline std::vector<bool> zscore_flags(const std::vector<treegeo::GeoPoint>& pts, double threshold) {
  const long double n = static_cast<long double>(pts.size());
  long double mlat = 0, mlon = 0;
  for (const auto& p : pts) {
    mlat += p.lat;
    mlon += p.lon;
  }
  mlat /= n;
  mlon /= n;
  long double vlat = 0, vlon = 0;
  for (const auto& p : pts) {
    vlat += (p.lat - mlat) * (p.lat - mlat);
    vlon += (p.lon - mlon) * (p.lon - mlon);
  }
  const long double slat = std::sqrt(vlat / n);
  const long double slon = std::sqrt(vlon / n);
  std::vector<bool> out;
  for (const auto& p : pts) {
    const bool a = slat > 0 && std::fabs((p.lat - mlat) / slat) > threshold;
    const bool b = slon > 0 && std::fabs((p.lon - mlon) / slon) > threshold;
    out.push_back(pts.size() > 1 && (a || b));
  }
  return out;
}

}  // namespace oracle
