#include "treegeo/assign.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <limits>
#include <numeric>
#include <queue>
#include <stdexcept>
#include <unordered_map>

#include <fmt/format.h>

#include "treegeo/io.hpp"

namespace treegeo {

// ---------------------------------------------------------------------------
// Candidate generation

std::vector<CandidatePair> build_candidates(std::span<const GeoPoint> addresses, std::span<const GeoPoint> trees,
                                            double max_distance_m) {
  std::vector<CandidatePair> out;
  if (addresses.empty() || trees.empty()) return out;

  const double m_per_deg_lat = kEarthRadiusM * kDegToRad;
  const double cell_lat = max_distance_m / m_per_deg_lat;
  // Longitude cells are sized at the most poleward latitude a matching pair
  // can have its midpoint at, so one cell always spans at least M meters.
  double max_abs_lat = 0.0;
  for (const auto& p : addresses) max_abs_lat = std::max(max_abs_lat, std::abs(p.lat));
  for (const auto& p : trees) max_abs_lat = std::max(max_abs_lat, std::abs(p.lat));
  const double worst_lat = std::min(89.0, max_abs_lat + cell_lat);
  const double cell_lon = max_distance_m / (m_per_deg_lat * std::cos(worst_lat * kDegToRad));

  auto cell_of = [&](const GeoPoint& p) {
    return std::pair<std::int64_t, std::int64_t>{static_cast<std::int64_t>(std::floor(p.lat / cell_lat)),
                                                 static_cast<std::int64_t>(std::floor(p.lon / cell_lon))};
  };
  auto key = [](std::int64_t a, std::int64_t b) {
    return (static_cast<std::uint64_t>(a) << 32) ^ (static_cast<std::uint64_t>(b) & 0xffffffffULL);
  };
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells;
  for (std::size_t j = 0; j < trees.size(); ++j) {
    const auto [ci, cj] = cell_of(trees[j]);
    cells[key(ci, cj)].push_back(j);
  }

  std::vector<CandidatePair> local;
  for (std::size_t i = 0; i < addresses.size(); ++i) {
    local.clear();
    const auto [ci, cj] = cell_of(addresses[i]);
    for (std::int64_t di = -1; di <= 1; ++di) {
      for (std::int64_t dj = -1; dj <= 1; ++dj) {
        auto it = cells.find(key(ci + di, cj + dj));
        if (it == cells.end()) continue;
        for (std::size_t j : it->second) {
          const double d = local_distance_m(addresses[i], trees[j]);
          if (d <= max_distance_m) local.push_back({i, j, d});
        }
      }
    }
    std::sort(local.begin(), local.end(),
              [](const CandidatePair& a, const CandidatePair& b) { return a.tree_index < b.tree_index; });
    local.erase(std::unique(local.begin(), local.end()), local.end());
    out.insert(out.end(), local.begin(), local.end());
  }
  return out;
}

std::vector<CandidatePair> build_candidates(std::span<const GeocodedAddress> addresses,
                                            std::span<const FusedTree> trees, double max_distance_m) {
  std::vector<GeoPoint> a;
  a.reserve(addresses.size());
  for (const auto& r : addresses) {
    if (!r.point) throw std::invalid_argument(fmt::format("address '{}' has no geocode", r.address));
    a.push_back(*r.point);
  }
  std::vector<GeoPoint> t;
  t.reserve(trees.size());
  for (const auto& f : trees) t.push_back(f.point);
  return build_candidates(a, t, max_distance_m);
}

// ---------------------------------------------------------------------------
// Min-cost flow

namespace {

constexpr double kGainScale = 1e9;  // nanometers
constexpr std::int64_t kInf = std::numeric_limits<std::int64_t>::max() / 4;

struct LocalPair {
  int address;
  int tree;
  std::int64_t gain;
};

class ComponentSolver {
 public:
  ComponentSolver(int n_addresses, int n_trees, const std::vector<int>& capacities,
                  const std::vector<LocalPair>& pairs)
      : n_addr_(n_addresses), adj_(static_cast<std::size_t>(2 + n_addresses + n_trees)) {
    for (int a = 0; a < n_addresses; ++a) add_edge(kSource, addr_node(a), capacities[a], 0, -1);
    pair_edge_.reserve(pairs.size());
    for (std::size_t q = 0; q < pairs.size(); ++q) {
      pair_edge_.push_back(
          add_edge(addr_node(pairs[q].address), tree_node(pairs[q].tree), 1, -pairs[q].gain, static_cast<int>(q)));
    }
    for (int t = 0; t < n_trees; ++t) add_edge(tree_node(t), kSink, 1, 0, -1);

    // Feasible starting potentials for the acyclic network with negative arcs.
    potential_.assign(adj_.size(), 0);
    std::int64_t sink_pot = 0;
    for (const auto& p : pairs) {
      auto& pt = potential_[static_cast<std::size_t>(tree_node(p.tree))];
      pt = std::min(pt, -p.gain);
    }
    for (int t = 0; t < n_trees; ++t) sink_pot = std::min(sink_pot, potential_[static_cast<std::size_t>(tree_node(t))]);
    potential_[kSink] = sink_pot;
  }

  std::vector<bool> solve() {
    successive_shortest_paths();
    add_circulation_arc();
    exact_potentials();
    canonicalize();
    std::vector<bool> matched(pair_edge_.size());
    for (std::size_t q = 0; q < pair_edge_.size(); ++q) matched[q] = edges_[static_cast<std::size_t>(pair_edge_[q])].cap == 0;
    return matched;
  }

 private:
  static constexpr int kSource = 0;
  static constexpr int kSink = 1;

  struct Edge {
    int to;
    std::int64_t cap;
    std::int64_t cost;
    int pair;  // candidate index, -1 for structural arcs
    bool forward;
  };

  int addr_node(int a) const { return 2 + a; }
  int tree_node(int t) const { return 2 + n_addr_ + t; }

  int add_edge(int u, int v, std::int64_t cap, std::int64_t cost, int pair) {
    const int id = static_cast<int>(edges_.size());
    edges_.push_back({v, cap, cost, pair, true});
    edges_.push_back({u, 0, -cost, pair, false});
    adj_[static_cast<std::size_t>(u)].push_back(id);
    adj_[static_cast<std::size_t>(v)].push_back(id + 1);
    return id;
  }

  std::int64_t reduced(int from, const Edge& e) const {
    return e.cost + potential_[static_cast<std::size_t>(from)] - potential_[static_cast<std::size_t>(e.to)];
  }

  void push(int edge_id) {
    edges_[static_cast<std::size_t>(edge_id)].cap -= 1;
    edges_[static_cast<std::size_t>(edge_id ^ 1)].cap += 1;
  }

  // Augments one unit at a time while the cheapest source-sink path has
  // non-positive true cost. Cost as a function of flow value is convex, so the
  // final flow is optimal over all flow values.
  void successive_shortest_paths() {
    const std::size_t n = adj_.size();
    std::vector<std::int64_t> dist(n);
    std::vector<int> via(n);
    using Item = std::pair<std::int64_t, int>;
    while (true) {
      std::fill(dist.begin(), dist.end(), kInf);
      std::fill(via.begin(), via.end(), -1);
      std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
      dist[kSource] = 0;
      heap.push({0, kSource});
      while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d != dist[static_cast<std::size_t>(u)]) continue;
        for (int id : adj_[static_cast<std::size_t>(u)]) {
          const auto& e = edges_[static_cast<std::size_t>(id)];
          if (e.cap <= 0) continue;
          const std::int64_t nd = d + reduced(u, e);
          if (nd < dist[static_cast<std::size_t>(e.to)]) {
            dist[static_cast<std::size_t>(e.to)] = nd;
            via[static_cast<std::size_t>(e.to)] = id;
            heap.push({nd, e.to});
          }
        }
      }
      if (dist[kSink] >= kInf) break;
      const std::int64_t true_cost = dist[kSink] - potential_[kSource] + potential_[kSink];
      const std::int64_t cap_dist = dist[kSink];
      for (std::size_t v = 0; v < n; ++v) potential_[v] += std::min(dist[v], cap_dist);
      if (true_cost > 0) break;
      for (int v = kSink; v != kSource;) {
        const int id = via[static_cast<std::size_t>(v)];
        push(id);
        v = edges_[static_cast<std::size_t>(id ^ 1)].to;
      }
      ++flow_;
    }
  }

  // Return arc sink -> source turns the free-value flow into a circulation, so
  // that alternative optima with a different number of matches are reachable
  // as zero-cost cycles.
  void add_circulation_arc() {
    const int id = add_edge(kSink, kSource, kInf, 0, -1);
    edges_[static_cast<std::size_t>(id)].cap = kInf - flow_;
    edges_[static_cast<std::size_t>(id ^ 1)].cap = flow_;
  }

  // Shortest distances from a virtual root over the residual circulation.
  // Optimality guarantees the absence of negative cycles.
  void exact_potentials() {
    const std::size_t n = adj_.size();
    std::vector<std::int64_t> dist(n, 0);
    std::vector<char> queued(n, 1);
    std::deque<int> queue;
    for (std::size_t v = 0; v < n; ++v) queue.push_back(static_cast<int>(v));
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      queued[static_cast<std::size_t>(u)] = 0;
      for (int id : adj_[static_cast<std::size_t>(u)]) {
        const auto& e = edges_[static_cast<std::size_t>(id)];
        if (e.cap <= 0) continue;
        const std::int64_t nd = dist[static_cast<std::size_t>(u)] + e.cost;
        if (nd < dist[static_cast<std::size_t>(e.to)]) {
          dist[static_cast<std::size_t>(e.to)] = nd;
          if (!queued[static_cast<std::size_t>(e.to)]) {
            queued[static_cast<std::size_t>(e.to)] = 1;
            queue.push_back(e.to);
          }
        }
      }
    }
    potential_ = std::move(dist);
  }

  // Greedy walk over pairs in canonical order. Every optimal flow differs from
  // the current one by zero-reduced-cost residual cycles, so a pair can join
  // iff such a cycle through it avoids kept and rejected pairs.
  void canonicalize() {
    const std::size_t n_pairs = pair_edge_.size();
    std::vector<char> kept(n_pairs, 0);
    std::vector<char> rejected(n_pairs, 0);
    const std::size_t n = adj_.size();
    std::vector<int> via(n);

    for (std::size_t q = 0; q < n_pairs; ++q) {
      const int fwd = pair_edge_[q];
      const auto& pe = edges_[static_cast<std::size_t>(fwd)];
      const int a = edges_[static_cast<std::size_t>(fwd ^ 1)].to;
      const int t = pe.to;
      if (pe.cap == 0) {
        kept[q] = 1;
        continue;
      }
      if (reduced(a, pe) != 0) {
        rejected[q] = 1;
        continue;
      }

      std::fill(via.begin(), via.end(), -1);
      std::deque<int> bfs{t};
      via[static_cast<std::size_t>(t)] = fwd;
      bool found = false;
      while (!bfs.empty() && !found) {
        const int u = bfs.front();
        bfs.pop_front();
        for (int id : adj_[static_cast<std::size_t>(u)]) {
          const auto& e = edges_[static_cast<std::size_t>(id)];
          if (e.cap <= 0 || via[static_cast<std::size_t>(e.to)] != -1) continue;
          if (reduced(u, e) != 0) continue;
          if (e.pair >= 0) {
            const auto p = static_cast<std::size_t>(e.pair);
            if (e.forward && (rejected[p] || p == q)) continue;
            if (!e.forward && kept[p]) continue;
          }
          via[static_cast<std::size_t>(e.to)] = id;
          if (e.to == a) {
            found = true;
            break;
          }
          bfs.push_back(e.to);
        }
      }
      if (!found) {
        rejected[q] = 1;
        continue;
      }
      for (int v = a; v != t;) {
        const int id = via[static_cast<std::size_t>(v)];
        push(id);
        v = edges_[static_cast<std::size_t>(id ^ 1)].to;
      }
      push(fwd);
      kept[q] = 1;
    }
  }

  int n_addr_;
  std::vector<Edge> edges_;
  std::vector<std::vector<int>> adj_;
  std::vector<int> pair_edge_;
  std::vector<std::int64_t> potential_;
  std::int64_t flow_ = 0;
};

std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

}  // namespace

AssignmentResult solve_assignment(std::span<const CandidatePair> candidates, std::span<const int> capacities,
                                  std::size_t tree_count, double max_distance_m) {
  const std::size_t n_addr = capacities.size();
  for (std::size_t a = 0; a < n_addr; ++a) {
    if (capacities[a] <= 0) {
      throw InputError(fmt::format("address {} has non-positive capacity {}", a, capacities[a]));
    }
  }

  std::vector<std::size_t> order(candidates.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    const auto& p = candidates[x];
    const auto& r = candidates[y];
    return std::tie(p.address_index, p.tree_index) < std::tie(r.address_index, r.tree_index);
  });
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& c = candidates[order[k]];
    if (c.address_index >= n_addr || c.tree_index >= tree_count) {
      throw std::invalid_argument(fmt::format("candidate ({}, {}) out of range", c.address_index, c.tree_index));
    }
    if (!(c.dist_m >= 0.0 && c.dist_m <= max_distance_m)) {
      throw std::invalid_argument(
          fmt::format("candidate ({}, {}) distance {} outside [0, M]", c.address_index, c.tree_index, c.dist_m));
    }
    if (k > 0) {
      const auto& prev = candidates[order[k - 1]];
      if (prev.address_index == c.address_index && prev.tree_index == c.tree_index) {
        throw std::invalid_argument(fmt::format("duplicate candidate ({}, {})", c.address_index, c.tree_index));
      }
    }
  }

  // Connected components of the candidate graph solve independently.
  std::vector<std::size_t> parent(n_addr + tree_count);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  for (const auto& c : candidates) {
    const auto ra = find_root(parent, c.address_index);
    const auto rt = find_root(parent, n_addr + c.tree_index);
    if (ra != rt) parent[std::max(ra, rt)] = std::min(ra, rt);
  }
  std::unordered_map<std::size_t, std::vector<std::size_t>> by_component;
  std::vector<std::size_t> component_order;
  for (std::size_t k : order) {
    const auto root = find_root(parent, candidates[k].address_index);
    auto [it, inserted] = by_component.try_emplace(root);
    if (inserted) component_order.push_back(root);
    it->second.push_back(k);
  }

  AssignmentResult result;
  std::vector<int> local_addr(n_addr, -1);
  std::vector<int> local_tree(tree_count, -1);
  for (std::size_t root : component_order) {
    const auto& members = by_component[root];
    std::vector<std::size_t> addr_ids;
    std::vector<std::size_t> tree_ids;
    std::vector<LocalPair> pairs;
    pairs.reserve(members.size());
    for (std::size_t k : members) {
      const auto& c = candidates[k];
      if (local_addr[c.address_index] < 0) {
        local_addr[c.address_index] = static_cast<int>(addr_ids.size());
        addr_ids.push_back(c.address_index);
      }
      if (local_tree[c.tree_index] < 0) {
        local_tree[c.tree_index] = static_cast<int>(tree_ids.size());
        tree_ids.push_back(c.tree_index);
      }
      const auto gain = static_cast<std::int64_t>(std::llround((max_distance_m - c.dist_m) * kGainScale));
      pairs.push_back({local_addr[c.address_index], local_tree[c.tree_index], gain});
    }
    std::vector<int> caps;
    caps.reserve(addr_ids.size());
    for (std::size_t a : addr_ids) caps.push_back(capacities[a]);

    ComponentSolver solver(static_cast<int>(addr_ids.size()), static_cast<int>(tree_ids.size()), caps, pairs);
    const auto matched = solver.solve();
    for (std::size_t q = 0; q < members.size(); ++q) {
      if (matched[q]) result.matches.push_back(candidates[members[q]]);
    }
    for (std::size_t a : addr_ids) local_addr[a] = -1;
    for (std::size_t t : tree_ids) local_tree[t] = -1;
  }

  std::sort(result.matches.begin(), result.matches.end(), [](const Match& a, const Match& b) {
    return std::tie(a.address_index, a.tree_index) < std::tie(b.address_index, b.tree_index);
  });
  for (const auto& m : result.matches) result.objective_value += max_distance_m - m.dist_m;
  result.unmatched_trees = tree_count - result.matches.size();
  std::size_t total_capacity = 0;
  for (int k : capacities) total_capacity += static_cast<std::size_t>(k);
  result.unfilled_capacity = total_capacity - result.matches.size();
  return result;
}

std::vector<TreeGeocode> expand_to_trees(const AssignmentResult& result, std::span<const AddressGroup> groups,
                                         std::span<const FusedTree> trees) {
  std::vector<std::vector<const Match*>> per_address(groups.size());
  for (const auto& m : result.matches) {
    if (m.address_index >= groups.size() || m.tree_index >= trees.size()) {
      throw std::invalid_argument("match index out of range");
    }
    per_address[m.address_index].push_back(&m);
  }
  std::vector<TreeGeocode> out;
  for (std::size_t a = 0; a < groups.size(); ++a) {
    auto& list = per_address[a];
    if (list.empty()) continue;
    if (list.size() > groups[a].tree_ids.size()) {
      throw std::invalid_argument(fmt::format("address '{}' matched beyond its capacity", groups[a].address));
    }
    std::sort(list.begin(), list.end(), [](const Match* x, const Match* y) {
      return std::tie(x->dist_m, x->tree_index) < std::tie(y->dist_m, y->tree_index);
    });
    for (std::size_t k = 0; k < list.size(); ++k) {
      const auto& m = *list[k];
      out.push_back({groups[a].tree_ids[k], groups[a].address, trees[m.tree_index].point, m.dist_m, a, m.tree_index});
    }
  }
  return out;
}

}  // namespace treegeo
