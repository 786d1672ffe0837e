#pragma once

#include <cmath>
#include <cstdint>
#include <unordered_map>
#include <vector>

#include "treegeo/geo.hpp"

namespace treegeo {

/// Uniform bucket grid over a local metric frame. Cells are `cell_m` wide;
/// queries return every stored index in the (2r+1)^2 block of cells around
/// a point, so callers must still filter by exact distance.
class SpatialGrid {
 public:
  SpatialGrid(const LocalFrame& frame, double cell_m) : frame_(frame), cell_m_(cell_m) {}

  void insert(const GeoPoint& p, std::size_t index) { cells_[key(cell_of(p))].push_back(index); }

  template <typename Fn>
  void for_each_near(const GeoPoint& p, int ring, Fn&& fn) const {
    const auto c = cell_of(p);
    for (std::int64_t dx = -ring; dx <= ring; ++dx) {
      for (std::int64_t dy = -ring; dy <= ring; ++dy) {
        auto it = cells_.find(key({c.x + dx, c.y + dy}));
        if (it == cells_.end()) continue;
        for (std::size_t idx : it->second) fn(idx);
      }
    }
  }

 private:
  struct Cell {
    std::int64_t x;
    std::int64_t y;
  };

  Cell cell_of(const GeoPoint& p) const {
    const auto xy = frame_.to_local(p);
    return {static_cast<std::int64_t>(std::floor(xy.x / cell_m_)),
            static_cast<std::int64_t>(std::floor(xy.y / cell_m_))};
  }

  static std::uint64_t key(Cell c) {
    return (static_cast<std::uint64_t>(c.x) << 32) ^ (static_cast<std::uint64_t>(c.y) & 0xffffffffULL);
  }

  LocalFrame frame_;
  double cell_m_;
  std::unordered_map<std::uint64_t, std::vector<std::size_t>> cells_;
};

}  // namespace treegeo
