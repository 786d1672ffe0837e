#include "treegeo/formats.hpp"

#include <cmath>
#include <unordered_map>

#include <fmt/format.h>
#include <json.hpp>

#include "treegeo/io.hpp"

namespace treegeo::formats {

namespace {

using io::exact;
using io::fixed;

std::string coord(double v) { return fixed(v, 9); }

// Reads a header plus rows, calling `row` with the split fields and the
// 1-based line number. Enforces the expected column names in order.
template <typename Fn>
void read_table(std::istream& in, std::string_view name, const std::vector<std::string_view>& columns,
                std::size_t optional_tail, Fn&& row) {
  std::string line;
  if (!io::next_line(in, line, true)) throw InputError(fmt::format("{}: missing header row", name));
  const io::Header header(io::split_row(line, '\t'));
  const auto& names = header.names();
  const std::size_t required = columns.size() - optional_tail;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i >= names.size()) {
      if (i < required) throw InputError(fmt::format("{}: missing column '{}'", name, columns[i]));
      break;
    }
    if (names[i] != columns[i]) {
      throw InputError(fmt::format("{}: expected column '{}' at position {}, found '{}'", name, columns[i], i + 1,
                                   names[i]));
    }
  }
  const std::size_t width = std::min(names.size(), columns.size());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto fields = io::split_row(line, '\t');
    if (fields.size() < width) {
      throw InputError(fmt::format("{}:{}: expected {} fields, got {}", name, line_no, width, fields.size()));
    }
    row(fields, line_no);
  }
}

double number(const std::string& s, std::string_view name, std::size_t line_no, std::string_view column) {
  auto v = io::parse_double(s);
  if (!v) throw InputError(fmt::format("{}:{}: invalid {} '{}'", name, line_no, column, s));
  return *v;
}

long long integer(const std::string& s, std::string_view name, std::size_t line_no, std::string_view column) {
  auto v = io::parse_int(s);
  if (!v) throw InputError(fmt::format("{}:{}: invalid {} '{}'", name, line_no, column, s));
  return *v;
}

GeoPoint point(const std::string& lat, const std::string& lon, std::string_view name, std::size_t line_no) {
  GeoPoint p{number(lat, name, line_no, "lat"), number(lon, name, line_no, "lon")};
  if (!is_valid(p)) throw InputError(fmt::format("{}:{}: coordinate out of range", name, line_no));
  return p;
}

double rounded(double v) { return std::round(v * 1e9) / 1e9; }

}  // namespace

std::string write_inventory(const std::vector<InventoryTree>& trees) {
  std::string out = "tree_id\taddress\tspecies\n";
  for (const auto& t : trees) out += fmt::format("{}\t{}\t{}\n", t.tree_id, t.address, t.species.value_or(""));
  return out;
}

std::vector<InventoryTree> read_inventory(std::istream& in, std::string_view name) {
  std::vector<InventoryTree> out;
  read_table(in, name, {"tree_id", "address", "species"}, 0, [&](const auto& f, std::size_t) {
    InventoryTree t;
    t.tree_id = f[0];
    t.address = f[1];
    if (!f[2].empty()) t.species = f[2];
    out.push_back(std::move(t));
  });
  return out;
}

std::string write_ground_truth(const std::vector<InventoryTree>& trees) {
  std::string out = "tree_id\tlat\tlon\n";
  for (const auto& t : trees) {
    if (t.ground_truth) out += fmt::format("{}\t{}\t{}\n", t.tree_id, coord(t.ground_truth->lat), coord(t.ground_truth->lon));
  }
  return out;
}

std::map<std::string, GeoPoint> read_ground_truth(std::istream& in, std::string_view name) {
  std::map<std::string, GeoPoint> out;
  read_table(in, name, {"tree_id", "lat", "lon"}, 0, [&](const auto& f, std::size_t line_no) {
    if (!out.emplace(f[0], point(f[1], f[2], name, line_no)).second) {
      throw InputError(fmt::format("{}:{}: duplicate tree id '{}'", name, line_no, f[0]));
    }
  });
  return out;
}

std::string write_geocoded(const std::vector<GeocodedAddress>& records) {
  std::string out = "address\tlat\tlon\taccuracy\tcapacity\toutlier\n";
  for (const auto& r : records) {
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", r.address, r.point ? coord(r.point->lat) : "",
                       r.point ? coord(r.point->lon) : "", to_string(r.accuracy), r.capacity, r.outlier ? 1 : 0);
  }
  return out;
}

std::vector<GeocodedAddress> read_geocoded(std::istream& in, std::string_view name) {
  std::vector<GeocodedAddress> out;
  read_table(in, name, {"address", "lat", "lon", "accuracy", "capacity", "outlier"}, 0,
             [&](const auto& f, std::size_t line_no) {
               GeocodedAddress r;
               r.address = f[0];
               auto acc = parse_accuracy(f[3]);
               if (!acc) throw InputError(fmt::format("{}:{}: unknown accuracy '{}'", name, line_no, f[3]));
               r.accuracy = *acc;
               if (r.accuracy != Accuracy::Failed) r.point = point(f[1], f[2], name, line_no);
               r.capacity = static_cast<int>(integer(f[4], name, line_no, "capacity"));
               r.outlier = f[5] == "1";
               out.push_back(std::move(r));
             });
  return out;
}

std::string write_panoramas(const std::vector<PanoramaMeta>& panos) {
  std::string out = "pano_id\tlat\tlon\theading\twidth_px\theight_px\tcamera_height_m\n";
  for (const auto& p : panos) {
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\n", p.pano_id, coord(p.camera.lat), coord(p.camera.lon),
                       exact(p.heading), p.width_px, p.height_px, exact(p.camera_height_m));
  }
  return out;
}

std::vector<PanoramaMeta> read_panoramas(std::istream& in, double default_camera_height_m, std::string_view name) {
  std::vector<PanoramaMeta> out;
  read_table(in, name, {"pano_id", "lat", "lon", "heading", "width_px", "height_px", "camera_height_m"}, 1,
             [&](const auto& f, std::size_t line_no) {
               PanoramaMeta p;
               p.pano_id = f[0];
               p.camera = point(f[1], f[2], name, line_no);
               p.heading = number(f[3], name, line_no, "heading");
               p.width_px = static_cast<int>(integer(f[4], name, line_no, "width_px"));
               p.height_px = static_cast<int>(integer(f[5], name, line_no, "height_px"));
               p.camera_height_m = f.size() > 6 && !f[6].empty() ? number(f[6], name, line_no, "camera_height_m")
                                                                 : default_camera_height_m;
               try {
                 validate(p);
               } catch (const std::invalid_argument& e) {
                 throw InputError(fmt::format("{}:{}: {}", name, line_no, e.what()));
               }
               out.push_back(std::move(p));
             });
  return out;
}

std::string write_detections(const std::vector<Detection>& dets) {
  std::string out = "pano_id\tx_min\ty_min\tx_max\ty_max\tscore\n";
  for (const auto& d : dets) {
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", d.pano_id, exact(d.bbox.x_min), exact(d.bbox.y_min),
                       exact(d.bbox.x_max), exact(d.bbox.y_max), exact(d.score));
  }
  return out;
}

std::vector<Detection> read_detections(std::istream& in, std::string_view name) {
  std::vector<Detection> out;
  read_table(in, name, {"pano_id", "x_min", "y_min", "x_max", "y_max", "score"}, 0,
             [&](const auto& f, std::size_t line_no) {
               Detection d;
               d.pano_id = f[0];
               d.bbox = {number(f[1], name, line_no, "x_min"), number(f[2], name, line_no, "y_min"),
                         number(f[3], name, line_no, "x_max"), number(f[4], name, line_no, "y_max")};
               d.score = number(f[5], name, line_no, "score");
               out.push_back(std::move(d));
             });
  return out;
}

std::string write_projected(const std::vector<ProjectedDetection>& dets) {
  std::string out = "pano_id\tlat\tlon\tscore\tcamera_distance_m\n";
  for (const auto& d : dets) {
    out += fmt::format("{}\t{}\t{}\t{}\t{}\n", d.source_pano, coord(d.point.lat), coord(d.point.lon), exact(d.score),
                       exact(d.camera_distance_m));
  }
  return out;
}

std::vector<ProjectedDetection> read_projected(std::istream& in, std::string_view name) {
  std::vector<ProjectedDetection> out;
  read_table(in, name, {"pano_id", "lat", "lon", "score", "camera_distance_m"}, 0,
             [&](const auto& f, std::size_t line_no) {
               ProjectedDetection d;
               d.source_pano = f[0];
               d.point = point(f[1], f[2], name, line_no);
               d.score = number(f[3], name, line_no, "score");
               d.camera_distance_m = number(f[4], name, line_no, "camera_distance_m");
               out.push_back(std::move(d));
             });
  return out;
}

std::string write_fused(const std::vector<FusedTree>& trees) {
  std::string out = "tree_index\tlat\tlon\tfused_score\tmember_count\tmember_panos\n";
  for (std::size_t i = 0; i < trees.size(); ++i) {
    const auto& t = trees[i];
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", i, coord(t.point.lat), coord(t.point.lon), exact(t.fused_score),
                       t.member_count, fmt::join(t.member_panos, ","));
  }
  return out;
}

std::vector<FusedTree> read_fused(std::istream& in, std::string_view name) {
  std::vector<FusedTree> out;
  read_table(in, name, {"tree_index", "lat", "lon", "fused_score", "member_count", "member_panos"}, 0,
             [&](const auto& f, std::size_t line_no) {
               if (integer(f[0], name, line_no, "tree_index") != static_cast<long long>(out.size())) {
                 throw InputError(fmt::format("{}:{}: tree_index out of sequence", name, line_no));
               }
               FusedTree t;
               t.point = point(f[1], f[2], name, line_no);
               t.fused_score = number(f[3], name, line_no, "fused_score");
               t.member_count = static_cast<int>(integer(f[4], name, line_no, "member_count"));
               for (auto& p : io::split_row(f[5], ',')) {
                 if (!p.empty()) t.member_panos.insert(std::move(p));
               }
               out.push_back(std::move(t));
             });
  return out;
}

std::string write_assignment(const AssignmentResult& result, const std::vector<GeocodedAddress>& addresses) {
  std::string out = "address\ttree_index\tdist_m\n";
  for (const auto& m : result.matches) {
    out += fmt::format("{}\t{}\t{}\n", addresses.at(m.address_index).address, m.tree_index, exact(m.dist_m));
  }
  return out;
}

std::vector<Match> read_assignment(std::istream& in, const std::vector<GeocodedAddress>& addresses,
                                   std::string_view name) {
  std::unordered_map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < addresses.size(); ++i) index.emplace(addresses[i].address, i);
  std::vector<Match> out;
  read_table(in, name, {"address", "tree_index", "dist_m"}, 0, [&](const auto& f, std::size_t line_no) {
    auto it = index.find(f[0]);
    if (it == index.end()) throw InputError(fmt::format("{}:{}: unknown address '{}'", name, line_no, f[0]));
    const auto tree = integer(f[1], name, line_no, "tree_index");
    if (tree < 0) throw InputError(fmt::format("{}:{}: negative tree_index", name, line_no));
    out.push_back({it->second, static_cast<std::size_t>(tree), number(f[2], name, line_no, "dist_m")});
  });
  return out;
}

std::string write_matches(const std::vector<TreeGeocode>& matches) {
  std::string out = "tree_id\taddress\tlat\tlon\tdist_m\n";
  for (const auto& m : matches) {
    out += fmt::format("{}\t{}\t{}\t{}\t{}\n", m.tree_id, m.address, coord(m.point.lat), coord(m.point.lon),
                       fixed(m.dist_m, 3));
  }
  return out;
}

std::string fused_geojson(const std::vector<FusedTree>& trees) {
  nlohmann::json features = nlohmann::json::array();
  for (std::size_t i = 0; i < trees.size(); ++i) {
    const auto& t = trees[i];
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Point"}, {"coordinates", {rounded(t.point.lon), rounded(t.point.lat)}}}},
                        {"properties",
                         {{"tree_index", i}, {"fused_score", t.fused_score}, {"member_count", t.member_count}}}});
  }
  nlohmann::json doc{{"type", "FeatureCollection"}, {"features", std::move(features)}};
  return doc.dump(1) + "\n";
}

std::string matches_geojson(const std::vector<TreeGeocode>& matches, const std::vector<FusedTree>& trees) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& m : matches) {
    features.push_back(
        {{"type", "Feature"},
         {"geometry", {{"type", "Point"}, {"coordinates", {rounded(m.point.lon), rounded(m.point.lat)}}}},
         {"properties",
          {{"tree_id", m.tree_id},
           {"address", m.address},
           {"score", trees.at(m.fused_index).fused_score},
           {"dist_m", std::round(m.dist_m * 1000.0) / 1000.0}}}});
  }
  nlohmann::json doc{{"type", "FeatureCollection"}, {"features", std::move(features)}};
  return doc.dump(1) + "\n";
}

}  // namespace treegeo::formats
