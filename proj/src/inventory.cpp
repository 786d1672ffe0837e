#include "treegeo/inventory.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <unordered_map>
#include <unordered_set>
#include <utility>

#include <fmt/format.h>

#include "treegeo/io.hpp"

namespace treegeo {

namespace {

constexpr std::array<std::pair<std::string_view, std::string_view>, 9> kSuffixes{{
    {"ST", "STREET"},
    {"AVE", "AVENUE"},
    {"BLVD", "BOULEVARD"},
    {"DR", "DRIVE"},
    {"RD", "ROAD"},
    {"LN", "LANE"},
    {"CT", "COURT"},
    {"PL", "PLACE"},
    {"WAY", "WAY"},
}};

constexpr std::array<std::string_view, 5> kUnitWords{"APT", "APARTMENT", "UNIT", "STE", "SUITE"};

constexpr std::array<std::string_view, 8> kDirections{"N", "S", "E", "W", "NE", "NW", "SE", "SW"};

template <std::size_t N>
bool contains(const std::array<std::string_view, N>& words, std::string_view w) {
  return std::find(words.begin(), words.end(), w) != words.end();
}

void expand_suffix(std::string& token) {
  for (const auto& [abbr, full] : kSuffixes) {
    if (token == abbr) {
      token = std::string(full);
      return;
    }
  }
}

}  // namespace

std::string normalize_address(std::string_view raw) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (char c : raw) {
    const auto uc = static_cast<unsigned char>(c);
    if (std::isspace(uc) || c == ',' || c == '.') {
      flush();
    } else if (c == '#') {
      // "#4" and "# 4" both mark a unit.
      flush();
      current.push_back('#');
    } else {
      current.push_back(static_cast<char>(std::toupper(uc)));
    }
  }
  flush();

  // Units never carry trees; everything from the designator on is dropped.
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    if (tokens[i].front() == '#' || contains(kUnitWords, tokens[i])) {
      tokens.resize(i);
      break;
    }
  }

  if (tokens.size() >= 2) {
    std::size_t suffix = tokens.size() - 1;
    if (contains(kDirections, tokens[suffix]) && suffix >= 2) --suffix;
    expand_suffix(tokens[suffix]);
  }

  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

InventoryLoad load_inventory(std::istream& source, const SchemaMap& schema, std::string_view source_name) {
  std::string line;
  if (!io::next_line(source, line, true)) {
    throw InputError(fmt::format("{}: missing header row", source_name));
  }
  const io::Header header(io::split_row(line, schema.delimiter));
  const std::size_t address_col = header.require(schema.address_column, source_name);
  auto optional_col = [&](const std::optional<std::string>& name) -> std::optional<std::size_t> {
    if (!name) return std::nullopt;
    return header.require(*name, source_name);
  };
  const auto id_col = optional_col(schema.id_column);
  const auto species_col = optional_col(schema.species_column);
  const auto lat_col = optional_col(schema.lat_column);
  const auto lon_col = optional_col(schema.lon_column);

  InventoryLoad result;
  std::unordered_set<std::string> seen_ids;
  std::size_t row_number = 0;
  while (io::next_line(source, line)) {
    ++row_number;
    const auto fields = io::split_row(line, schema.delimiter);
    auto field = [&](std::size_t idx) -> std::string {
      return idx < fields.size() ? io::trim(fields[idx]) : std::string{};
    };

    InventoryTree tree;
    tree.address = normalize_address(field(address_col));
    if (tree.address.empty()) {
      ++result.dropped_empty_address;
      continue;
    }
    tree.tree_id = id_col ? field(*id_col) : fmt::format("{}", row_number);
    if (tree.tree_id.empty()) {
      throw InputError(fmt::format("{}: data row {} has an empty tree id", source_name, row_number));
    }
    if (!seen_ids.insert(tree.tree_id).second) {
      throw InputError(fmt::format("{}: duplicate tree id '{}'", source_name, tree.tree_id));
    }
    if (species_col) {
      auto s = field(*species_col);
      if (!s.empty()) tree.species = std::move(s);
    }
    if (lat_col && lon_col) {
      const auto lat_text = field(*lat_col);
      const auto lon_text = field(*lon_col);
      if (!lat_text.empty() || !lon_text.empty()) {
        const auto lat = io::parse_double(lat_text);
        const auto lon = io::parse_double(lon_text);
        GeoPoint p{lat.value_or(0.0), lon.value_or(0.0)};
        if (lat && lon && is_valid(p)) {
          tree.ground_truth = p;
        } else {
          ++result.coordinate_warnings;
        }
      }
    }
    result.trees.push_back(std::move(tree));
  }
  return result;
}

std::vector<AddressGroup> group_by_address(const std::vector<InventoryTree>& trees) {
  std::vector<AddressGroup> groups;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& t : trees) {
    auto [it, inserted] = index.try_emplace(t.address, groups.size());
    if (inserted) groups.push_back(AddressGroup{t.address, {}});
    groups[it->second].tree_ids.push_back(t.tree_id);
  }
  return groups;
}

}  // namespace treegeo
