#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "treegeo/geo.hpp"

namespace treegeo {

struct InventoryTree {
  std::string tree_id;
  std::string address;  // normalized
  std::optional<std::string> species;
  std::optional<GeoPoint> ground_truth;
};

/// All inventory trees sharing one normalized address. capacity() is the K
/// bound used by the assignment.
struct AddressGroup {
  std::string address;
  std::vector<std::string> tree_ids;  // inventory order

  int capacity() const noexcept { return static_cast<int>(tree_ids.size()); }
};

/// Maps logical fields onto the column names of a legacy inventory file.
struct SchemaMap {
  std::string address_column = "address";
  std::optional<std::string> id_column;
  std::optional<std::string> species_column;
  std::optional<std::string> lat_column;
  std::optional<std::string> lon_column;
  char delimiter = ',';
};

struct InventoryLoad {
  std::vector<InventoryTree> trees;
  std::size_t dropped_empty_address = 0;
  std::size_t coordinate_warnings = 0;
};

/// Canonical address form: uppercase, punctuation dropped, whitespace
/// collapsed, unit designators ("APT 4", "#4", "UNIT B", "STE 2") removed and
/// the street suffix expanded (ST -> STREET, AVE -> AVENUE, ...). Idempotent.
std::string normalize_address(std::string_view raw);

/// Parses a delimited inventory with a header row. Rows without an address
/// are dropped and counted; unparsable coordinates are counted and leave
/// ground_truth empty. Throws InputError for a missing mapped column,
/// a missing header, or duplicate tree ids.
InventoryLoad load_inventory(std::istream& source, const SchemaMap& schema,
                             std::string_view source_name = "inventory");

/// Groups trees by address in order of first appearance.
std::vector<AddressGroup> group_by_address(const std::vector<InventoryTree>& trees);

}  // namespace treegeo
