#pragma once

#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace treegeo {

/// Fatal problem with an input file or stream (missing column, bad header...).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace io {

/// Splits one delimited line. Double-quoted fields may contain the delimiter;
/// a doubled quote inside a quoted field is a literal quote.
std::vector<std::string> split_row(std::string_view line, char delimiter);

/// Reads the next non-empty line, stripping a trailing '\r' and a leading
/// UTF-8 byte order mark on the first line. Returns false at end of stream.
bool next_line(std::istream& in, std::string& line, bool first_line = false);

std::optional<double> parse_double(std::string_view s);
std::optional<long long> parse_int(std::string_view s);

std::string trim(std::string_view s);

/// Fixed-point formatting with `decimals` digits; -0 is printed as 0.
std::string fixed(double v, int decimals);

/// Shortest text that parses back to exactly `v`.
std::string exact(double v);

/// Column lookup over a header row.
class Header {
 public:
  explicit Header(std::vector<std::string> names);

  std::optional<std::size_t> find(std::string_view name) const;
  /// Throws InputError naming the column when absent.
  std::size_t require(std::string_view name, std::string_view source) const;

  const std::vector<std::string>& names() const noexcept { return names_; }

 private:
  std::vector<std::string> names_;
};

/// Opens a file for reading, throwing InputError naming the path on failure.
std::ifstream open_input(const std::filesystem::path& path);

/// Writes `contents` to `path` via a temporary sibling and rename.
void write_atomic(const std::filesystem::path& path, std::string_view contents);

}  // namespace io
}  // namespace treegeo
