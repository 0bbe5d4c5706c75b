#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace graphboost::csv {

/// Header plus rows of raw cells. Quoting follows RFC 4180.
struct Document {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Parses CSV text. Throws DataError on ragged rows or unterminated quotes.
/// An input with no bytes yields an empty document (no header).
Document parse(std::string_view text);
Document read_file(const std::filesystem::path& path);

/// Quotes a cell only when it contains a delimiter, quote, or line break.
std::string escape(std::string_view cell);
void write_row(std::ostream& out, const std::vector<std::string>& cells);

}  // namespace graphboost::csv
