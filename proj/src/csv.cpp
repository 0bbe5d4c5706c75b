#include "graphboost/csv.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "graphboost/common.hpp"

namespace graphboost::csv {
namespace {

// Splits text into records; each record is a list of cells. Handles quoted
// cells with embedded delimiters, doubled quotes and line breaks.
std::vector<std::vector<std::string>> records(std::string_view text) {
  std::vector<std::vector<std::string>> out;
  std::vector<std::string> record;
  std::string cell;
  bool quoted = false;
  bool cell_started = false;
  std::size_t line = 1;

  auto end_cell = [&] {
    record.push_back(std::move(cell));
    cell.clear();
    cell_started = false;
  };
  auto end_record = [&] {
    end_cell();
    // Blank lines are ignored.
    if (!(record.size() == 1 && record[0].empty())) out.push_back(std::move(record));
    record.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        if (c == '\n') ++line;
        cell.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (cell_started || !cell.empty())
          throw DataError("csv line " + std::to_string(line) + ": stray quote inside cell");
        quoted = true;
        cell_started = true;
        break;
      case ',':
        end_cell();
        break;
      case '\r':
        break;
      case '\n':
        end_record();
        ++line;
        break;
      default:
        cell.push_back(c);
    }
  }
  if (quoted) throw DataError("csv: unterminated quoted cell");
  if (!cell.empty() || cell_started || !record.empty()) end_record();
  return out;
}

}  // namespace

Document parse(std::string_view text) {
  // Strip a UTF-8 byte order mark.
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);
  auto recs = records(text);
  Document doc;
  if (recs.empty()) return doc;
  doc.header = std::move(recs.front());
  doc.rows.reserve(recs.size() - 1);
  for (std::size_t r = 1; r < recs.size(); ++r) {
    if (recs[r].size() != doc.header.size()) {
      throw DataError("csv: ragged row " + std::to_string(r + 1) + " has " +
                      std::to_string(recs[r].size()) + " cells, header has " +
                      std::to_string(doc.header.size()));
    }
    doc.rows.push_back(std::move(recs[r]));
  }
  return doc;
}

Document read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse(buffer.str());
}

std::string escape(std::string_view cell) {
  if (cell.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(cell);
  std::string out = "\"";
  for (char c : cell) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

void write_row(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    out << escape(cells[i]);
  }
  out << '\n';
}

}  // namespace graphboost::csv
