#pragma once

#include <string>
#include <vector>

namespace bsem {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Column index by name, -1 when absent.
  int column(const std::string& name) const;
};

// UTF-8, comma-separated, '.' decimal separator, mandatory header row.
// Handles double-quoted fields (embedded commas/quotes); rows must have
// exactly as many fields as the header. Throws DataError on missing file or
// ragged rows.
CsvTable read_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// 10 significant digits, round-trip exact for decimals that fit.
std::string format_double(double v);

// strtod with full-string validation; throws DataError naming `context`.
double parse_double(const std::string& s, const std::string& context);
long parse_long(const std::string& s, const std::string& context);

}  // namespace bsem
