#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "bsem/data_model.hpp"

namespace bsem::ingest {

inline constexpr int kCellSlots = 4;

// Canonical flat schema, one row per BS-hour:
//   bs_id, ru_type, mode, antennas, day, hour, energy,
//   then per cell c in 1..4:
//     load_c, esmode1_c .. esmode6_c, txpower_c, frequency_c, bandwidth_c
// Absent cells are written as zeros. 47 columns total.
std::vector<std::string> canonical_header();

struct ParseReport {
  std::size_t rows_parsed = 0;
  std::size_t rows_dropped = 0;          // permissive mode only
  std::vector<std::string> drop_reasons; // one line per dropped row
};

// Parses a canonical CSV. Every record passes validate_record or the row is
// reported: by default a violating row aborts with a DataError naming it;
// with permissive=true the row is dropped and counted instead. Trailing
// all-zero cells are trimmed (at least one cell is kept). Duplicate
// (bs_id, day, hour) keys are an error.
Dataset parse_canonical(const std::string& path, bool permissive = false,
                        ParseReport* report = nullptr);

// Inverse of parse_canonical: numbers carry 10 significant digits.
void write_canonical(const Dataset& ds, const std::string& path);

// Manifest file schema: CSV with columns bs_id, role; role in
// {train, test_in, test_cross}. A bs_id may appear once per role;
// role test_in implies train membership and is rejected otherwise.
SplitManifest read_manifest(const std::string& path);
void write_manifest(const SplitManifest& manifest, const std::string& path);

struct JoinResult {
  Dataset dataset;
  std::size_t dropped_rows = 0;  // unmatched under inner-join semantics
};

// Adapter for the three-file challenge layout:
//   bs_info:   one row per BS      (bs_id, ru_type, mode, antennas)
//   cell_data: one row per BS-hour-cell (bs_id, day, hour, cell, load,
//              esmode1..esmode6, txpower, frequency, bandwidth)
//   energy:    one row per BS-hour (bs_id, day, hour, energy)
// column_map renames canonical column names to the actual file headers
// (canonical -> actual); unmapped names are used as-is. Cells are grouped
// per BS-hour in ascending cell-index order; more than four cells for one
// BS-hour is an error, as are duplicate join keys.
JoinResult join_challenge_layout(const std::string& bs_info_path,
                                 const std::string& cell_data_path,
                                 const std::string& energy_path,
                                 const std::map<std::string, std::string>& column_map);

// Partitions by manifest role. The held-out period for in-domain test BSs is
// the dataset's final day (max day value): records of a test_in BS on that
// day go to test, its earlier records to train. Cross-domain BS records are
// all test; train-only BS records are all train. Throws DataError naming any
// bs_id missing from the manifest.
std::pair<Dataset, Dataset> split_by_manifest(const Dataset& ds,
                                              const SplitManifest& manifest);

}  // namespace bsem::ingest
