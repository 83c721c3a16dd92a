#pragma once

#include <array>
#include <set>
#include <string>
#include <vector>

namespace bsem {

// Per-cell telemetry for one hour. An inactive/padded cell is all-zero;
// an active cell has frequency > 0 and bandwidth > 0.
struct CellFeatures {
  double load = 0.0;                    // traffic load in [0,1]
  std::array<double, 6> es_mode{};      // energy-saving mode activation levels, >= 0
  double tx_power = 0.0;                // vendor units, treated unitless
  double frequency = 0.0;               // MHz
  double bandwidth = 0.0;               // MHz

  bool is_zero() const {
    if (load != 0.0 || tx_power != 0.0 || frequency != 0.0 || bandwidth != 0.0)
      return false;
    for (double v : es_mode)
      if (v != 0.0) return false;
    return true;
  }
  bool is_active() const { return !is_zero(); }
};

// One BS-hour sample. Immutable by convention after construction.
struct MeasurementRecord {
  std::string bs_id;                    // opaque identifier, never parsed
  std::string ru_type;
  std::string mode;
  int antennas = 0;
  std::vector<CellFeatures> cells;      // 1..4 entries, index 0 = primary
  int day = 0;                          // >= 0; vocabulary is fitted, not hard-coded
  int hour = 0;                         // 0..23
  double energy = 0.0;                  // measured consumption, > 0
};

struct Dataset {
  std::vector<MeasurementRecord> records;
  std::string provenance;
};

struct SplitManifest {
  std::set<std::string> train_bs_ids;
  std::set<std::string> test_in_domain_ids;    // subset of train_bs_ids
  std::set<std::string> test_cross_domain_ids; // disjoint from train_bs_ids

  // Throws DataError if the set invariants are violated.
  void validate() const;
};

enum class Cohort { in_domain, cross_domain };

// Partition function over the union of the two test sets.
// Throws DataError when bs_id is in neither test set.
Cohort classify_sample(const MeasurementRecord& record,
                       const SplitManifest& manifest);

// Returns every invariant violation with its field name; empty means ok.
// Violations are data, not faults: this never throws.
std::vector<std::string> validate_record(const MeasurementRecord& record);

}  // namespace bsem
