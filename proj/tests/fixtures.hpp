#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "bsem/data_model.hpp"

namespace bsem::testfix {

// Fixture engineered to the derived vocabulary widths: 10 RU types + 4 modes
// (14 columns), 6 antennas values (+5 under A), 5 bandwidths (+16 under B
// across 4 slots), 9 frequencies (+32 under F), 8 days, 24 hours, 924 BSIDs.
// Fitted plans on this dataset reproduce the published dimension grid
// {ABF 204, AB 172, AF 188, BF 199, A 156, B 167, F 183, Numerical 151,
//  No-BSID 140, One-Hot-BSID 1064}.
inline Dataset dimension_fixture() {
  const std::vector<double> freqs = {700,  900,  1500, 1800, 2100,
                                     2600, 3500, 3700, 4900};
  const std::vector<double> bws = {5, 10, 20, 40, 80};
  const std::vector<int> ants = {2, 4, 8, 16, 32, 64};
  Dataset ds;
  char id[16];
  for (int i = 0; i < 924; ++i) {
    std::snprintf(id, sizeof id, "BS%04d", i);
    MeasurementRecord r;
    r.bs_id = id;
    r.ru_type = "RU" + std::to_string(i % 10);
    r.mode = "M" + std::to_string(i % 4);
    r.antennas = ants[i % 6];
    r.day = i % 8;
    r.hour = i % 24;
    r.energy = 10.0 + static_cast<double>(i % 7);
    const std::size_t n_cells = 1 + i % 4;
    for (std::size_t c = 0; c < n_cells; ++c) {
      CellFeatures cf;
      cf.load = 0.3 + 0.1 * static_cast<double>(c);
      cf.es_mode = {0.1, 0, 0, 0, 0, 0};
      cf.tx_power = 10.0;
      cf.frequency = freqs[(i + static_cast<int>(c)) % freqs.size()];
      cf.bandwidth = bws[(i + static_cast<int>(c)) % bws.size()];
      r.cells.push_back(cf);
    }
    ds.records.push_back(std::move(r));
  }
  return ds;
}

}  // namespace bsem::testfix
