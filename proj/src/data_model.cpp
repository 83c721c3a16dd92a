#include "bsem/data_model.hpp"

#include <cmath>

#include "bsem/errors.hpp"

namespace bsem {

void SplitManifest::validate() const {
  for (const auto& id : test_cross_domain_ids) {
    if (train_bs_ids.count(id))
      throw DataError("SplitManifest: cross-domain bs_id '" + id +
                      "' also appears in the training set");
  }
  for (const auto& id : test_in_domain_ids) {
    if (!train_bs_ids.count(id))
      throw DataError("SplitManifest: in-domain bs_id '" + id +
                      "' is not a training bs_id");
  }
}

Cohort classify_sample(const MeasurementRecord& record,
                       const SplitManifest& manifest) {
  const bool cross = manifest.test_cross_domain_ids.count(record.bs_id) != 0;
  const bool in = manifest.test_in_domain_ids.count(record.bs_id) != 0;
  if (cross) return Cohort::cross_domain;
  if (in) return Cohort::in_domain;
  throw DataError("classify_sample: bs_id '" + record.bs_id +
                  "' is in neither test set");
}

std::vector<std::string> validate_record(const MeasurementRecord& r) {
  std::vector<std::string> violations;

  if (r.cells.empty() || r.cells.size() > 4)
    violations.push_back("cells count out of [1,4]");
  if (r.hour < 0 || r.hour > 23) violations.push_back("hour out of range");
  if (r.day < 0) violations.push_back("day negative");
  if (!(r.energy > 0.0) || !std::isfinite(r.energy))
    violations.push_back("energy not positive");
  if (r.antennas < 1) violations.push_back("antennas not positive");

  for (std::size_t i = 0; i < r.cells.size(); ++i) {
    const CellFeatures& c = r.cells[i];
    const std::string prefix = "cells[" + std::to_string(i) + "].";
    if (c.load < 0.0 || c.load > 1.0)
      violations.push_back(prefix + "load out of [0,1]");
    for (std::size_t k = 0; k < c.es_mode.size(); ++k) {
      if (c.es_mode[k] < 0.0)
        violations.push_back(prefix + "esmode" + std::to_string(k + 1) +
                             " negative");
    }
    if (c.is_active()) {
      if (!(c.frequency > 0.0))
        violations.push_back(prefix + "frequency not positive for active cell");
      if (!(c.bandwidth > 0.0))
        violations.push_back(prefix + "bandwidth not positive for active cell");
    }
  }
  return violations;
}

}  // namespace bsem
