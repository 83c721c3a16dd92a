#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "bsem/data_model.hpp"

namespace bsem {

enum class BsidMode { embedding, onehot, none };

std::string to_string(BsidMode mode);
BsidMode bsid_mode_from_string(const std::string& s);

// Declarative description of how a record becomes a vector. The A/B/F flags
// switch antennas/bandwidth/frequency between direct numeric input and
// one-hot blocks.
struct PlanTemplate {
  bool onehot_antennas = true;
  bool onehot_bandwidth = true;
  bool onehot_frequency = true;
  BsidMode bsid_mode = BsidMode::embedding;
  // z-score direct numerics with training statistics; off reproduces the raw
  // direct-input scheme.
  bool normalize = true;
  // Width of the model-side BSID embedding; participates in dimension
  // accounting only (the table itself lives in the model).
  std::size_t embed_dim = 64;
};

struct FeatureStats {
  double mean = 0.0;
  double stddev = 1.0;  // zero-variance features get stddev := 1
};

struct CellSlotStats {
  FeatureStats load;
  std::array<FeatureStats, 6> es_mode;
  FeatureStats tx_power;
  FeatureStats frequency;
  FeatureStats bandwidth;
};

// A fitted plan. Vocabularies hold the distinct training values, sorted
// (lexicographic for strings, ascending for numerics). Per-cell statistics
// and the frequency/bandwidth vocabularies are fitted over *active* cell
// slots only; padded slots always encode to zeros.
struct EncodingPlan {
  PlanTemplate tmpl;

  std::vector<std::string> ru_type_vocab;
  std::vector<std::string> mode_vocab;
  std::vector<std::string> bsid_vocab;  // index i holds the BSID mapped to i+1
  std::vector<double> day_vocab;
  std::vector<double> hour_vocab;
  std::vector<double> antennas_vocab;
  std::vector<double> frequency_vocab;  // aggregate over the 4 cell slots
  std::vector<double> bandwidth_vocab;  // aggregate over the 4 cell slots

  FeatureStats antennas_stats;
  std::array<CellSlotStats, 4> cell_stats;

  bool fitted = false;
};

// Dense vector plus the embedding-table index (present only when
// bsid_mode = embedding; 0 is the reserved unknown row).
struct FeatureVector {
  std::vector<double> values;
  std::size_t bsid_index = 0;
  bool has_bsid_index = false;
};

// Fits vocabularies, the BSID index map (1..N in sorted order, 0 reserved)
// and normalization statistics on the training set. Throws DataError on an
// empty dataset.
EncodingPlan fit(const PlanTemplate& tmpl, const Dataset& train);

// Pure; safe for concurrent use on a fitted plan. Out-of-vocabulary
// categories encode as all-zero one-hot blocks; unknown BSIDs map to index 0.
//
// Frozen block order:
//   ru_type | mode | antennas | cell1..cell4 (load, esmode1..6, txpower,
//   frequency, bandwidth) | day | hour | bsid (onehot mode only)
FeatureVector encode(const MeasurementRecord& record, const EncodingPlan& plan);

// Exact length of every vector encode() produces.
std::size_t encoded_width(const EncodingPlan& plan);

// Model-input dimension: encoded_width plus embed_dim when
// bsid_mode = embedding. This matches the dimension accounting used by the
// ablation grid (e.g. 204 = 140 + 64).
std::size_t dimension(const EncodingPlan& plan);

// Training-BSID index, >= 1; anything unseen (including the empty string)
// maps to the reserved unknown index 0.
std::size_t bsid_index(const std::string& bs_id, const EncodingPlan& plan);

struct BlockInfo {
  std::string name;
  std::size_t offset = 0;
  std::size_t width = 0;
};

// The frozen block layout with offsets into the encoded vector.
std::vector<BlockInfo> layout(const EncodingPlan& plan);

// Span of the BSID one-hot block; width 0 unless bsid_mode = onehot.
BlockInfo bsid_onehot_block(const EncodingPlan& plan);

// Sidecar serialization (JSON) so checkpoints are self-describing.
void save_plan(const EncodingPlan& plan, const std::string& path);
EncodingPlan load_plan(const std::string& path);

// Whole-dataset encoding into one row-major matrix plus targets.
// bsid_idx is empty unless bsid_mode = embedding.
struct EncodedDataset {
  std::vector<double> features;  // row-major, n x encoded_width(plan)
  std::size_t width = 0;
  std::vector<std::size_t> bsid_idx;
  std::vector<double> targets;

  std::size_t size() const { return targets.size(); }
  const double* row(std::size_t i) const { return features.data() + i * width; }
};

EncodedDataset encode_dataset(const Dataset& ds, const EncodingPlan& plan);

}  // namespace bsem
