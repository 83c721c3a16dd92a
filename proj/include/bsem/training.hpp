#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "bsem/data_model.hpp"
#include "bsem/encoder.hpp"
#include "bsem/model.hpp"
#include "bsem/nn.hpp"

namespace bsem {

enum class SelectionMode {
  // Hold out a fraction of training BSs (by BS, not by sample) and pick the
  // epoch with the best MAPE on their samples. Default: avoids test leakage.
  validation_split,
  // Evaluate on the caller-supplied test set after every epoch and keep the
  // best epoch. Reproduces the original protocol verbatim; leaks test
  // information by construction, so it is opt-in and labeled.
  test_set_paper_protocol,
};

struct TrainConfig {
  std::size_t epochs = 1000;
  std::size_t batch_size = 512;
  double mask_prob = 0.30;
  AdamConfig adam;
  std::uint64_t seed = 0;
  SelectionMode selection = SelectionMode::validation_split;
  double validation_fraction = 0.10;  // of training BSs
  bool shuffle = true;
  // Mask exactly round(mask_prob * n) samples per epoch instead of
  // independent Bernoulli draws.
  bool quota_mask = false;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_mape = 0.0;
  double selection_mape = 0.0;
  std::size_t masked_count = 0;
  double seconds = 0.0;  // wall clock; excluded from determinism digests
};

// Weighted MAPE: sum|y - yhat| / sum|y|. A ratio of sums, not a mean of
// per-sample percentages; scale-invariant. Throws std::invalid_argument on
// empty/mismatched inputs or sum|y| = 0.
double mape(std::span<const double> y, std::span<const double> yhat);

// dMAPE/dyhat_i = sign(yhat_i - y_i) / sum|y|, with sign(0) := 0.
std::vector<double> mape_gradient(std::span<const double> y,
                                  std::span<const double> yhat);

// Each index independently replaced by the reserved unknown index 0 with
// probability mask_prob; fresh draws per call (the mask never persists across
// epochs).
std::vector<std::size_t> apply_mask(const std::vector<std::size_t>& indices,
                                    double mask_prob, RngStream& rng);

struct TrainResult {
  EnergyModel model;  // parameters of the best-selection epoch
  std::vector<EpochStats> history;
  std::size_t best_epoch = 0;  // 1-based
  double best_selection_mape = 0.0;
};

// Masked-BSID training loop: per epoch shuffle, batch, mask, forward, batch
// MAPE loss, backward, Adam. The returned model is the epoch arg-min of
// selection MAPE (ties go to the earliest epoch); history has exactly
// `epochs` entries. Masking replaces embedding indices by row 0, or zeroes
// the BSID one-hot block in onehot runs; it is a no-op for bsid_mode = none.
//
// selection_override supplies the evaluation set for the paper protocol and
// must be null otherwise. Throws NumericalError on a non-finite loss and
// DataError on an empty selection or gradient set.
TrainResult train(const Dataset& train_data, const EncodingPlan& plan,
                  const ModelConfig& mcfg, const TrainConfig& tcfg,
                  const Dataset* selection_override = nullptr);

// CSV: epoch, train_mape, selection_mape, masked_count, seconds.
void write_history_csv(const std::vector<EpochStats>& history,
                       const std::string& path);

}  // namespace bsem
