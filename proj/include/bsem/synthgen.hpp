#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <string>

#include "bsem/data_model.hpp"

namespace bsem {

// Desk-scale fleet generator. Each radio-unit type owns widely separated
// base-power and load-slope priors; each BS jitters around its type mean,
// which is the per-station fingerprint the BSID embedding has to pick up.
// Hardware features (antennas, frequency, bandwidth, mode) come from small
// per-type menus so one-hot ablations are exercisable and embeddings can
// cluster by type.
struct SynthConfig {
  std::size_t n_bs = 50;
  std::size_t n_rutypes = 4;
  int days = 8;
  int hours_per_day = 24;
  double cross_domain_fraction = 0.2;  // BSs reserved entirely for test
  double noise_rel = 0.01;             // sigma as a fraction of mean energy
  double base_jitter = 0.06;           // per-BS fingerprint, relative
  double slope_jitter = 0.10;
  double delta_scale = 1.0;            // sleep-mode savings multiplier (0 = off)
  double delta_jitter = 0.20;          // per-BS spread of the saving coefficients
  // Daily load profile: mean + amp * sin(2 pi (hour - phase)/24) + jitter.
  double load_mean_min = 0.35;
  double load_mean_max = 0.55;
  double load_amp_min = 0.15;
  double load_amp_max = 0.30;
  double load_jitter = 0.08;
  std::uint64_t seed = 0;
};

struct BsGroundTruth {
  std::string ru_type;
  double base = 0.0;                 // > 0
  double slope = 0.0;                // > 0
  double txscale = 1.0;
  std::array<double, 6> delta{};     // energy saved per unit es-mode activation
  int antennas = 0;
  double frequency = 0.0;
  double bandwidth = 0.0;
  std::string mode;
};

struct GroundTruth {
  std::map<std::string, BsGroundTruth> by_bs;
};

struct SynthOutput {
  Dataset dataset;
  SplitManifest manifest;
  GroundTruth truth;
};

// Deterministic under seed. energy(b,t) =
//   base_b + slope_b * load(b,t) * txscale_b - sum_k delta_{b,k} * esmode_k
//   + Normal(0, sigma), clipped below at 0.05 * base_b.
// Cross-domain BSs appear only in the test sets; every other BS is both a
// training BS and an in-domain test BS (its final day is the held-out
// period).
SynthOutput generate(const SynthConfig& cfg);

// The noiseless closed form over a record's primary cell; the brute-force
// oracle for training-quality claims. Throws DataError on an unknown bs_id.
double oracle_energy(const GroundTruth& truth, const MeasurementRecord& record);

void write_ground_truth_csv(const GroundTruth& truth, const std::string& path);
GroundTruth read_ground_truth_csv(const std::string& path);

}  // namespace bsem
