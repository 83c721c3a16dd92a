#include "bsem/synthgen.hpp"

#include <algorithm>
#include <cmath>

#include "bsem/csv.hpp"
#include "bsem/errors.hpp"
#include "bsem/rng.hpp"

namespace bsem {

namespace {

constexpr double kEsActivationThreshold = 0.35;
constexpr double kDeltaFraction = 0.05;  // of the type's base power, per mode
constexpr double kFloorFraction = 0.05;  // clip: energy >= 0.05 * base

// Per-type priors. Types are separated strongly relative to the per-BS
// jitter so fingerprints cluster by type.
double base_mean(std::size_t r) {
  const double x = static_cast<double>(r);
  return 20.0 + 35.0 * x + 10.0 * x * x;
}
double slope_mean(std::size_t r) { return 8.0 + 7.0 * static_cast<double>(r); }
double txscale_mean(std::size_t r) { return 1.0 + 0.25 * static_cast<double>(r); }
double txpower_mean(std::size_t r) { return 10.0 + 4.0 * static_cast<double>(r); }

std::array<int, 2> antennas_menu(std::size_t r) {
  const int shift = 1 + static_cast<int>(r % 5);
  return {1 << shift, 2 << shift};
}
std::array<double, 2> frequency_menu(std::size_t r) {
  return {600.0 + 400.0 * static_cast<double>(r),
          800.0 + 400.0 * static_cast<double>(r)};
}
std::array<double, 2> bandwidth_menu(std::size_t r) {
  return {5.0 * static_cast<double>(r + 1), 10.0 * static_cast<double>(r + 1)};
}
std::string mode_label(std::size_t r) { return r % 2 ? "TDD" : "FDD"; }
std::string type_label(std::size_t r) {
  return "RU_" + std::string(1, static_cast<char>('A' + r % 26)) +
         (r >= 26 ? std::to_string(r / 26) : "");
}

std::array<std::size_t, 2> es_modes_for(std::size_t r) {
  return {r % 6, (r + 2) % 6};
}

double es_activation(double load) {
  return load < kEsActivationThreshold
             ? (kEsActivationThreshold - load) / kEsActivationThreshold
             : 0.0;
}

}  // namespace

SynthOutput generate(const SynthConfig& cfg) {
  if (cfg.n_bs < 2) throw std::invalid_argument("synthgen: n_bs must be >= 2");
  if (cfg.n_rutypes < 1)
    throw std::invalid_argument("synthgen: n_rutypes must be >= 1");
  if (cfg.days < 1) throw std::invalid_argument("synthgen: days must be >= 1");
  if (cfg.hours_per_day < 1 || cfg.hours_per_day > 24)
    throw std::invalid_argument("synthgen: hours_per_day must be in [1,24]");
  if (cfg.cross_domain_fraction <= 0.0 || cfg.cross_domain_fraction >= 1.0)
    throw std::invalid_argument(
        "synthgen: cross_domain_fraction must be in (0,1)");
  if (cfg.noise_rel < 0.0)
    throw std::invalid_argument("synthgen: noise_rel must be >= 0");

  SynthOutput out;
  out.dataset.provenance =
      "synthgen seed=" + std::to_string(cfg.seed) +
      " n_bs=" + std::to_string(cfg.n_bs) + " days=" + std::to_string(cfg.days);

  const std::size_t n_cross = std::clamp<std::size_t>(
      static_cast<std::size_t>(
          std::llround(cfg.cross_domain_fraction * static_cast<double>(cfg.n_bs))),
      1, cfg.n_bs - 1);
  const std::size_t first_cross = cfg.n_bs - n_cross;

  char idbuf[16];
  for (std::size_t i = 0; i < cfg.n_bs; ++i) {
    std::snprintf(idbuf, sizeof idbuf, "BS%04zu", i);
    const std::string bs_id = idbuf;
    const std::size_t r = i % cfg.n_rutypes;

    RngStream rng(cfg.seed, "synthgen/bs/" + std::to_string(i));

    BsGroundTruth gt;
    gt.ru_type = type_label(r);
    gt.base = base_mean(r) * (1.0 + rng.uniform(-cfg.base_jitter, cfg.base_jitter));
    gt.slope =
        slope_mean(r) * (1.0 + rng.uniform(-cfg.slope_jitter, cfg.slope_jitter));
    gt.txscale = txscale_mean(r) * (1.0 + rng.uniform(-0.05, 0.05));
    for (std::size_t k : es_modes_for(r))
      gt.delta[k] = cfg.delta_scale * kDeltaFraction * base_mean(r) *
                    (1.0 + rng.uniform(-cfg.delta_jitter, cfg.delta_jitter));
    const auto ants = antennas_menu(r);
    gt.antennas = ants[rng.below(ants.size())];
    const auto freqs = frequency_menu(r);
    gt.frequency = freqs[rng.below(freqs.size())];
    const auto bws = bandwidth_menu(r);
    gt.bandwidth = bws[rng.below(bws.size())];
    gt.mode = mode_label(r);
    const double tx_power = txpower_mean(r) * (1.0 + rng.uniform(-0.05, 0.05));

    const double load_mean = rng.uniform(cfg.load_mean_min, cfg.load_mean_max);
    const double load_amp = rng.uniform(cfg.load_amp_min, cfg.load_amp_max);
    const double load_phase = rng.uniform(0.0, 24.0);

    for (int day = 0; day < cfg.days; ++day) {
      for (int hour = 0; hour < cfg.hours_per_day; ++hour) {
        const double phase =
            2.0 * M_PI * (static_cast<double>(hour) - load_phase) / 24.0;
        double load = load_mean + load_amp * std::sin(phase) +
                      rng.uniform(-cfg.load_jitter, cfg.load_jitter);
        load = std::clamp(load, 0.0, 1.0);

        MeasurementRecord rec;
        rec.bs_id = bs_id;
        rec.ru_type = gt.ru_type;
        rec.mode = gt.mode;
        rec.antennas = gt.antennas;
        rec.day = day;
        rec.hour = hour;
        CellFeatures cell;
        cell.load = load;
        const double act = es_activation(load);
        for (std::size_t k : es_modes_for(r)) cell.es_mode[k] = act;
        cell.tx_power = tx_power;
        cell.frequency = gt.frequency;
        cell.bandwidth = gt.bandwidth;
        rec.cells.push_back(cell);
        rec.energy = 0.0;  // noiseless pass below
        out.dataset.records.push_back(std::move(rec));
      }
    }
    out.truth.by_bs[bs_id] = gt;

    if (i >= first_cross) {
      out.manifest.test_cross_domain_ids.insert(bs_id);
    } else {
      out.manifest.train_bs_ids.insert(bs_id);
      out.manifest.test_in_domain_ids.insert(bs_id);
    }
  }

  // Noiseless energies, then fleet-mean-scaled measurement noise.
  double sum = 0.0;
  for (auto& rec : out.dataset.records) {
    rec.energy = oracle_energy(out.truth, rec);
    sum += rec.energy;
  }
  const double sigma =
      cfg.noise_rel * sum / static_cast<double>(out.dataset.records.size());
  if (sigma > 0.0) {
    RngStream noise(cfg.seed, "synthgen/noise");
    for (auto& rec : out.dataset.records) {
      const double floor = kFloorFraction * out.truth.by_bs[rec.bs_id].base;
      rec.energy = std::max(rec.energy + noise.normal(0.0, sigma), floor);
    }
  }
  return out;
}

double oracle_energy(const GroundTruth& truth, const MeasurementRecord& record) {
  auto it = truth.by_bs.find(record.bs_id);
  if (it == truth.by_bs.end())
    throw DataError("oracle_energy: unknown bs_id '" + record.bs_id + "'");
  const BsGroundTruth& gt = it->second;
  if (record.cells.empty())
    throw std::invalid_argument("oracle_energy: record has no cells");
  const CellFeatures& cell = record.cells.front();
  double e = gt.base + gt.slope * cell.load * gt.txscale;
  for (std::size_t k = 0; k < 6; ++k) e -= gt.delta[k] * cell.es_mode[k];
  return std::max(e, kFloorFraction * gt.base);
}

void write_ground_truth_csv(const GroundTruth& truth, const std::string& path) {
  std::vector<std::string> header = {"bs_id", "ru_type", "base",
                                     "slope", "txscale"};
  for (int k = 1; k <= 6; ++k) header.push_back("delta" + std::to_string(k));
  header.insert(header.end(), {"antennas", "frequency", "bandwidth", "mode"});

  std::vector<std::vector<std::string>> rows;
  for (const auto& [bs_id, gt] : truth.by_bs) {
    std::vector<std::string> row = {bs_id, gt.ru_type, format_double(gt.base),
                                    format_double(gt.slope),
                                    format_double(gt.txscale)};
    for (double d : gt.delta) row.push_back(format_double(d));
    row.push_back(std::to_string(gt.antennas));
    row.push_back(format_double(gt.frequency));
    row.push_back(format_double(gt.bandwidth));
    row.push_back(gt.mode);
    rows.push_back(std::move(row));
  }
  write_csv(path, header, rows);
}

GroundTruth read_ground_truth_csv(const std::string& path) {
  const CsvTable table = read_csv(path);
  GroundTruth truth;
  auto col = [&](const std::string& name) {
    const int c = table.column(name);
    if (c < 0) throw DataError(path + ": missing column '" + name + "'");
    return static_cast<std::size_t>(c);
  };
  const std::size_t c_id = col("bs_id"), c_ru = col("ru_type"),
                    c_base = col("base"), c_slope = col("slope"),
                    c_tx = col("txscale"), c_ant = col("antennas"),
                    c_freq = col("frequency"), c_bw = col("bandwidth"),
                    c_mode = col("mode");
  std::array<std::size_t, 6> c_delta{};
  for (int k = 0; k < 6; ++k) c_delta[k] = col("delta" + std::to_string(k + 1));

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string ctx = path + ":" + std::to_string(r + 2);
    BsGroundTruth gt;
    gt.ru_type = row[c_ru];
    gt.base = parse_double(row[c_base], ctx);
    gt.slope = parse_double(row[c_slope], ctx);
    gt.txscale = parse_double(row[c_tx], ctx);
    for (int k = 0; k < 6; ++k) gt.delta[k] = parse_double(row[c_delta[k]], ctx);
    gt.antennas = static_cast<int>(parse_long(row[c_ant], ctx));
    gt.frequency = parse_double(row[c_freq], ctx);
    gt.bandwidth = parse_double(row[c_bw], ctx);
    gt.mode = row[c_mode];
    truth.by_bs[row[c_id]] = gt;
  }
  return truth;
}

}  // namespace bsem
