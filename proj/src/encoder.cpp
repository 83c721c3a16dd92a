#include "bsem/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include <json.hpp>

#include "bsem/errors.hpp"

namespace bsem {

namespace {

using json = nlohmann::json;

template <typename T>
int index_in(const std::vector<T>& vocab, const T& value) {
  auto it = std::lower_bound(vocab.begin(), vocab.end(), value);
  if (it == vocab.end() || *it != value) return -1;
  return static_cast<int>(it - vocab.begin());
}

void append_onehot(std::vector<double>& out, int index, std::size_t width) {
  const std::size_t base = out.size();
  out.resize(base + width, 0.0);
  if (index >= 0) out[base + static_cast<std::size_t>(index)] = 1.0;
}

double zscore(double v, const FeatureStats& s, bool normalize) {
  return normalize ? (v - s.mean) / s.stddev : v;
}

FeatureStats fit_stats(const std::vector<double>& values) {
  FeatureStats s;
  if (values.empty()) return s;  // (0, 1): degenerate slot, encodes raw zeros
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - s.mean) * (v - s.mean);
  const double var = sq / static_cast<double>(values.size());
  s.stddev = var > 0.0 ? std::sqrt(var) : 1.0;
  return s;
}

constexpr std::size_t kCellNumerics = 8;  // load + esmode1..6 + txpower

json stats_to_json(const FeatureStats& s) {
  return json{{"mean", s.mean}, {"stddev", s.stddev}};
}

FeatureStats stats_from_json(const json& j) {
  return FeatureStats{j.at("mean").get<double>(), j.at("stddev").get<double>()};
}

}  // namespace

std::string to_string(BsidMode mode) {
  switch (mode) {
    case BsidMode::embedding: return "embedding";
    case BsidMode::onehot: return "onehot";
    case BsidMode::none: return "none";
  }
  return "none";
}

BsidMode bsid_mode_from_string(const std::string& s) {
  if (s == "embedding") return BsidMode::embedding;
  if (s == "onehot") return BsidMode::onehot;
  if (s == "none") return BsidMode::none;
  throw DataError("unknown bsid mode '" + s + "'");
}

EncodingPlan fit(const PlanTemplate& tmpl, const Dataset& train) {
  if (train.records.empty()) throw DataError("fit: empty training dataset");

  EncodingPlan plan;
  plan.tmpl = tmpl;

  std::set<std::string> ru_types, modes, bsids;
  std::set<double> days, hours, antennas, frequencies, bandwidths;
  std::vector<double> antenna_values;
  std::array<std::array<std::vector<double>, kCellNumerics + 2>, 4> slot_values;

  for (const auto& rec : train.records) {
    ru_types.insert(rec.ru_type);
    modes.insert(rec.mode);
    bsids.insert(rec.bs_id);
    days.insert(static_cast<double>(rec.day));
    hours.insert(static_cast<double>(rec.hour));
    antennas.insert(static_cast<double>(rec.antennas));
    antenna_values.push_back(static_cast<double>(rec.antennas));
    for (std::size_t c = 0; c < 4 && c < rec.cells.size(); ++c) {
      const CellFeatures& cf = rec.cells[c];
      if (!cf.is_active()) continue;
      frequencies.insert(cf.frequency);
      bandwidths.insert(cf.bandwidth);
      auto& sv = slot_values[c];
      sv[0].push_back(cf.load);
      for (std::size_t k = 0; k < 6; ++k) sv[1 + k].push_back(cf.es_mode[k]);
      sv[7].push_back(cf.tx_power);
      sv[8].push_back(cf.frequency);
      sv[9].push_back(cf.bandwidth);
    }
  }

  plan.ru_type_vocab.assign(ru_types.begin(), ru_types.end());
  plan.mode_vocab.assign(modes.begin(), modes.end());
  plan.bsid_vocab.assign(bsids.begin(), bsids.end());
  plan.day_vocab.assign(days.begin(), days.end());
  plan.hour_vocab.assign(hours.begin(), hours.end());
  plan.antennas_vocab.assign(antennas.begin(), antennas.end());
  plan.frequency_vocab.assign(frequencies.begin(), frequencies.end());
  plan.bandwidth_vocab.assign(bandwidths.begin(), bandwidths.end());

  plan.antennas_stats = fit_stats(antenna_values);
  for (std::size_t c = 0; c < 4; ++c) {
    CellSlotStats& cs = plan.cell_stats[c];
    cs.load = fit_stats(slot_values[c][0]);
    for (std::size_t k = 0; k < 6; ++k)
      cs.es_mode[k] = fit_stats(slot_values[c][1 + k]);
    cs.tx_power = fit_stats(slot_values[c][7]);
    cs.frequency = fit_stats(slot_values[c][8]);
    cs.bandwidth = fit_stats(slot_values[c][9]);
  }

  plan.fitted = true;
  return plan;
}

FeatureVector encode(const MeasurementRecord& rec, const EncodingPlan& plan) {
  if (!plan.fitted) throw std::invalid_argument("encode: plan not fitted");
  const bool norm = plan.tmpl.normalize;

  FeatureVector fv;
  fv.values.reserve(encoded_width(plan));

  append_onehot(fv.values, index_in(plan.ru_type_vocab, rec.ru_type),
                plan.ru_type_vocab.size());
  append_onehot(fv.values, index_in(plan.mode_vocab, rec.mode),
                plan.mode_vocab.size());

  const double ant = static_cast<double>(rec.antennas);
  if (plan.tmpl.onehot_antennas) {
    append_onehot(fv.values, index_in(plan.antennas_vocab, ant),
                  plan.antennas_vocab.size());
  } else {
    fv.values.push_back(zscore(ant, plan.antennas_stats, norm));
  }

  for (std::size_t c = 0; c < 4; ++c) {
    const bool present = c < rec.cells.size() && rec.cells[c].is_active();
    const CellFeatures cf = present ? rec.cells[c] : CellFeatures{};
    const CellSlotStats& cs = plan.cell_stats[c];
    if (!present) {
      // Padded/inactive slot: the entire block is zeros.
      std::size_t width = kCellNumerics;
      width += plan.tmpl.onehot_frequency ? plan.frequency_vocab.size() : 1;
      width += plan.tmpl.onehot_bandwidth ? plan.bandwidth_vocab.size() : 1;
      fv.values.resize(fv.values.size() + width, 0.0);
      continue;
    }
    fv.values.push_back(zscore(cf.load, cs.load, norm));
    for (std::size_t k = 0; k < 6; ++k)
      fv.values.push_back(zscore(cf.es_mode[k], cs.es_mode[k], norm));
    fv.values.push_back(zscore(cf.tx_power, cs.tx_power, norm));
    if (plan.tmpl.onehot_frequency) {
      append_onehot(fv.values, index_in(plan.frequency_vocab, cf.frequency),
                    plan.frequency_vocab.size());
    } else {
      fv.values.push_back(zscore(cf.frequency, cs.frequency, norm));
    }
    if (plan.tmpl.onehot_bandwidth) {
      append_onehot(fv.values, index_in(plan.bandwidth_vocab, cf.bandwidth),
                    plan.bandwidth_vocab.size());
    } else {
      fv.values.push_back(zscore(cf.bandwidth, cs.bandwidth, norm));
    }
  }

  append_onehot(fv.values, index_in(plan.day_vocab, static_cast<double>(rec.day)),
                plan.day_vocab.size());
  append_onehot(fv.values,
                index_in(plan.hour_vocab, static_cast<double>(rec.hour)),
                plan.hour_vocab.size());

  if (plan.tmpl.bsid_mode == BsidMode::onehot) {
    append_onehot(fv.values, index_in(plan.bsid_vocab, rec.bs_id),
                  plan.bsid_vocab.size());
  } else if (plan.tmpl.bsid_mode == BsidMode::embedding) {
    fv.bsid_index = bsid_index(rec.bs_id, plan);
    fv.has_bsid_index = true;
  }
  return fv;
}

std::size_t encoded_width(const EncodingPlan& plan) {
  if (!plan.fitted) throw std::invalid_argument("encoded_width: plan not fitted");
  std::size_t w = plan.ru_type_vocab.size() + plan.mode_vocab.size();
  w += plan.tmpl.onehot_antennas ? plan.antennas_vocab.size() : 1;
  std::size_t cell = kCellNumerics;
  cell += plan.tmpl.onehot_frequency ? plan.frequency_vocab.size() : 1;
  cell += plan.tmpl.onehot_bandwidth ? plan.bandwidth_vocab.size() : 1;
  w += 4 * cell;
  w += plan.day_vocab.size() + plan.hour_vocab.size();
  if (plan.tmpl.bsid_mode == BsidMode::onehot) w += plan.bsid_vocab.size();
  return w;
}

std::size_t dimension(const EncodingPlan& plan) {
  std::size_t w = encoded_width(plan);
  if (plan.tmpl.bsid_mode == BsidMode::embedding) w += plan.tmpl.embed_dim;
  return w;
}

std::size_t bsid_index(const std::string& bs_id, const EncodingPlan& plan) {
  const int i = index_in(plan.bsid_vocab, bs_id);
  return i < 0 ? 0 : static_cast<std::size_t>(i) + 1;
}

std::vector<BlockInfo> layout(const EncodingPlan& plan) {
  std::vector<BlockInfo> blocks;
  std::size_t off = 0;
  auto push = [&](const std::string& name, std::size_t width) {
    blocks.push_back({name, off, width});
    off += width;
  };
  push("ru_type", plan.ru_type_vocab.size());
  push("mode", plan.mode_vocab.size());
  push("antennas",
       plan.tmpl.onehot_antennas ? plan.antennas_vocab.size() : 1);
  for (int c = 1; c <= 4; ++c) {
    const std::string p = "cell" + std::to_string(c) + ".";
    push(p + "load", 1);
    for (int k = 1; k <= 6; ++k) push(p + "esmode" + std::to_string(k), 1);
    push(p + "txpower", 1);
    push(p + "frequency",
         plan.tmpl.onehot_frequency ? plan.frequency_vocab.size() : 1);
    push(p + "bandwidth",
         plan.tmpl.onehot_bandwidth ? plan.bandwidth_vocab.size() : 1);
  }
  push("day", plan.day_vocab.size());
  push("hour", plan.hour_vocab.size());
  if (plan.tmpl.bsid_mode == BsidMode::onehot)
    push("bsid", plan.bsid_vocab.size());
  return blocks;
}

BlockInfo bsid_onehot_block(const EncodingPlan& plan) {
  if (plan.tmpl.bsid_mode != BsidMode::onehot) return {"bsid", 0, 0};
  const auto blocks = layout(plan);
  return blocks.back();
}

EncodedDataset encode_dataset(const Dataset& ds, const EncodingPlan& plan) {
  EncodedDataset out;
  out.width = encoded_width(plan);
  out.features.reserve(ds.records.size() * out.width);
  out.targets.reserve(ds.records.size());
  const bool embedding = plan.tmpl.bsid_mode == BsidMode::embedding;
  if (embedding) out.bsid_idx.reserve(ds.records.size());
  for (const auto& rec : ds.records) {
    FeatureVector fv = encode(rec, plan);
    out.features.insert(out.features.end(), fv.values.begin(), fv.values.end());
    out.targets.push_back(rec.energy);
    if (embedding) out.bsid_idx.push_back(fv.bsid_index);
  }
  return out;
}

void save_plan(const EncodingPlan& plan, const std::string& path) {
  json j;
  j["format"] = "bsem-plan-v1";
  j["template"] = {
      {"onehot_antennas", plan.tmpl.onehot_antennas},
      {"onehot_bandwidth", plan.tmpl.onehot_bandwidth},
      {"onehot_frequency", plan.tmpl.onehot_frequency},
      {"bsid_mode", to_string(plan.tmpl.bsid_mode)},
      {"normalize", plan.tmpl.normalize},
      {"embed_dim", plan.tmpl.embed_dim},
  };
  j["vocab"] = {
      {"ru_type", plan.ru_type_vocab},   {"mode", plan.mode_vocab},
      {"bsid", plan.bsid_vocab},         {"day", plan.day_vocab},
      {"hour", plan.hour_vocab},         {"antennas", plan.antennas_vocab},
      {"frequency", plan.frequency_vocab},
      {"bandwidth", plan.bandwidth_vocab},
  };
  j["antennas_stats"] = stats_to_json(plan.antennas_stats);
  json cells = json::array();
  for (const auto& cs : plan.cell_stats) {
    json c;
    c["load"] = stats_to_json(cs.load);
    json es = json::array();
    for (const auto& s : cs.es_mode) es.push_back(stats_to_json(s));
    c["es_mode"] = es;
    c["txpower"] = stats_to_json(cs.tx_power);
    c["frequency"] = stats_to_json(cs.frequency);
    c["bandwidth"] = stats_to_json(cs.bandwidth);
    cells.push_back(c);
  }
  j["cell_stats"] = cells;
  // Frozen layout, recorded so the sidecar documents the vector format.
  json blocks = json::array();
  for (const auto& b : layout(plan))
    blocks.push_back({{"name", b.name}, {"offset", b.offset}, {"width", b.width}});
  j["layout"] = blocks;

  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write plan sidecar: " + path);
  out << j.dump(2) << '\n';
}

EncodingPlan load_plan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open plan sidecar: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw DataError("plan sidecar parse error: " + std::string(e.what()));
  }
  if (j.value("format", "") != std::string("bsem-plan-v1"))
    throw DataError("plan sidecar: unknown format");

  EncodingPlan plan;
  const json& t = j.at("template");
  plan.tmpl.onehot_antennas = t.at("onehot_antennas").get<bool>();
  plan.tmpl.onehot_bandwidth = t.at("onehot_bandwidth").get<bool>();
  plan.tmpl.onehot_frequency = t.at("onehot_frequency").get<bool>();
  plan.tmpl.bsid_mode = bsid_mode_from_string(t.at("bsid_mode").get<std::string>());
  plan.tmpl.normalize = t.at("normalize").get<bool>();
  plan.tmpl.embed_dim = t.at("embed_dim").get<std::size_t>();

  const json& v = j.at("vocab");
  plan.ru_type_vocab = v.at("ru_type").get<std::vector<std::string>>();
  plan.mode_vocab = v.at("mode").get<std::vector<std::string>>();
  plan.bsid_vocab = v.at("bsid").get<std::vector<std::string>>();
  plan.day_vocab = v.at("day").get<std::vector<double>>();
  plan.hour_vocab = v.at("hour").get<std::vector<double>>();
  plan.antennas_vocab = v.at("antennas").get<std::vector<double>>();
  plan.frequency_vocab = v.at("frequency").get<std::vector<double>>();
  plan.bandwidth_vocab = v.at("bandwidth").get<std::vector<double>>();

  plan.antennas_stats = stats_from_json(j.at("antennas_stats"));
  const json& cells = j.at("cell_stats");
  for (std::size_t c = 0; c < 4; ++c) {
    const json& cj = cells.at(c);
    CellSlotStats& cs = plan.cell_stats[c];
    cs.load = stats_from_json(cj.at("load"));
    for (std::size_t k = 0; k < 6; ++k)
      cs.es_mode[k] = stats_from_json(cj.at("es_mode").at(k));
    cs.tx_power = stats_from_json(cj.at("txpower"));
    cs.frequency = stats_from_json(cj.at("frequency"));
    cs.bandwidth = stats_from_json(cj.at("bandwidth"));
  }
  plan.fitted = true;
  return plan;
}

}  // namespace bsem
