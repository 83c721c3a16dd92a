#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cmath>
#include <filesystem>
#include <map>

#include "bsem/encoder.hpp"
#include "bsem/errors.hpp"
#include "fixtures.hpp"

using namespace bsem;
namespace fs = std::filesystem;

namespace {

MeasurementRecord record_with(const std::string& bs, const std::string& ru,
                              const std::string& mode, int antennas,
                              double freq, double bw, int day, int hour) {
  MeasurementRecord r;
  r.bs_id = bs;
  r.ru_type = ru;
  r.mode = mode;
  r.antennas = antennas;
  r.day = day;
  r.hour = hour;
  r.energy = 10.0;
  CellFeatures c;
  c.load = 0.4;
  c.es_mode = {0.2, 0, 0, 0, 0, 0};
  c.tx_power = 12.0;
  c.frequency = freq;
  c.bandwidth = bw;
  r.cells = {c};
  return r;
}

using testfix::dimension_fixture;

PlanTemplate tmpl_of(bool a, bool b, bool f, BsidMode mode) {
  PlanTemplate t;
  t.onehot_antennas = a;
  t.onehot_bandwidth = b;
  t.onehot_frequency = f;
  t.bsid_mode = mode;
  return t;
}

Dataset small_train() {
  Dataset ds;
  ds.records = {
      record_with("b1", "X", "FDD", 2, 700, 5, 0, 0),
      record_with("b2", "Y", "FDD", 4, 900, 10, 0, 1),
      record_with("b3", "X", "TDD", 8, 700, 5, 1, 2),
  };
  return ds;
}

}  // namespace

TEST_CASE("fit collects sorted vocabularies and the BSID index map") {
  const EncodingPlan plan = fit(PlanTemplate{}, small_train());
  CHECK(plan.ru_type_vocab == std::vector<std::string>{"X", "Y"});
  CHECK(plan.mode_vocab == std::vector<std::string>{"FDD", "TDD"});
  CHECK(plan.bsid_vocab == std::vector<std::string>{"b1", "b2", "b3"});
  CHECK(bsid_index("b1", plan) == 1);
  CHECK(bsid_index("b2", plan) == 2);
  CHECK(bsid_index("b3", plan) == 3);
  CHECK(bsid_index("zzz", plan) == 0);
  CHECK(bsid_index("", plan) == 0);

  Dataset empty;
  CHECK_THROWS_AS(fit(PlanTemplate{}, empty), DataError);
}

TEST_CASE("antennas vocabulary of six distinct values has size 6") {
  Dataset ds;
  const std::vector<int> ants = {2, 4, 8, 16, 32, 64};
  for (std::size_t i = 0; i < ants.size(); ++i)
    ds.records.push_back(
        record_with("b" + std::to_string(i), "X", "FDD", ants[i], 700, 5, 0, 0));
  const EncodingPlan plan = fit(PlanTemplate{}, ds);
  CHECK(plan.antennas_vocab.size() == 6);
  // Toggling A alone replaces 1 numeric column by a 6-wide one-hot: +5.
  PlanTemplate numeric = tmpl_of(false, false, false, BsidMode::embedding);
  PlanTemplate a_only = tmpl_of(true, false, false, BsidMode::embedding);
  CHECK(dimension(fit(a_only, ds)) - dimension(fit(numeric, ds)) == 5);
}

TEST_CASE("one-hot block placement follows the sorted vocabulary") {
  Dataset ds;
  for (const char* ru : {"a", "b", "c", "d"})
    ds.records.push_back(record_with(std::string("bs_") + ru, ru, "FDD", 2, 700, 5, 0, 0));
  const EncodingPlan plan = fit(PlanTemplate{}, ds);
  const FeatureVector fv = encode(
      record_with("bs_c", "c", "FDD", 2, 700, 5, 0, 0), plan);
  // ru_type block is first; "c" sits at position 2 of 4.
  CHECK(fv.values[0] == 0.0);
  CHECK(fv.values[1] == 0.0);
  CHECK(fv.values[2] == 1.0);
  CHECK(fv.values[3] == 0.0);
}

TEST_CASE("padded inactive cell encodes to an all-zero block") {
  const Dataset ds = small_train();
  const EncodingPlan plan = fit(PlanTemplate{}, ds);
  const auto blocks = layout(plan);
  const FeatureVector fv = encode(ds.records[0], plan);  // one active cell
  for (const auto& b : blocks) {
    if (b.name.rfind("cell2.", 0) == 0 || b.name.rfind("cell3.", 0) == 0 ||
        b.name.rfind("cell4.", 0) == 0) {
      for (std::size_t i = b.offset; i < b.offset + b.width; ++i)
        CHECK(fv.values[i] == 0.0);
    }
  }
}

TEST_CASE("unseen categories encode as all-zero one-hot, remainder unchanged") {
  const Dataset ds = small_train();
  const EncodingPlan plan = fit(PlanTemplate{}, ds);
  const MeasurementRecord known = record_with("b1", "X", "FDD", 2, 700, 5, 0, 0);
  MeasurementRecord oov = known;
  oov.ru_type = "UNSEEN";
  const FeatureVector fv_known = encode(known, plan);
  const FeatureVector fv_oov = encode(oov, plan);
  REQUIRE(fv_known.values.size() == fv_oov.values.size());
  const std::size_t ru_width = plan.ru_type_vocab.size();
  for (std::size_t i = 0; i < ru_width; ++i) CHECK(fv_oov.values[i] == 0.0);
  for (std::size_t i = ru_width; i < fv_oov.values.size(); ++i)
    CHECK(fv_oov.values[i] == fv_known.values[i]);
  // Unknown BSID maps to the reserved index 0.
  CHECK(fv_oov.bsid_index == 1);  // b1 is still fitted
  MeasurementRecord stranger = known;
  stranger.bs_id = "martian";
  CHECK(encode(stranger, plan).bsid_index == 0);
}

TEST_CASE("dimension grid matches the published table on the fixture") {
  const Dataset ds = dimension_fixture();
  const std::map<std::string, std::size_t> expected = {
      {"abf_embedding", 204}, {"ab", 172},        {"af", 188},
      {"bf", 199},            {"a", 156},         {"b", 167},
      {"f", 183},             {"numerical", 151}, {"no_bsid", 140},
      {"onehot_bsid", 1064},
  };
  auto dim = [&](PlanTemplate t) { return dimension(fit(t, ds)); };
  CHECK(dim(tmpl_of(true, true, true, BsidMode::embedding)) ==
        expected.at("abf_embedding"));
  CHECK(dim(tmpl_of(true, true, false, BsidMode::embedding)) == expected.at("ab"));
  CHECK(dim(tmpl_of(true, false, true, BsidMode::embedding)) == expected.at("af"));
  CHECK(dim(tmpl_of(false, true, true, BsidMode::embedding)) == expected.at("bf"));
  CHECK(dim(tmpl_of(true, false, false, BsidMode::embedding)) == expected.at("a"));
  CHECK(dim(tmpl_of(false, true, false, BsidMode::embedding)) == expected.at("b"));
  CHECK(dim(tmpl_of(false, false, true, BsidMode::embedding)) == expected.at("f"));
  CHECK(dim(tmpl_of(false, false, false, BsidMode::embedding)) ==
        expected.at("numerical"));
  CHECK(dim(tmpl_of(true, true, true, BsidMode::none)) == expected.at("no_bsid"));
  CHECK(dim(tmpl_of(true, true, true, BsidMode::onehot)) ==
        expected.at("onehot_bsid"));
}

TEST_CASE("dimension consistency: every encoded vector has the plan width") {
  const Dataset ds = dimension_fixture();
  for (BsidMode mode : {BsidMode::embedding, BsidMode::onehot, BsidMode::none}) {
    const EncodingPlan plan = fit(tmpl_of(true, true, true, mode), ds);
    const std::size_t width = encoded_width(plan);
    for (std::size_t i = 0; i < ds.records.size(); i += 37) {
      const FeatureVector fv = encode(ds.records[i], plan);
      CHECK(fv.values.size() == width);
      CHECK(fv.has_bsid_index == (mode == BsidMode::embedding));
    }
    if (mode == BsidMode::embedding)
      CHECK(dimension(plan) == width + plan.tmpl.embed_dim);
    else
      CHECK(dimension(plan) == width);
  }
  // The embedding-mode vector is identical to the none-mode vector.
  const EncodingPlan pe = fit(tmpl_of(true, true, true, BsidMode::embedding), ds);
  const EncodingPlan pn = fit(tmpl_of(true, true, true, BsidMode::none), ds);
  CHECK(encode(ds.records[5], pe).values == encode(ds.records[5], pn).values);
}

TEST_CASE("toggle additivity over the eight A/B/F combinations") {
  const Dataset ds = dimension_fixture();
  const EncodingPlan base =
      fit(tmpl_of(false, false, false, BsidMode::embedding), ds);
  const std::size_t d0 = dimension(base);
  // One-hotting a feature replaces each of its layout occurrences (1 for
  // antennas, 4 cell slots for bandwidth/frequency) by a vocab-wide block.
  const std::size_t delta_a = base.antennas_vocab.size() - 1;
  const std::size_t delta_b = 4 * (base.bandwidth_vocab.size() - 1);
  const std::size_t delta_f = 4 * (base.frequency_vocab.size() - 1);
  for (int mask = 0; mask < 8; ++mask) {
    const bool a = mask & 1, b = mask & 2, f = mask & 4;
    const std::size_t expected =
        d0 + (a ? delta_a : 0) + (b ? delta_b : 0) + (f ? delta_f : 0);
    CHECK(dimension(fit(tmpl_of(a, b, f, BsidMode::embedding), ds)) == expected);
  }
}

TEST_CASE("one-hot blocks each sum to exactly 1 or 0") {
  const Dataset ds = dimension_fixture();
  const EncodingPlan plan = fit(tmpl_of(true, true, true, BsidMode::onehot), ds);
  const auto blocks = layout(plan);
  for (std::size_t i = 0; i < ds.records.size(); i += 101) {
    const FeatureVector fv = encode(ds.records[i], plan);
    for (const auto& b : blocks) {
      const bool onehot_block =
          b.name == "ru_type" || b.name == "mode" || b.name == "antennas" ||
          b.name == "day" || b.name == "hour" || b.name == "bsid" ||
          b.name.find("frequency") != std::string::npos ||
          b.name.find("bandwidth") != std::string::npos;
      if (!onehot_block) continue;
      double sum = 0.0;
      for (std::size_t k = b.offset; k < b.offset + b.width; ++k) {
        CHECK((fv.values[k] == 0.0 || fv.values[k] == 1.0));
        sum += fv.values[k];
      }
      CHECK((sum == 0.0 || sum == 1.0));
    }
  }
}

TEST_CASE("z-scored training features have mean 0 and variance 1") {
  // Single-cell records: slot 1 is active everywhere, slots 2-4 never.
  Dataset ds;
  for (int i = 0; i < 200; ++i) {
    MeasurementRecord r = record_with(
        "b" + std::to_string(i % 11), "X", "FDD", 2 + (i % 5), 700, 5, i % 8,
        i % 24);
    r.cells[0].load = 0.5 + 0.4 * std::sin(0.1 * i);
    r.cells[0].es_mode[0] = 0.25 * (i % 3);
    r.cells[0].tx_power = 10.0 + (i % 4);
    ds.records.push_back(r);
  }
  const EncodingPlan plan = fit(tmpl_of(false, false, false, BsidMode::none), ds);
  const auto blocks = layout(plan);
  std::vector<std::vector<double>> columns(encoded_width(plan));
  for (const auto& rec : ds.records) {
    const FeatureVector fv = encode(rec, plan);
    for (std::size_t k = 0; k < fv.values.size(); ++k)
      columns[k].push_back(fv.values[k]);
  }
  for (const auto& b : blocks) {
    const bool numeric_block =
        b.name == "antennas" || b.name.rfind("cell1.", 0) == 0;
    if (!numeric_block) continue;
    for (std::size_t k = b.offset; k < b.offset + b.width; ++k) {
      double mean = 0.0;
      for (double v : columns[k]) mean += v;
      mean /= static_cast<double>(columns[k].size());
      double var = 0.0;
      for (double v : columns[k]) var += (v - mean) * (v - mean);
      var /= static_cast<double>(columns[k].size());
      INFO("block ", b.name);
      CHECK(std::abs(mean) < 1e-9);
      // zero-variance features are excluded (they encode to constant 0)
      if (var > 1e-12) CHECK(std::abs(var - 1.0) < 1e-9);
    }
  }
}

TEST_CASE("per-cell statistics are fitted over active slots only") {
  // Slot 2 is active in half the records; padded rows must stay exactly zero
  // and the z-scores of active rows must be centered on the active mean.
  Dataset ds;
  for (int i = 0; i < 100; ++i) {
    MeasurementRecord r = record_with("b0", "X", "FDD", 2, 700, 5, 0, i % 24);
    if (i % 2 == 0) {
      CellFeatures second;
      second.load = 0.2 + 0.001 * i;
      second.tx_power = 5.0;
      second.frequency = 900;
      second.bandwidth = 10;
      r.cells.push_back(second);
    }
    ds.records.push_back(r);
  }
  const EncodingPlan plan = fit(tmpl_of(false, false, false, BsidMode::none), ds);
  const auto blocks = layout(plan);
  BlockInfo load2;
  for (const auto& b : blocks)
    if (b.name == "cell2.load") load2 = b;
  REQUIRE(load2.width == 1);

  double active_sum = 0.0;
  int active_n = 0;
  for (const auto& rec : ds.records) {
    const FeatureVector fv = encode(rec, plan);
    if (rec.cells.size() == 2) {
      active_sum += fv.values[load2.offset];
      ++active_n;
    } else {
      CHECK(fv.values[load2.offset] == 0.0);
    }
  }
  CHECK(std::abs(active_sum / active_n) < 1e-9);
}

TEST_CASE("plan sidecar round-trips to identical encodings") {
  const fs::path path = fs::temp_directory_path() /
                        ("bsem_plan_" + std::to_string(::getpid()) + ".json");
  const Dataset ds = dimension_fixture();
  const EncodingPlan plan = fit(tmpl_of(true, false, true, BsidMode::embedding), ds);
  save_plan(plan, path.string());
  const EncodingPlan back = load_plan(path.string());
  fs::remove(path);

  CHECK(back.tmpl.onehot_antennas == plan.tmpl.onehot_antennas);
  CHECK(back.tmpl.onehot_bandwidth == plan.tmpl.onehot_bandwidth);
  CHECK(back.bsid_vocab == plan.bsid_vocab);
  CHECK(dimension(back) == dimension(plan));
  for (std::size_t i = 0; i < ds.records.size(); i += 97) {
    const FeatureVector a = encode(ds.records[i], plan);
    const FeatureVector b = encode(ds.records[i], back);
    CHECK(a.values == b.values);
    CHECK(a.bsid_index == b.bsid_index);
  }
}
