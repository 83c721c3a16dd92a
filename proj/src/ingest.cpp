#include "bsem/ingest.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "bsem/csv.hpp"
#include "bsem/errors.hpp"

namespace bsem::ingest {

namespace {

constexpr int kEsModes = 6;

std::string cell_col(const std::string& base, int cell) {
  return base + "_" + std::to_string(cell);
}

std::string row_context(const std::string& path, std::size_t lineno) {
  return path + ":" + std::to_string(lineno);
}

}  // namespace

std::vector<std::string> canonical_header() {
  std::vector<std::string> h = {"bs_id", "ru_type", "mode", "antennas",
                                "day",   "hour",    "energy"};
  for (int c = 1; c <= kCellSlots; ++c) {
    h.push_back(cell_col("load", c));
    for (int k = 1; k <= kEsModes; ++k)
      h.push_back(cell_col("esmode" + std::to_string(k), c));
    h.push_back(cell_col("txpower", c));
    h.push_back(cell_col("frequency", c));
    h.push_back(cell_col("bandwidth", c));
  }
  return h;
}

Dataset parse_canonical(const std::string& path, bool permissive,
                        ParseReport* report) {
  const CsvTable table = read_csv(path);
  const auto expected = canonical_header();
  if (table.header != expected) {
    std::string msg = path + ": header mismatch;";
    const std::size_t n = std::max(expected.size(), table.header.size());
    for (std::size_t i = 0; i < n; ++i) {
      const std::string want = i < expected.size() ? expected[i] : "<none>";
      const std::string got = i < table.header.size() ? table.header[i] : "<none>";
      if (want != got) {
        msg += " expected '" + want + "' at column " + std::to_string(i + 1) +
               ", found '" + got + "'";
        break;
      }
    }
    throw DataError(msg);
  }

  Dataset ds;
  ds.provenance = "canonical:" + path;
  std::set<std::tuple<std::string, int, int>> seen;

  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::size_t lineno = r + 2;  // header is line 1
    const auto& row = table.rows[r];
    const std::string ctx = row_context(path, lineno);

    MeasurementRecord rec;
    rec.bs_id = row[0];
    rec.ru_type = row[1];
    rec.mode = row[2];
    rec.antennas = static_cast<int>(parse_long(row[3], ctx + " antennas"));
    rec.day = static_cast<int>(parse_long(row[4], ctx + " day"));
    rec.hour = static_cast<int>(parse_long(row[5], ctx + " hour"));
    rec.energy = parse_double(row[6], ctx + " energy");

    std::size_t col = 7;
    rec.cells.resize(kCellSlots);
    for (int c = 0; c < kCellSlots; ++c) {
      CellFeatures& cf = rec.cells[c];
      cf.load = parse_double(row[col], ctx + " " + cell_col("load", c + 1));
      ++col;
      for (int k = 0; k < kEsModes; ++k, ++col)
        cf.es_mode[k] = parse_double(
            row[col], ctx + " " + cell_col("esmode" + std::to_string(k + 1), c + 1));
      cf.tx_power = parse_double(row[col], ctx + " " + cell_col("txpower", c + 1));
      ++col;
      cf.frequency = parse_double(row[col], ctx + " " + cell_col("frequency", c + 1));
      ++col;
      cf.bandwidth = parse_double(row[col], ctx + " " + cell_col("bandwidth", c + 1));
      ++col;
    }
    while (rec.cells.size() > 1 && rec.cells.back().is_zero())
      rec.cells.pop_back();

    const auto key = std::make_tuple(rec.bs_id, rec.day, rec.hour);
    if (!seen.insert(key).second)
      throw DataError(ctx + ": duplicate (bs_id, day, hour) key for '" +
                      rec.bs_id + "'");

    const auto violations = validate_record(rec);
    if (!violations.empty()) {
      std::string detail = ctx + ": invariant violation:";
      for (const auto& v : violations) detail += " " + v + ";";
      if (!permissive) throw DataError(detail);
      if (report) {
        ++report->rows_dropped;
        report->drop_reasons.push_back(detail);
      }
      continue;
    }
    if (report) ++report->rows_parsed;
    ds.records.push_back(std::move(rec));
  }
  return ds;
}

void write_canonical(const Dataset& ds, const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(ds.records.size());
  for (const auto& rec : ds.records) {
    std::vector<std::string> row;
    row.reserve(47);
    row.push_back(rec.bs_id);
    row.push_back(rec.ru_type);
    row.push_back(rec.mode);
    row.push_back(std::to_string(rec.antennas));
    row.push_back(std::to_string(rec.day));
    row.push_back(std::to_string(rec.hour));
    row.push_back(format_double(rec.energy));
    for (int c = 0; c < kCellSlots; ++c) {
      const CellFeatures cf = c < static_cast<int>(rec.cells.size())
                                  ? rec.cells[c]
                                  : CellFeatures{};
      row.push_back(format_double(cf.load));
      for (int k = 0; k < kEsModes; ++k)
        row.push_back(format_double(cf.es_mode[k]));
      row.push_back(format_double(cf.tx_power));
      row.push_back(format_double(cf.frequency));
      row.push_back(format_double(cf.bandwidth));
    }
    rows.push_back(std::move(row));
  }
  write_csv(path, canonical_header(), rows);
}

SplitManifest read_manifest(const std::string& path) {
  const CsvTable table = read_csv(path);
  if (table.header != std::vector<std::string>{"bs_id", "role"})
    throw DataError(path + ": manifest header must be bs_id,role");
  SplitManifest m;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string& id = table.rows[r][0];
    const std::string& role = table.rows[r][1];
    if (role == "train") {
      m.train_bs_ids.insert(id);
    } else if (role == "test_in") {
      m.test_in_domain_ids.insert(id);
    } else if (role == "test_cross") {
      m.test_cross_domain_ids.insert(id);
    } else {
      throw DataError(row_context(path, r + 2) + ": unknown role '" + role +
                      "'");
    }
  }
  m.validate();
  return m;
}

void write_manifest(const SplitManifest& manifest, const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  for (const auto& id : manifest.train_bs_ids) rows.push_back({id, "train"});
  for (const auto& id : manifest.test_in_domain_ids)
    rows.push_back({id, "test_in"});
  for (const auto& id : manifest.test_cross_domain_ids)
    rows.push_back({id, "test_cross"});
  write_csv(path, {"bs_id", "role"}, rows);
}

JoinResult join_challenge_layout(
    const std::string& bs_info_path, const std::string& cell_data_path,
    const std::string& energy_path,
    const std::map<std::string, std::string>& column_map) {
  auto mapped = [&column_map](const std::string& canonical) {
    auto it = column_map.find(canonical);
    return it == column_map.end() ? canonical : it->second;
  };
  auto need = [&](const CsvTable& t, const std::string& canonical,
                  const std::string& path) {
    const std::string actual = mapped(canonical);
    const int idx = t.column(actual);
    if (idx < 0)
      throw DataError(path + ": missing column '" + actual + "' (for " +
                      canonical + ")");
    return static_cast<std::size_t>(idx);
  };

  // BS-level attributes, keyed by bs_id.
  const CsvTable bs_info = read_csv(bs_info_path);
  struct BsAttrs {
    std::string ru_type, mode;
    int antennas;
  };
  std::map<std::string, BsAttrs> attrs;
  {
    const std::size_t c_id = need(bs_info, "bs_id", bs_info_path);
    const std::size_t c_ru = need(bs_info, "ru_type", bs_info_path);
    const std::size_t c_mode = need(bs_info, "mode", bs_info_path);
    const std::size_t c_ant = need(bs_info, "antennas", bs_info_path);
    for (std::size_t r = 0; r < bs_info.rows.size(); ++r) {
      const auto& row = bs_info.rows[r];
      const std::string& id = row[c_id];
      if (attrs.count(id))
        throw DataError(bs_info_path + ": duplicate bs_id key '" + id + "'");
      attrs[id] = {row[c_ru], row[c_mode],
                   static_cast<int>(parse_long(
                       row[c_ant], row_context(bs_info_path, r + 2)))};
    }
  }

  // Energy, keyed by (bs_id, day, hour).
  using Key = std::tuple<std::string, int, int>;
  const CsvTable energy = read_csv(energy_path);
  std::map<Key, double> energies;
  {
    const std::size_t c_id = need(energy, "bs_id", energy_path);
    const std::size_t c_day = need(energy, "day", energy_path);
    const std::size_t c_hour = need(energy, "hour", energy_path);
    const std::size_t c_e = need(energy, "energy", energy_path);
    for (std::size_t r = 0; r < energy.rows.size(); ++r) {
      const auto& row = energy.rows[r];
      const std::string ctx = row_context(energy_path, r + 2);
      Key key{row[c_id], static_cast<int>(parse_long(row[c_day], ctx)),
              static_cast<int>(parse_long(row[c_hour], ctx))};
      if (energies.count(key))
        throw DataError(ctx + ": duplicate (bs_id, day, hour) key for '" +
                        row[c_id] + "'");
      energies[key] = parse_double(row[c_e], ctx + " energy");
    }
  }

  // Cells, grouped by (bs_id, day, hour), ordered by cell index.
  const CsvTable cells = read_csv(cell_data_path);
  std::map<Key, std::map<int, CellFeatures>> groups;
  {
    const std::size_t c_id = need(cells, "bs_id", cell_data_path);
    const std::size_t c_day = need(cells, "day", cell_data_path);
    const std::size_t c_hour = need(cells, "hour", cell_data_path);
    const std::size_t c_cell = need(cells, "cell", cell_data_path);
    const std::size_t c_load = need(cells, "load", cell_data_path);
    std::array<std::size_t, kEsModes> c_es{};
    for (int k = 0; k < kEsModes; ++k)
      c_es[k] = need(cells, "esmode" + std::to_string(k + 1), cell_data_path);
    const std::size_t c_tx = need(cells, "txpower", cell_data_path);
    const std::size_t c_freq = need(cells, "frequency", cell_data_path);
    const std::size_t c_bw = need(cells, "bandwidth", cell_data_path);

    for (std::size_t r = 0; r < cells.rows.size(); ++r) {
      const auto& row = cells.rows[r];
      const std::string ctx = row_context(cell_data_path, r + 2);
      Key key{row[c_id], static_cast<int>(parse_long(row[c_day], ctx)),
              static_cast<int>(parse_long(row[c_hour], ctx))};
      const int cell_idx = static_cast<int>(parse_long(row[c_cell], ctx));
      auto& group = groups[key];
      if (group.count(cell_idx))
        throw DataError(ctx + ": duplicate cell index " +
                        std::to_string(cell_idx) + " for bs_id '" + row[c_id] +
                        "'");
      CellFeatures cf;
      cf.load = parse_double(row[c_load], ctx + " load");
      for (int k = 0; k < kEsModes; ++k)
        cf.es_mode[k] = parse_double(row[c_es[k]], ctx);
      cf.tx_power = parse_double(row[c_tx], ctx + " txpower");
      cf.frequency = parse_double(row[c_freq], ctx + " frequency");
      cf.bandwidth = parse_double(row[c_bw], ctx + " bandwidth");
      group[cell_idx] = cf;
      if (group.size() > static_cast<std::size_t>(kCellSlots))
        throw DataError(ctx + ": more than " + std::to_string(kCellSlots) +
                        " cells for one BS-hour (bs_id '" + row[c_id] + "')");
    }
  }

  JoinResult result;
  result.dataset.provenance =
      "join:" + bs_info_path + "+" + cell_data_path + "+" + energy_path;
  std::set<Key> all_keys;
  for (const auto& [k, v] : groups) all_keys.insert(k);
  for (const auto& [k, v] : energies) all_keys.insert(k);

  for (const auto& key : all_keys) {
    auto git = groups.find(key);
    auto eit = energies.find(key);
    auto ait = attrs.find(std::get<0>(key));
    if (git == groups.end() || eit == energies.end() || ait == attrs.end()) {
      ++result.dropped_rows;
      continue;
    }
    MeasurementRecord rec;
    rec.bs_id = std::get<0>(key);
    rec.day = std::get<1>(key);
    rec.hour = std::get<2>(key);
    rec.ru_type = ait->second.ru_type;
    rec.mode = ait->second.mode;
    rec.antennas = ait->second.antennas;
    rec.energy = eit->second;
    for (const auto& [idx, cf] : git->second) rec.cells.push_back(cf);
    result.dataset.records.push_back(std::move(rec));
  }
  return result;
}

std::pair<Dataset, Dataset> split_by_manifest(const Dataset& ds,
                                              const SplitManifest& manifest) {
  manifest.validate();
  int max_day = 0;
  for (const auto& rec : ds.records) max_day = std::max(max_day, rec.day);

  Dataset train, test;
  train.provenance = ds.provenance + " [train split]";
  test.provenance = ds.provenance + " [test split]";
  for (const auto& rec : ds.records) {
    const bool is_train = manifest.train_bs_ids.count(rec.bs_id) != 0;
    const bool is_test_in = manifest.test_in_domain_ids.count(rec.bs_id) != 0;
    const bool is_cross = manifest.test_cross_domain_ids.count(rec.bs_id) != 0;
    if (!is_train && !is_cross)
      throw DataError("split_by_manifest: bs_id '" + rec.bs_id +
                      "' missing from manifest");
    if (is_cross) {
      test.records.push_back(rec);
    } else if (is_test_in && rec.day == max_day) {
      test.records.push_back(rec);
    } else {
      train.records.push_back(rec);
    }
  }
  return {std::move(train), std::move(test)};
}

}  // namespace bsem::ingest
