#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "bsem/csv.hpp"
#include "bsem/errors.hpp"
#include "bsem/ingest.hpp"
#include "bsem/rng.hpp"

using namespace bsem;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("bsem_ingest_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
  static inline int counter = 0;
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
}

MeasurementRecord make_record(const std::string& bs, int day, int hour,
                              double energy, std::size_t n_cells = 1) {
  MeasurementRecord r;
  r.bs_id = bs;
  r.ru_type = "RU_A";
  r.mode = "FDD";
  r.antennas = 4;
  r.day = day;
  r.hour = hour;
  r.energy = energy;
  for (std::size_t c = 0; c < n_cells; ++c) {
    CellFeatures cf;
    cf.load = 0.25 + 0.1 * static_cast<double>(c);
    cf.es_mode = {0.5, 0, 0, 0, 0, 0};
    cf.tx_power = 12.0;
    cf.frequency = 1800.0;
    cf.bandwidth = 20.0;
    r.cells.push_back(cf);
  }
  return r;
}

}  // namespace

TEST_CASE("canonical header has the frozen 47-column layout") {
  const auto h = ingest::canonical_header();
  REQUIRE(h.size() == 47);
  CHECK(h[0] == "bs_id");
  CHECK(h[6] == "energy");
  CHECK(h[7] == "load_1");
  CHECK(h[8] == "esmode1_1");
  CHECK(h[14] == "txpower_1");
  CHECK(h[15] == "frequency_1");
  CHECK(h[16] == "bandwidth_1");
  CHECK(h[17] == "load_2");
  CHECK(h[46] == "bandwidth_4");
}

TEST_CASE("write then parse is the identity on datasets") {
  TempDir tmp;
  Dataset ds;
  // Values with short decimal expansions round-trip exactly at 10 digits.
  RngStream rng(5, "ingest-roundtrip");
  for (int i = 0; i < 20; ++i) {
    const std::size_t n_cells = 1 + rng.below(4);
    MeasurementRecord r =
        make_record("BS" + std::to_string(i % 7), i / 7, i % 24,
                    1.0 + std::round(rng.uniform(1.0, 500.0) * 1e4) / 1e4,
                    n_cells);
    r.cells.back().load = std::round(rng.uniform01() * 1e6) / 1e6;
    ds.records.push_back(r);
  }
  const std::string path = tmp.file("roundtrip.csv");
  ingest::write_canonical(ds, path);
  const Dataset back = ingest::parse_canonical(path);
  REQUIRE(back.records.size() == ds.records.size());
  for (std::size_t i = 0; i < ds.records.size(); ++i) {
    const auto& a = ds.records[i];
    const auto& b = back.records[i];
    CHECK(a.bs_id == b.bs_id);
    CHECK(a.energy == b.energy);
    REQUIRE(a.cells.size() == b.cells.size());
    for (std::size_t c = 0; c < a.cells.size(); ++c) {
      CHECK(a.cells[c].load == b.cells[c].load);
      CHECK(a.cells[c].frequency == b.cells[c].frequency);
      CHECK(a.cells[c].es_mode == b.cells[c].es_mode);
    }
  }
}

TEST_CASE("three-row well-formed file parses to three records") {
  TempDir tmp;
  Dataset ds;
  ds.records = {make_record("A", 0, 0, 10.0), make_record("A", 0, 1, 11.0),
                make_record("B", 0, 0, 12.0)};
  const std::string path = tmp.file("three.csv");
  ingest::write_canonical(ds, path);
  CHECK(ingest::parse_canonical(path).records.size() == 3);
}

TEST_CASE("header mismatch names the expected column") {
  TempDir tmp;
  auto header = ingest::canonical_header();
  header[7] = "lod_1";
  std::string text;
  for (std::size_t i = 0; i < header.size(); ++i)
    text += (i ? "," : "") + header[i];
  text += "\n";
  const std::string path = tmp.file("bad_header.csv");
  write_text(path, text);
  CHECK_THROWS_WITH_AS(ingest::parse_canonical(path),
                       doctest::Contains("load_1"), DataError);
}

TEST_CASE("invariant violations abort with the row, permissive mode drops") {
  TempDir tmp;
  Dataset ds;
  ds.records = {make_record("A", 0, 0, 10.0), make_record("A", 0, 1, 11.0)};
  const std::string path = tmp.file("neg_energy.csv");
  ingest::write_canonical(ds, path);

  // Corrupt the second data row's energy to -5.
  std::ifstream in(path);
  std::string all((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  in.close();
  const auto pos = all.find(",11,");
  REQUIRE(pos != std::string::npos);
  all.replace(pos, 4, ",-5,");
  write_text(path, all);

  CHECK_THROWS_WITH_AS(ingest::parse_canonical(path), doctest::Contains(":3:"),
                       DataError);

  ingest::ParseReport report;
  const Dataset kept = ingest::parse_canonical(path, /*permissive=*/true, &report);
  CHECK(kept.records.size() == 1);
  CHECK(report.rows_dropped == 1);
}

TEST_CASE("missing file and duplicate keys are data errors") {
  TempDir tmp;
  CHECK_THROWS_AS(ingest::parse_canonical(tmp.file("nope.csv")), DataError);

  Dataset ds;
  ds.records = {make_record("A", 0, 0, 10.0), make_record("A", 0, 0, 11.0)};
  const std::string path = tmp.file("dup.csv");
  ingest::write_canonical(ds, path);
  CHECK_THROWS_WITH_AS(ingest::parse_canonical(path),
                       doctest::Contains("duplicate"), DataError);
}

TEST_CASE("manifest round trip and role validation") {
  TempDir tmp;
  SplitManifest m;
  m.train_bs_ids = {"A", "B", "C"};
  m.test_in_domain_ids = {"B"};
  m.test_cross_domain_ids = {"X"};
  const std::string path = tmp.file("split.csv");
  ingest::write_manifest(m, path);
  const SplitManifest back = ingest::read_manifest(path);
  CHECK(back.train_bs_ids == m.train_bs_ids);
  CHECK(back.test_in_domain_ids == m.test_in_domain_ids);
  CHECK(back.test_cross_domain_ids == m.test_cross_domain_ids);

  write_text(tmp.file("badrole.csv"), "bs_id,role\nA,weird\n");
  CHECK_THROWS_AS(ingest::read_manifest(tmp.file("badrole.csv")), DataError);
}

TEST_CASE("split_by_manifest partitions disjointly and exhaustively") {
  Dataset ds;
  // 6 records from train-only BSs, 4 from cross BSs.
  for (int i = 0; i < 6; ++i)
    ds.records.push_back(make_record("T" + std::to_string(i % 3), i / 3, i, 10.0));
  for (int i = 0; i < 4; ++i)
    ds.records.push_back(make_record("X" + std::to_string(i % 2), i / 2, i, 20.0));
  SplitManifest m;
  m.train_bs_ids = {"T0", "T1", "T2"};
  m.test_cross_domain_ids = {"X0", "X1"};

  const auto [train, test] = ingest::split_by_manifest(ds, m);
  CHECK(train.records.size() == 6);
  CHECK(test.records.size() == 4);
  CHECK(train.records.size() + test.records.size() == ds.records.size());
}

TEST_CASE("in-domain test BSs hold out the final day") {
  Dataset ds;
  for (int day = 0; day < 3; ++day)
    for (int hour = 0; hour < 2; ++hour)
      ds.records.push_back(make_record("A", day, hour, 10.0));
  SplitManifest m;
  m.train_bs_ids = {"A"};
  m.test_in_domain_ids = {"A"};

  const auto [train, test] = ingest::split_by_manifest(ds, m);
  CHECK(train.records.size() == 4);  // days 0,1
  CHECK(test.records.size() == 2);   // final day 2
  for (const auto& r : test.records) CHECK(r.day == 2);
}

TEST_CASE("split_by_manifest rejects unknown bs_ids and handles empty cross") {
  Dataset ds;
  ds.records = {make_record("A", 0, 0, 10.0), make_record("Z", 0, 0, 10.0)};
  SplitManifest m;
  m.train_bs_ids = {"A"};
  CHECK_THROWS_WITH_AS(ingest::split_by_manifest(ds, m), doctest::Contains("Z"),
                       DataError);

  // Empty cross set: test contains only the in-domain holdout.
  Dataset ds2;
  for (int day = 0; day < 2; ++day)
    ds2.records.push_back(make_record("A", day, 0, 5.0));
  SplitManifest m2;
  m2.train_bs_ids = {"A"};
  m2.test_in_domain_ids = {"A"};
  const auto [train2, test2] = ingest::split_by_manifest(ds2, m2);
  CHECK(train2.records.size() == 1);
  CHECK(test2.records.size() == 1);
}

TEST_CASE("join_challenge_layout: minimal join, drops, and cell overflow") {
  TempDir tmp;
  write_text(tmp.file("bs.csv"),
             "station,rutype,mode,antennas\nB1,RU_A,FDD,4\n");
  const std::string cell_header =
      "station,day,hour,cell,load,esmode1,esmode2,esmode3,esmode4,esmode5,"
      "esmode6,txpower,frequency,bandwidth\n";
  write_text(tmp.file("cells.csv"),
             cell_header +
                 "B1,0,0,1,0.5,0,0,0,0,0,0,12,1800,20\n"
                 "B1,0,1,1,0.6,0,0,0,0,0,0,12,1800,20\n"
                 "B1,0,2,1,0.7,0,0,0,0,0,0,12,1800,20\n");
  write_text(tmp.file("energy.csv"),
             "station,day,hour,energy\nB1,0,0,30\nB1,0,1,31\n");

  const std::map<std::string, std::string> map = {{"bs_id", "station"},
                                                  {"ru_type", "rutype"}};
  const auto joined = ingest::join_challenge_layout(
      tmp.file("bs.csv"), tmp.file("cells.csv"), tmp.file("energy.csv"), map);
  CHECK(joined.dataset.records.size() == 2);  // hour 2 has no energy row
  CHECK(joined.dropped_rows == 1);
  for (const auto& r : joined.dataset.records) {
    CHECK(r.ru_type == "RU_A");
    CHECK(r.cells.size() == 1);
    CHECK(validate_record(r).empty());
  }

  // Five cells for one BS-hour is an error.
  std::string five = cell_header;
  for (int c = 1; c <= 5; ++c)
    five += "B1,0,0," + std::to_string(c) + ",0.5,0,0,0,0,0,0,12,1800,20\n";
  write_text(tmp.file("cells5.csv"), five);
  CHECK_THROWS_WITH_AS(
      ingest::join_challenge_layout(tmp.file("bs.csv"), tmp.file("cells5.csv"),
                                    tmp.file("energy.csv"), map),
      doctest::Contains("more than 4"), DataError);

  // Duplicate join key in the energy file names the key.
  write_text(tmp.file("dup_energy.csv"),
             "station,day,hour,energy\nB1,0,0,30\nB1,0,0,31\n");
  CHECK_THROWS_WITH_AS(
      ingest::join_challenge_layout(tmp.file("bs.csv"), tmp.file("cells.csv"),
                                    tmp.file("dup_energy.csv"), map),
      doctest::Contains("duplicate"), DataError);
}
