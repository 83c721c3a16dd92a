#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "bsem/errors.hpp"
#include "bsem/evaluation.hpp"
#include "bsem/ingest.hpp"
#include "bsem/synthgen.hpp"

using namespace bsem;

namespace {

Dataset two_cohort_test_set() {
  // Cross cohort: one record with y = 10; in cohort: one record with y = 10.
  Dataset ds;
  for (const char* id : {"cross1", "in1"}) {
    MeasurementRecord r;
    r.bs_id = id;
    r.ru_type = "X";
    r.mode = "FDD";
    r.antennas = 2;
    r.day = 0;
    r.hour = 0;
    r.energy = 10.0;
    CellFeatures c;
    c.load = 0.5;
    c.tx_power = 1;
    c.frequency = 700;
    c.bandwidth = 5;
    r.cells = {c};
    ds.records.push_back(r);
  }
  return ds;
}

SplitManifest two_cohort_manifest() {
  SplitManifest m;
  m.train_bs_ids = {"in1"};
  m.test_in_domain_ids = {"in1"};
  m.test_cross_domain_ids = {"cross1"};
  return m;
}

}  // namespace

TEST_CASE("perfect predictions give zero MAPE in every cohort") {
  const Dataset test = two_cohort_test_set();
  const SplitManifest manifest = two_cohort_manifest();
  const std::vector<double> exact = {10.0, 10.0};
  const EvalReport r = evaluate_predictions(exact, test, manifest);
  CHECK(r.cross_domain_mape() == 0.0);
  CHECK(r.in_domain_mape() == 0.0);
  CHECK(r.average_mape() == 0.0);
}

TEST_CASE("average is the pooled ratio of sums, not a weighted mean") {
  // Cohorts with (sum|err|, sum|y|) = (1, 10) and (3, 10):
  // cohort MAPEs 0.1 and 0.3, pooled average 4/20 = 0.2.
  const Dataset test = two_cohort_test_set();
  const SplitManifest manifest = two_cohort_manifest();
  const std::vector<double> pred = {10.0 - 1.0, 10.0 + 3.0};
  const EvalReport r = evaluate_predictions(pred, test, manifest);
  CHECK(r.cross_domain_mape() == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(r.in_domain_mape() == doctest::Approx(0.3).epsilon(1e-15));
  CHECK(r.average_mape() == doctest::Approx(0.2).epsilon(1e-15));

  // Pooled-average identity holds exactly.
  CHECK(r.average_mape() ==
        (r.cross_domain.abs_err_sum + r.in_domain.abs_err_sum) /
            (r.cross_domain.abs_y_sum + r.in_domain.abs_y_sum));
}

TEST_CASE("single-cohort manifest: average equals that cohort's MAPE") {
  Dataset test = two_cohort_test_set();
  test.records.pop_back();  // keep only the cross record
  SplitManifest m;
  m.test_cross_domain_ids = {"cross1"};
  const EvalReport r = evaluate_predictions({9.0}, test, m);
  CHECK_FALSE(r.in_domain.present());
  CHECK(r.cross_domain.present());
  CHECK(r.average_mape() == doctest::Approx(r.cross_domain_mape()));
}

TEST_CASE("evaluate wires encoder, model, and cohorts together") {
  SynthConfig cfg;
  cfg.n_bs = 8;
  cfg.days = 2;
  cfg.seed = 21;
  const SynthOutput fleet = generate(cfg);
  const auto [train_set, test_set] =
      ingest::split_by_manifest(fleet.dataset, fleet.manifest);
  const EncodingPlan plan = fit(PlanTemplate{}, train_set);
  const ModelConfig mcfg = make_model_config(plan, {16, 8}, 4, true);
  RngStream rng(1, "init");
  const EnergyModel model = EnergyModel::init(mcfg, rng);

  const EvalReport r = evaluate(model, plan, test_set, fleet.manifest);
  CHECK(r.cross_domain.present());
  CHECK(r.in_domain.present());
  CHECK(r.cross_domain.count + r.in_domain.count == test_set.records.size());
  CHECK(std::isfinite(r.average_mape()));

  // Dimension mismatch between plan and checkpoint is a data error.
  ModelConfig wrong = mcfg;
  wrong.input_dim += 1;
  const EnergyModel bad = EnergyModel::zeros(wrong);
  CHECK_THROWS_AS(evaluate(bad, plan, test_set, fleet.manifest), DataError);
}

TEST_CASE("bs_id outside both test sets fails evaluation") {
  const Dataset test = two_cohort_test_set();
  SplitManifest m;
  m.test_cross_domain_ids = {"cross1"};  // in1 unclassified
  CHECK_THROWS_AS(evaluate_predictions({10.0, 10.0}, test, m), DataError);
}

TEST_CASE("one-run ablation spec yields a single ok row") {
  SynthConfig cfg;
  cfg.n_bs = 8;
  cfg.days = 2;
  cfg.seed = 3;
  const SynthOutput fleet = generate(cfg);
  const auto [train_set, test_set] =
      ingest::split_by_manifest(fleet.dataset, fleet.manifest);

  AblationSpec spec;
  spec.shared.epochs = 3;
  spec.shared.batch_size = 128;
  spec.shared.seed = 4;
  AblationRun run;
  run.name = "only";
  run.hidden_dims = {16, 8};
  run.arl_bottleneck = 4;
  spec.runs.push_back(run);

  const auto rows = run_ablation(spec, train_set, test_set, fleet.manifest);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].status == "ok");
  CHECK(rows[0].dim == dimension(fit(run.plan_tmpl, train_set)));
  CHECK(rows[0].params > 0);

  // Duplicate names are rejected.
  spec.runs.push_back(run);
  CHECK_THROWS_AS(run_ablation(spec, train_set, test_set, fleet.manifest),
                  std::invalid_argument);
}

TEST_CASE("ablation rerun with the same seed reproduces the table") {
  SynthConfig cfg;
  cfg.n_bs = 8;
  cfg.days = 2;
  cfg.seed = 6;
  const SynthOutput fleet = generate(cfg);
  const auto [train_set, test_set] =
      ingest::split_by_manifest(fleet.dataset, fleet.manifest);

  AblationSpec spec;
  spec.shared.epochs = 2;
  spec.shared.batch_size = 128;
  spec.shared.seed = 9;
  for (const char* name : {"r1", "r2"}) {
    AblationRun run;
    run.name = name;
    run.hidden_dims = {16, 8};
    run.arl_bottleneck = 4;
    run.plan_tmpl.bsid_mode =
        std::string(name) == "r1" ? BsidMode::embedding : BsidMode::none;
    spec.runs.push_back(run);
  }
  const auto a = run_ablation(spec, train_set, test_set, fleet.manifest);
  const auto b = run_ablation(spec, train_set, test_set, fleet.manifest);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].cross_mape == b[i].cross_mape);
    CHECK(a[i].in_mape == b[i].in_mape);
    CHECK(a[i].avg_mape == b[i].avg_mape);
  }
}

TEST_CASE("a failing run is recorded without killing the harness") {
  SynthConfig cfg;
  cfg.n_bs = 8;
  cfg.days = 2;
  cfg.seed = 12;
  const SynthOutput fleet = generate(cfg);
  const auto [train_set, test_set] =
      ingest::split_by_manifest(fleet.dataset, fleet.manifest);

  AblationSpec spec;
  spec.shared.epochs = 30;
  spec.shared.batch_size = 128;
  spec.shared.seed = 2;
  spec.shared.adam.lr = 1e155;  // guarantees a numerical abort
  AblationRun bad;
  bad.name = "explodes";
  bad.hidden_dims = {16, 8};
  bad.arl_bottleneck = 4;
  spec.runs.push_back(bad);
  const auto rows = run_ablation(spec, train_set, test_set, fleet.manifest);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].status != "ok");
  CHECK(rows[0].status.find("failed") == 0);
}

TEST_CASE("the built-in grid has the sixteen published rows") {
  const AblationSpec spec = paper_grid(TrainConfig{});
  CHECK(spec.runs.size() == 16);
  std::size_t embedding_rows = 0, onehot_rows = 0, none_rows = 0, no_arl = 0;
  for (const auto& run : spec.runs) {
    if (run.plan_tmpl.bsid_mode == BsidMode::embedding) ++embedding_rows;
    if (run.plan_tmpl.bsid_mode == BsidMode::onehot) ++onehot_rows;
    if (run.plan_tmpl.bsid_mode == BsidMode::none) ++none_rows;
    if (!run.arl_enabled) ++no_arl;
  }
  CHECK(embedding_rows == 13);
  CHECK(onehot_rows == 2);
  CHECK(none_rows == 1);
  CHECK(no_arl == 2);
}
