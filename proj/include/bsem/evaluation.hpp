#pragma once

#include <string>
#include <vector>

#include "bsem/data_model.hpp"
#include "bsem/encoder.hpp"
#include "bsem/model.hpp"
#include "bsem/training.hpp"

namespace bsem {

struct CohortStats {
  double abs_err_sum = 0.0;
  double abs_y_sum = 0.0;
  std::size_t count = 0;

  bool present() const { return count > 0; }
  double mape() const { return abs_err_sum / abs_y_sum; }
};

// Cohort-split weighted MAPE. The average is the pooled ratio of sums over
// every present cohort — not a sample-count-weighted mean of cohort MAPEs.
struct EvalReport {
  CohortStats cross_domain;
  CohortStats in_domain;

  double cross_domain_mape() const { return cross_domain.mape(); }
  double in_domain_mape() const { return in_domain.mape(); }
  double average_mape() const {
    return (cross_domain.abs_err_sum + in_domain.abs_err_sum) /
           (cross_domain.abs_y_sum + in_domain.abs_y_sum);
  }
};

// Evaluates the model on a test set, splitting per-sample error into the
// manifest's cohorts. Unseen BSIDs encode to the unknown embedding row / an
// all-zero one-hot block. Throws DataError when a test bs_id is in neither
// test set or when model and plan disagree on dimensions.
EvalReport evaluate(const EnergyModel& model, const EncodingPlan& plan,
                    const Dataset& test, const SplitManifest& manifest);

// Same cohort accounting with caller-supplied predictions (used by the
// oracle-as-model mode).
EvalReport evaluate_predictions(const std::vector<double>& predictions,
                                const Dataset& test,
                                const SplitManifest& manifest);

void write_report_csv(const EvalReport& report, const std::string& path);

// One retrain-from-scratch run of the ablation grid.
struct AblationRun {
  std::string name;
  PlanTemplate plan_tmpl;
  double mask_prob = 0.30;
  bool arl_enabled = true;
  std::vector<std::size_t> hidden_dims{128, 64};
  std::size_t arl_bottleneck = 12;
};

struct AblationSpec {
  std::vector<AblationRun> runs;  // names must be unique
  TrainConfig shared;             // one seed policy for paired comparison
};

struct AblationRow {
  std::string name;
  std::size_t dim = 0;
  std::size_t params = 0;
  double cross_mape = 0.0;
  double in_mape = 0.0;
  double avg_mape = 0.0;
  std::string status;  // "ok" or "failed: <reason>"
};

// Trains and evaluates every run on the shared data with identical seeds.
// A run aborting (non-finite loss) marks its row failed without killing the
// harness. Rows are emitted in spec order.
std::vector<AblationRow> run_ablation(const AblationSpec& spec,
                                      const Dataset& train, const Dataset& test,
                                      const SplitManifest& manifest);

// The built-in grid mirroring the published comparison: five BSID-encoding
// rows, eight one-hot-combination rows, three attention rows (16 total).
AblationSpec paper_grid(TrainConfig shared);

void write_ablation_csv(const std::vector<AblationRow>& rows,
                        const std::string& path);

}  // namespace bsem
