#include "bsem/evaluation.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include "bsem/csv.hpp"
#include "bsem/errors.hpp"

namespace bsem {

namespace {

void accumulate(EvalReport& report, Cohort cohort, double y, double yhat) {
  CohortStats& s =
      cohort == Cohort::cross_domain ? report.cross_domain : report.in_domain;
  s.abs_err_sum += std::abs(y - yhat);
  s.abs_y_sum += std::abs(y);
  ++s.count;
}

std::string mape_field(const CohortStats& s) {
  return s.present() ? format_double(s.mape()) : std::string("absent");
}

}  // namespace

EvalReport evaluate(const EnergyModel& model, const EncodingPlan& plan,
                    const Dataset& test, const SplitManifest& manifest) {
  if (dimension(plan) != model.config().input_dim)
    throw DataError("evaluate: plan dimension " +
                    std::to_string(dimension(plan)) +
                    " does not match model input_dim " +
                    std::to_string(model.config().input_dim));
  if (test.records.empty()) throw DataError("evaluate: empty test set");

  const EncodedDataset enc = encode_dataset(test, plan);
  const std::size_t n = enc.size();
  EvalReport report;
  constexpr std::size_t kChunk = 1024;
  for (std::size_t start = 0; start < n; start += kChunk) {
    const std::size_t end = std::min(n, start + kChunk);
    Tensor fb = Tensor::zeros({end - start, enc.width});
    std::copy(enc.row(start), enc.row(start) + (end - start) * enc.width,
              fb.data.begin());
    std::vector<std::size_t> ib;
    if (!enc.bsid_idx.empty())
      ib.assign(enc.bsid_idx.begin() + static_cast<std::ptrdiff_t>(start),
                enc.bsid_idx.begin() + static_cast<std::ptrdiff_t>(end));
    const auto pred = model.forward(fb, ib);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      const auto& rec = test.records[start + i];
      accumulate(report, classify_sample(rec, manifest), rec.energy, pred[i]);
    }
  }
  return report;
}

EvalReport evaluate_predictions(const std::vector<double>& predictions,
                                const Dataset& test,
                                const SplitManifest& manifest) {
  if (predictions.size() != test.records.size())
    throw std::invalid_argument("evaluate_predictions: size mismatch");
  EvalReport report;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const auto& rec = test.records[i];
    accumulate(report, classify_sample(rec, manifest), rec.energy,
               predictions[i]);
  }
  return report;
}

void write_report_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write report: " + path);
  out << "cohort,samples,abs_err_sum,abs_y_sum,mape\n";
  out << "cross_domain," << report.cross_domain.count << ','
      << format_double(report.cross_domain.abs_err_sum) << ','
      << format_double(report.cross_domain.abs_y_sum) << ','
      << mape_field(report.cross_domain) << '\n';
  out << "in_domain," << report.in_domain.count << ','
      << format_double(report.in_domain.abs_err_sum) << ','
      << format_double(report.in_domain.abs_y_sum) << ','
      << mape_field(report.in_domain) << '\n';
  const std::size_t total = report.cross_domain.count + report.in_domain.count;
  out << "average," << total << ','
      << format_double(report.cross_domain.abs_err_sum +
                       report.in_domain.abs_err_sum)
      << ','
      << format_double(report.cross_domain.abs_y_sum + report.in_domain.abs_y_sum)
      << ','
      << (total ? format_double(report.average_mape()) : std::string("absent"))
      << '\n';
}

std::vector<AblationRow> run_ablation(const AblationSpec& spec,
                                      const Dataset& train_data,
                                      const Dataset& test,
                                      const SplitManifest& manifest) {
  for (std::size_t i = 0; i < spec.runs.size(); ++i)
    for (std::size_t j = i + 1; j < spec.runs.size(); ++j)
      if (spec.runs[i].name == spec.runs[j].name)
        throw std::invalid_argument("run_ablation: duplicate run name '" +
                                    spec.runs[i].name + "'");

  std::vector<AblationRow> rows;
  rows.reserve(spec.runs.size());
  for (const auto& run : spec.runs) {
    AblationRow row;
    row.name = run.name;
    try {
      const EncodingPlan plan = fit(run.plan_tmpl, train_data);
      const ModelConfig mcfg = make_model_config(
          plan, run.hidden_dims, run.arl_bottleneck, run.arl_enabled);
      row.dim = dimension(plan);
      row.params = parameter_count(mcfg);

      TrainConfig tcfg = spec.shared;  // identical seeds across runs
      tcfg.mask_prob = run.mask_prob;
      const Dataset* override_set =
          tcfg.selection == SelectionMode::test_set_paper_protocol ? &test
                                                                   : nullptr;
      TrainResult trained = train(train_data, plan, mcfg, tcfg, override_set);
      const EvalReport report = evaluate(trained.model, plan, test, manifest);
      row.cross_mape = report.cross_domain.present()
                           ? report.cross_domain.mape()
                           : std::numeric_limits<double>::quiet_NaN();
      row.in_mape = report.in_domain.present()
                        ? report.in_domain.mape()
                        : std::numeric_limits<double>::quiet_NaN();
      row.avg_mape = report.average_mape();
      row.status = "ok";
    } catch (const NumericalError& e) {
      row.status = std::string("failed: ") + e.what();
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

AblationSpec paper_grid(TrainConfig shared) {
  AblationSpec spec;
  spec.shared = shared;

  auto tmpl = [](bool a, bool b, bool f, BsidMode mode) {
    PlanTemplate t;
    t.onehot_antennas = a;
    t.onehot_bandwidth = b;
    t.onehot_frequency = f;
    t.bsid_mode = mode;
    return t;
  };
  auto add = [&spec](std::string name, PlanTemplate t, double mask, bool arl,
                     std::vector<std::size_t> hidden = {128, 64}) {
    AblationRun run;
    run.name = std::move(name);
    run.plan_tmpl = t;
    run.mask_prob = mask;
    run.arl_enabled = arl;
    run.hidden_dims = std::move(hidden);
    spec.runs.push_back(std::move(run));
  };

  // BSID encoding methods.
  add("embedding_bsid_rm", tmpl(true, true, true, BsidMode::embedding), 0.30, true);
  add("embedding_bsid_no_rm", tmpl(true, true, true, BsidMode::embedding), 0.0, true);
  add("onehot_bsid_rm", tmpl(true, true, true, BsidMode::onehot), 0.30, true);
  add("onehot_bsid_no_rm", tmpl(true, true, true, BsidMode::onehot), 0.0, true);
  add("no_bsid", tmpl(true, true, true, BsidMode::none), 0.0, true);

  // One-hot encoding combinations (embedding BSID + masking throughout).
  add("abf", tmpl(true, true, true, BsidMode::embedding), 0.30, true);
  add("ab", tmpl(true, true, false, BsidMode::embedding), 0.30, true);
  add("af", tmpl(true, false, true, BsidMode::embedding), 0.30, true);
  add("bf", tmpl(false, true, true, BsidMode::embedding), 0.30, true);
  add("a", tmpl(true, false, false, BsidMode::embedding), 0.30, true);
  add("b", tmpl(false, true, false, BsidMode::embedding), 0.30, true);
  add("f", tmpl(false, false, true, BsidMode::embedding), 0.30, true);
  add("numerical", tmpl(false, false, false, BsidMode::embedding), 0.30, true);

  // Attention ablation: re-weighting on, off, and the deeper-MLP control.
  add("arl", tmpl(true, true, true, BsidMode::embedding), 0.30, true);
  add("no_attention", tmpl(true, true, true, BsidMode::embedding), 0.30, false);
  add("deeper_mlp", tmpl(true, true, true, BsidMode::embedding), 0.30, false,
      {256, 128, 64});
  return spec;
}

void write_ablation_csv(const std::vector<AblationRow>& rows,
                        const std::string& path) {
  std::vector<std::vector<std::string>> out;
  out.reserve(rows.size());
  for (const auto& r : rows) {
    const bool ok = r.status == "ok";
    out.push_back({r.name, std::to_string(r.dim), std::to_string(r.params),
                   ok ? format_double(r.cross_mape) : "",
                   ok ? format_double(r.in_mape) : "",
                   ok ? format_double(r.avg_mape) : "", r.status});
  }
  write_csv(path,
            {"run_name", "dim", "params", "cross_mape", "in_mape", "avg_mape",
             "status"},
            out);
}

}  // namespace bsem
