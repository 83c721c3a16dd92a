// bsem - base-station energy consumption modelling toolkit.
//
// Subcommands: synth, train, eval, ablate, gradcheck, export-emb,
// ingest-challenge. Exit codes: 0 success, 2 usage/validation, 3 data error,
// 4 numerical abort.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "bsem/csv.hpp"
#include "bsem/digest.hpp"
#include "bsem/errors.hpp"
#include "bsem/evaluation.hpp"
#include "bsem/ingest.hpp"
#include "bsem/model.hpp"
#include "bsem/selfcheck.hpp"
#include "bsem/synthgen.hpp"
#include "bsem/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kToolVersion = "bsem 1.0.0";

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

// Every run directory gets exactly one manifest recording the resolved
// configuration; rerunning with the recorded flags reproduces the outputs.
void write_run_manifest(const fs::path& out_dir, const std::string& command,
                        const std::vector<std::pair<std::string, std::string>>& kv) {
  std::ofstream out(out_dir / "manifest.txt", std::ios::trunc);
  if (!out)
    throw bsem::DataError("cannot write manifest: " +
                          (out_dir / "manifest.txt").string());
  out << "tool_version=" << kToolVersion << '\n';
  out << "command=" << command << '\n';
  for (const auto& [k, v] : kv) out << k << '=' << v << '\n';
}

void ensure_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out))
    throw bsem::DataError("cannot create output directory: " + out);
}

std::string fmt(double v) { return bsem::format_double(v); }

struct SynthArgs {
  std::string out;
  std::uint64_t seed = 0;
  std::size_t n_bs = 50;
  std::size_t n_rutypes = 4;
  int days = 8;
  double cross_fraction = 0.2;
  double noise = 0.01;
};

int run_synth(const SynthArgs& a) {
  ensure_out_dir(a.out);
  bsem::SynthConfig cfg;
  cfg.n_bs = a.n_bs;
  cfg.n_rutypes = a.n_rutypes;
  cfg.days = a.days;
  cfg.cross_domain_fraction = a.cross_fraction;
  cfg.noise_rel = a.noise;
  cfg.seed = a.seed;

  const bsem::SynthOutput out = bsem::generate(cfg);
  const fs::path dir(a.out);
  bsem::ingest::write_canonical(out.dataset, (dir / "dataset.csv").string());
  bsem::ingest::write_manifest(out.manifest, (dir / "split.csv").string());
  bsem::write_ground_truth_csv(out.truth, (dir / "ground_truth.csv").string());
  write_run_manifest(dir, "synth",
                     {{"seed", std::to_string(a.seed)},
                      {"n_bs", std::to_string(a.n_bs)},
                      {"n_rutypes", std::to_string(a.n_rutypes)},
                      {"days", std::to_string(a.days)},
                      {"cross_fraction", fmt(a.cross_fraction)},
                      {"noise", fmt(a.noise)},
                      {"dataset", "dataset.csv"},
                      {"split", "split.csv"},
                      {"ground_truth", "ground_truth.csv"}});
  std::cout << "wrote " << out.dataset.records.size() << " records to "
            << (dir / "dataset.csv").string() << '\n';
  return kExitOk;
}

bsem::PlanTemplate plan_from_flags(const std::string& plan,
                                   const std::string& plan_file,
                                   const std::string& bsid, bool no_normalize) {
  bsem::PlanTemplate t;
  if (plan == "abf") {
    t.onehot_antennas = t.onehot_bandwidth = t.onehot_frequency = true;
  } else if (plan == "numerical") {
    t.onehot_antennas = t.onehot_bandwidth = t.onehot_frequency = false;
  } else if (plan == "custom") {
    if (plan_file.empty())
      throw CLI::ValidationError("--plan", "custom plan requires --plan-file");
    std::ifstream in(plan_file);
    if (!in) throw bsem::DataError("cannot open plan file: " + plan_file);
    json j;
    try {
      in >> j;
    } catch (const json::exception& e) {
      throw bsem::DataError("plan file parse error: " + std::string(e.what()));
    }
    t.onehot_antennas = j.value("onehot_antennas", true);
    t.onehot_bandwidth = j.value("onehot_bandwidth", true);
    t.onehot_frequency = j.value("onehot_frequency", true);
  } else {
    throw CLI::ValidationError("--plan", "unknown plan '" + plan + "'");
  }
  t.bsid_mode = bsem::bsid_mode_from_string(bsid);
  t.normalize = !no_normalize;
  return t;
}

struct TrainArgs {
  std::string data, manifest, out;
  std::string plan = "abf";
  std::string plan_file;
  std::string bsid = "embedding";
  double mask_prob = 0.30;
  std::size_t epochs = 1000;
  std::size_t batch = 512;
  std::uint64_t seed = 0;
  double lr = 1e-3;
  std::string selection = "val";
  double val_fraction = 0.10;
  std::vector<std::size_t> hidden = {128, 64};
  std::size_t bottleneck = 12;
  bool no_arl = false;
  bool no_normalize = false;
  bool quota_mask = false;
};

int run_train(const TrainArgs& a) {
  ensure_out_dir(a.out);
  const bsem::Dataset full = bsem::ingest::parse_canonical(a.data);
  const bsem::SplitManifest manifest = bsem::ingest::read_manifest(a.manifest);
  auto [train_set, test_set] = bsem::ingest::split_by_manifest(full, manifest);
  if (train_set.records.empty()) throw bsem::DataError("train split is empty");

  const bsem::PlanTemplate tmpl =
      plan_from_flags(a.plan, a.plan_file, a.bsid, a.no_normalize);
  const bsem::EncodingPlan plan = bsem::fit(tmpl, train_set);
  const bsem::ModelConfig mcfg =
      bsem::make_model_config(plan, a.hidden, a.bottleneck, !a.no_arl);

  bsem::TrainConfig tcfg;
  tcfg.epochs = a.epochs;
  tcfg.batch_size = a.batch;
  tcfg.mask_prob = a.mask_prob;
  tcfg.adam.lr = a.lr;
  tcfg.seed = a.seed;
  tcfg.validation_fraction = a.val_fraction;
  tcfg.quota_mask = a.quota_mask;
  tcfg.selection = a.selection == "paper"
                       ? bsem::SelectionMode::test_set_paper_protocol
                       : bsem::SelectionMode::validation_split;
  const bsem::Dataset* override_set =
      tcfg.selection == bsem::SelectionMode::test_set_paper_protocol ? &test_set
                                                                     : nullptr;
  if (override_set && override_set->records.empty())
    throw bsem::DataError("paper selection protocol requires a non-empty test split");

  const bsem::TrainResult result =
      bsem::train(train_set, plan, mcfg, tcfg, override_set);

  const fs::path dir(a.out);
  bsem::save_plan(plan, (dir / "plan.sidecar").string());
  result.model.save((dir / "checkpoint.bin").string(), "plan.sidecar");
  bsem::write_history_csv(result.history, (dir / "history.csv").string());
  write_run_manifest(
      dir, "train",
      {{"data", a.data},
       {"data_sha256", bsem::sha256_file(a.data)},
       {"split", a.manifest},
       {"split_sha256", bsem::sha256_file(a.manifest)},
       {"plan", a.plan},
       {"bsid", a.bsid},
       {"mask_prob", fmt(a.mask_prob)},
       {"epochs", std::to_string(a.epochs)},
       {"batch", std::to_string(a.batch)},
       {"seed", std::to_string(a.seed)},
       {"lr", fmt(a.lr)},
       {"selection", a.selection},
       {"val_fraction", fmt(a.val_fraction)},
       {"hidden", [&] {
          std::string s;
          for (std::size_t h : a.hidden) s += (s.empty() ? "" : ",") + std::to_string(h);
          return s;
        }()},
       {"bottleneck", std::to_string(a.bottleneck)},
       {"arl", a.no_arl ? "off" : "on"},
       {"normalize", a.no_normalize ? "off" : "on"},
       {"checkpoint", "checkpoint.bin"},
       {"plan_sidecar", "plan.sidecar"},
       {"history", "history.csv"}});

  std::cout << "best epoch " << result.best_epoch << " selection MAPE "
            << fmt(result.best_selection_mape) << '\n';
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint, data, manifest, report, plan, oracle;
};

int run_eval(const EvalArgs& a) {
  const bsem::Dataset full = bsem::ingest::parse_canonical(a.data);
  const bsem::SplitManifest manifest = bsem::ingest::read_manifest(a.manifest);
  auto [train_set, test_set] = bsem::ingest::split_by_manifest(full, manifest);
  if (test_set.records.empty()) throw bsem::DataError("test split is empty");

  bsem::EvalReport report;
  if (!a.oracle.empty()) {
    const bsem::GroundTruth truth = bsem::read_ground_truth_csv(a.oracle);
    std::vector<double> pred;
    pred.reserve(test_set.records.size());
    for (const auto& rec : test_set.records)
      pred.push_back(bsem::oracle_energy(truth, rec));
    report = bsem::evaluate_predictions(pred, test_set, manifest);
  } else {
    if (a.checkpoint.empty())
      throw CLI::ValidationError("--checkpoint",
                                 "required unless --oracle is given");
    std::string plan_ref;
    const bsem::EnergyModel model = bsem::EnergyModel::load(a.checkpoint, &plan_ref);
    std::string plan_path = a.plan;
    if (plan_path.empty())
      plan_path = (fs::path(a.checkpoint).parent_path() / plan_ref).string();
    const bsem::EncodingPlan plan = bsem::load_plan(plan_path);
    report = bsem::evaluate(model, plan, test_set, manifest);
  }

  if (!a.report.empty()) bsem::write_report_csv(report, a.report);
  auto show = [](const char* name, const bsem::CohortStats& s) {
    if (s.present())
      std::cout << name << " MAPE " << fmt(s.mape()) << " (" << s.count
                << " samples)\n";
    else
      std::cout << name << " cohort absent\n";
  };
  show("cross-domain", report.cross_domain);
  show("in-domain", report.in_domain);
  std::cout << "average MAPE " << fmt(report.average_mape()) << '\n';
  return kExitOk;
}

struct AblateArgs {
  std::string spec = "paper-grid";
  std::string data, manifest, out;
  std::size_t epochs = 150;
  std::size_t batch = 512;
  std::uint64_t seed = 0;
  double lr = 1e-3;
  std::string selection = "val";
};

bsem::AblationSpec spec_from_file(const std::string& path,
                                  bsem::TrainConfig shared) {
  std::ifstream in(path);
  if (!in) throw bsem::DataError("cannot open spec file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw bsem::DataError("spec file parse error: " + std::string(e.what()));
  }
  bsem::AblationSpec spec;
  spec.shared = shared;
  if (!j.contains("runs") || !j["runs"].is_array() || j["runs"].empty())
    throw CLI::ValidationError("--spec", "spec file has no runs");
  for (const auto& r : j["runs"]) {
    bsem::AblationRun run;
    run.name = r.at("name").get<std::string>();
    run.plan_tmpl.onehot_antennas = r.value("onehot_antennas", true);
    run.plan_tmpl.onehot_bandwidth = r.value("onehot_bandwidth", true);
    run.plan_tmpl.onehot_frequency = r.value("onehot_frequency", true);
    run.plan_tmpl.bsid_mode =
        bsem::bsid_mode_from_string(r.value("bsid_mode", "embedding"));
    run.plan_tmpl.normalize = r.value("normalize", true);
    run.mask_prob = r.value("mask_prob", 0.30);
    run.arl_enabled = r.value("arl_enabled", true);
    if (r.contains("hidden_dims"))
      run.hidden_dims = r["hidden_dims"].get<std::vector<std::size_t>>();
    spec.runs.push_back(std::move(run));
  }
  return spec;
}

int run_ablate(const AblateArgs& a) {
  ensure_out_dir(a.out);
  const bsem::Dataset full = bsem::ingest::parse_canonical(a.data);
  const bsem::SplitManifest manifest = bsem::ingest::read_manifest(a.manifest);
  auto [train_set, test_set] = bsem::ingest::split_by_manifest(full, manifest);
  if (train_set.records.empty() || test_set.records.empty())
    throw bsem::DataError("ablate requires non-empty train and test splits");

  bsem::TrainConfig shared;
  shared.epochs = a.epochs;
  shared.batch_size = a.batch;
  shared.seed = a.seed;
  shared.adam.lr = a.lr;
  shared.selection = a.selection == "paper"
                         ? bsem::SelectionMode::test_set_paper_protocol
                         : bsem::SelectionMode::validation_split;

  const bsem::AblationSpec spec = a.spec == "paper-grid"
                                      ? bsem::paper_grid(shared)
                                      : spec_from_file(a.spec, shared);
  const auto rows = bsem::run_ablation(spec, train_set, test_set, manifest);

  const fs::path dir(a.out);
  bsem::write_ablation_csv(rows, (dir / "report.csv").string());
  write_run_manifest(dir, "ablate",
                     {{"spec", a.spec},
                      {"data", a.data},
                      {"data_sha256", bsem::sha256_file(a.data)},
                      {"split", a.manifest},
                      {"split_sha256", bsem::sha256_file(a.manifest)},
                      {"epochs", std::to_string(a.epochs)},
                      {"batch", std::to_string(a.batch)},
                      {"seed", std::to_string(a.seed)},
                      {"lr", fmt(a.lr)},
                      {"selection", a.selection},
                      {"report", "report.csv"}});

  std::size_t ok = 0;
  for (const auto& row : rows) {
    std::printf("%-22s dim %5zu params %8zu  %s", row.name.c_str(), row.dim,
                row.params, row.status.c_str());
    if (row.status == "ok") {
      ++ok;
      std::printf("  cross %s in %s avg %s", fmt(row.cross_mape).c_str(),
                  fmt(row.in_mape).c_str(), fmt(row.avg_mape).c_str());
    }
    std::printf("\n");
  }
  return ok > 0 ? kExitOk : kExitNumerical;
}

struct GradcheckArgs {
  double tolerance = 1e-5;
  std::size_t seeds = 5;
  bool inject_fault = false;
};

int run_gradcheck(const GradcheckArgs& a) {
  const auto results =
      bsem::gradient_selfcheck(a.tolerance, a.seeds, a.inject_fault);
  bool ok = true;
  for (const auto& r : results) {
    std::printf("[%s] %-16s max rel err %.3e", r.report.pass ? "PASS" : "FAIL",
                r.name.c_str(), r.report.max_rel_err);
    if (!r.report.pass) std::printf("  worst %s", r.report.worst_param.c_str());
    std::printf("\n");
    ok = ok && r.report.pass;
  }
  return ok ? kExitOk : kExitNumerical;
}

struct ExportEmbArgs {
  std::string checkpoint, plan, out;
};

int run_export_emb(const ExportEmbArgs& a) {
  std::string plan_ref;
  const bsem::EnergyModel model = bsem::EnergyModel::load(a.checkpoint, &plan_ref);
  std::string plan_path = a.plan;
  if (plan_path.empty())
    plan_path = (fs::path(a.checkpoint).parent_path() / plan_ref).string();
  const bsem::EncodingPlan plan = bsem::load_plan(plan_path);
  const auto rows = bsem::export_embeddings(model, plan);
  bsem::write_embeddings_csv(rows, a.out);
  std::cout << "wrote " << rows.size() << " embedding rows to " << a.out << '\n';
  return kExitOk;
}

struct IngestArgs {
  std::string bs_info, cell_data, energy, out;
  std::vector<std::string> map_entries;
};

int run_ingest_challenge(const IngestArgs& a) {
  std::map<std::string, std::string> column_map;
  for (const auto& entry : a.map_entries) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos)
      throw CLI::ValidationError("--map", "expected canonical=actual, got '" +
                                              entry + "'");
    column_map[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  const bsem::ingest::JoinResult joined = bsem::ingest::join_challenge_layout(
      a.bs_info, a.cell_data, a.energy, column_map);
  bsem::ingest::write_canonical(joined.dataset, a.out);
  std::cout << "joined " << joined.dataset.records.size() << " records, dropped "
            << joined.dropped_rows << " unmatched BS-hours\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{std::string(kToolVersion) +
               " - base-station energy consumption modelling toolkit"};
  app.require_subcommand(1);
  int rc = kExitOk;

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate a synthetic fleet");
  synth->add_option("--out", synth_args.out, "output directory")->required();
  synth->add_option("--seed", synth_args.seed, "master seed")
      ->envname("BSEM_SEED");
  synth->add_option("--n-bs", synth_args.n_bs, "number of base stations")
      ->check(CLI::Range(std::size_t{2}, std::size_t{100000}));
  synth->add_option("--n-rutypes", synth_args.n_rutypes, "number of RU types")
      ->check(CLI::Range(std::size_t{1}, std::size_t{64}));
  synth->add_option("--days", synth_args.days, "days of telemetry")
      ->check(CLI::Range(1, 10000));
  synth->add_option("--cross-fraction", synth_args.cross_fraction,
                    "fraction of BSs reserved for cross-domain test")
      ->check(CLI::Range(1e-9, 1.0 - 1e-9));
  synth->add_option("--noise", synth_args.noise,
                    "measurement noise as a fraction of mean energy")
      ->check(CLI::Range(0.0, 10.0));
  synth->callback([&] { rc = run_synth(synth_args); });

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train an energy model");
  train->add_option("--data", train_args.data, "canonical dataset CSV")
      ->required();
  train->add_option("--manifest", train_args.manifest, "split manifest CSV")
      ->required();
  train->add_option("--out", train_args.out, "output directory")->required();
  train->add_option("--plan", train_args.plan, "abf | numerical | custom")
      ->check(CLI::IsMember({"abf", "numerical", "custom"}));
  train->add_option("--plan-file", train_args.plan_file,
                    "plan template JSON (with --plan custom)");
  train->add_option("--bsid", train_args.bsid, "embedding | onehot | none")
      ->check(CLI::IsMember({"embedding", "onehot", "none"}));
  train->add_option("--mask-prob", train_args.mask_prob,
                    "per-epoch BSID masking probability")
      ->check(CLI::Range(0.0, 1.0))
      ->envname("BSEM_MASK_PROB");
  train->add_option("--epochs", train_args.epochs, "training epochs")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1000000}))
      ->envname("BSEM_EPOCHS");
  train->add_option("--batch", train_args.batch, "batch size")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1000000}))
      ->envname("BSEM_BATCH");
  train->add_option("--seed", train_args.seed, "master seed")
      ->envname("BSEM_SEED");
  train->add_option("--lr", train_args.lr, "Adam learning rate")
      ->envname("BSEM_LR");
  train->add_option("--selection", train_args.selection,
                    "val (by-BS holdout) | paper (test-set protocol)")
      ->check(CLI::IsMember({"val", "paper"}));
  train->add_option("--val-fraction", train_args.val_fraction,
                    "held-out fraction of training BSs")
      ->check(CLI::Range(0.0, 0.9));
  train->add_option("--hidden", train_args.hidden, "hidden layer widths")
      ->delimiter(',');
  train->add_option("--bottleneck", train_args.bottleneck,
                    "attention bottleneck width");
  train->add_flag("--no-arl", train_args.no_arl, "disable the re-weighting layer");
  train->add_flag("--no-normalize", train_args.no_normalize,
                  "disable z-scoring of numeric features");
  train->add_flag("--quota-mask", train_args.quota_mask,
                  "mask an exact 30% quota instead of Bernoulli draws");
  train->callback([&] { rc = run_train(train_args); });

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a test split");
  eval->add_option("--checkpoint", eval_args.checkpoint, "checkpoint file");
  eval->add_option("--data", eval_args.data, "canonical dataset CSV")->required();
  eval->add_option("--manifest", eval_args.manifest, "split manifest CSV")
      ->required();
  eval->add_option("--report", eval_args.report, "report CSV path");
  eval->add_option("--plan", eval_args.plan,
                   "plan sidecar (default: resolved from checkpoint)");
  eval->add_option("--oracle", eval_args.oracle,
                   "ground-truth CSV: use the closed-form oracle as the model");
  eval->callback([&] { rc = run_eval(eval_args); });

  AblateArgs ablate_args;
  auto* ablate = app.add_subcommand("ablate", "run an ablation grid");
  ablate->add_option("--spec", ablate_args.spec, "paper-grid or a spec JSON file");
  ablate->add_option("--data", ablate_args.data, "canonical dataset CSV")
      ->required();
  ablate->add_option("--manifest", ablate_args.manifest, "split manifest CSV")
      ->required();
  ablate->add_option("--out", ablate_args.out, "output directory")->required();
  ablate->add_option("--epochs", ablate_args.epochs, "epochs per run")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1000000}))
      ->envname("BSEM_EPOCHS");
  ablate->add_option("--batch", ablate_args.batch, "batch size")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1000000}));
  ablate->add_option("--seed", ablate_args.seed, "shared seed")
      ->envname("BSEM_SEED");
  ablate->add_option("--lr", ablate_args.lr, "Adam learning rate");
  ablate->add_option("--selection", ablate_args.selection, "val | paper")
      ->check(CLI::IsMember({"val", "paper"}));
  ablate->callback([&] { rc = run_ablate(ablate_args); });

  GradcheckArgs gc_args;
  auto* gradcheck =
      app.add_subcommand("gradcheck", "finite-difference gradient self-check");
  gradcheck->add_option("--tolerance", gc_args.tolerance, "relative tolerance");
  gradcheck->add_option("--seeds", gc_args.seeds, "seeds per check")
      ->check(CLI::Range(std::size_t{1}, std::size_t{1000}));
  gradcheck->add_flag("--inject-fault", gc_args.inject_fault,
                      "corrupt one gradient to prove the check can fail");
  gradcheck->callback([&] { rc = run_gradcheck(gc_args); });

  ExportEmbArgs emb_args;
  auto* export_emb =
      app.add_subcommand("export-emb", "export BSID embeddings as CSV");
  export_emb->add_option("--checkpoint", emb_args.checkpoint, "checkpoint file")
      ->required();
  export_emb->add_option("--plan", emb_args.plan, "plan sidecar override");
  export_emb->add_option("--out", emb_args.out, "output CSV")->required();
  export_emb->callback([&] { rc = run_export_emb(emb_args); });

  IngestArgs ingest_args;
  auto* ingest = app.add_subcommand(
      "ingest-challenge", "join the three-file challenge layout into canonical CSV");
  ingest->add_option("--bs-info", ingest_args.bs_info, "BS attributes CSV")
      ->required();
  ingest->add_option("--cell-data", ingest_args.cell_data, "per-cell CSV")
      ->required();
  ingest->add_option("--energy", ingest_args.energy, "energy CSV")->required();
  ingest->add_option("--out", ingest_args.out, "canonical CSV output")
      ->required();
  ingest->add_option("--map", ingest_args.map_entries,
                     "column rename canonical=actual (repeatable)");
  ingest->callback([&] { rc = run_ingest_challenge(ingest_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const bsem::NumericalError& e) {
    std::cerr << "numerical abort: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const bsem::DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return rc;
}
