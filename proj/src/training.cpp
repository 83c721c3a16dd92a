#include "bsem/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>

#include "bsem/csv.hpp"
#include "bsem/errors.hpp"

namespace bsem {

namespace {

struct Slice {
  Tensor features;
  std::vector<std::size_t> idx;
  std::vector<double> y;
};

Slice gather(const EncodedDataset& enc, const std::vector<std::size_t>& rows,
             bool embedding) {
  Slice s;
  s.features = Tensor::zeros({rows.size(), enc.width});
  s.y.resize(rows.size());
  if (embedding) s.idx.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double* src = enc.row(rows[i]);
    std::copy(src, src + enc.width, s.features.row_ptr(i));
    s.y[i] = enc.targets[rows[i]];
    if (embedding) s.idx[i] = enc.bsid_idx[rows[i]];
  }
  return s;
}

double pooled_mape(const EnergyModel& model, const Slice& sel,
                   std::size_t batch_size) {
  const std::size_t n = sel.y.size();
  double abs_err = 0.0, abs_y = 0.0;
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t end = std::min(n, start + batch_size);
    Tensor fb = Tensor::zeros({end - start, sel.features.cols()});
    std::copy(sel.features.row_ptr(start), sel.features.row_ptr(end - 1) + sel.features.cols(),
              fb.row_ptr(0));
    std::vector<std::size_t> ib;
    if (!sel.idx.empty())
      ib.assign(sel.idx.begin() + static_cast<std::ptrdiff_t>(start),
                sel.idx.begin() + static_cast<std::ptrdiff_t>(end));
    const auto pred = model.forward(fb, ib);
    for (std::size_t i = 0; i < pred.size(); ++i) {
      abs_err += std::abs(sel.y[start + i] - pred[i]);
      abs_y += std::abs(sel.y[start + i]);
    }
  }
  if (abs_y <= 0.0) throw std::invalid_argument("selection set has sum|y| = 0");
  return abs_err / abs_y;
}

}  // namespace

double mape(std::span<const double> y, std::span<const double> yhat) {
  if (y.size() != yhat.size())
    throw std::invalid_argument("mape: size mismatch");
  if (y.empty()) throw std::invalid_argument("mape: empty input");
  double abs_err = 0.0, abs_y = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    abs_err += std::abs(y[i] - yhat[i]);
    abs_y += std::abs(y[i]);
  }
  if (abs_y == 0.0) throw std::invalid_argument("mape: sum|y| is zero");
  return abs_err / abs_y;
}

std::vector<double> mape_gradient(std::span<const double> y,
                                  std::span<const double> yhat) {
  if (y.size() != yhat.size())
    throw std::invalid_argument("mape_gradient: size mismatch");
  if (y.empty()) throw std::invalid_argument("mape_gradient: empty input");
  double abs_y = 0.0;
  for (double v : y) abs_y += std::abs(v);
  if (abs_y == 0.0) throw std::invalid_argument("mape_gradient: sum|y| is zero");
  std::vector<double> g(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = yhat[i] - y[i];
    g[i] = d > 0.0 ? 1.0 / abs_y : (d < 0.0 ? -1.0 / abs_y : 0.0);
  }
  return g;
}

std::vector<std::size_t> apply_mask(const std::vector<std::size_t>& indices,
                                    double mask_prob, RngStream& rng) {
  std::vector<std::size_t> out = indices;
  for (auto& v : out)
    if (rng.bernoulli(mask_prob)) v = 0;
  return out;
}

TrainResult train(const Dataset& train_data, const EncodingPlan& plan,
                  const ModelConfig& mcfg, const TrainConfig& tcfg,
                  const Dataset* selection_override) {
  if (!plan.fitted) throw std::invalid_argument("train: plan not fitted");
  if (tcfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (tcfg.batch_size < 1)
    throw std::invalid_argument("train: batch_size must be >= 1");
  if (tcfg.mask_prob < 0.0 || tcfg.mask_prob > 1.0)
    throw std::invalid_argument("train: mask_prob must be in [0,1]");
  if (train_data.records.empty()) throw DataError("train: empty dataset");

  const bool embedding = plan.tmpl.bsid_mode == BsidMode::embedding;
  const bool onehot = plan.tmpl.bsid_mode == BsidMode::onehot;
  const BlockInfo bsid_block = bsid_onehot_block(plan);

  const EncodedDataset enc = encode_dataset(train_data, plan);

  // Partition into gradient and selection rows.
  std::vector<std::size_t> grad_rows, sel_rows;
  EncodedDataset sel_enc;  // used only by the paper protocol
  if (tcfg.selection == SelectionMode::validation_split) {
    if (selection_override)
      throw std::invalid_argument(
          "train: selection_override is only valid with the paper protocol");
    std::set<std::string> bs_set;
    for (const auto& r : train_data.records) bs_set.insert(r.bs_id);
    std::vector<std::string> bs(bs_set.begin(), bs_set.end());
    RngStream sel_rng(tcfg.seed, "selection");
    sel_rng.shuffle(bs);
    const std::size_t n_val = std::max<std::size_t>(
        1, static_cast<std::size_t>(
               std::llround(tcfg.validation_fraction *
                            static_cast<double>(bs.size()))));
    if (n_val >= bs.size())
      throw DataError("train: validation split leaves no gradient BSs");
    std::set<std::string> val_bs(bs.begin(),
                                 bs.begin() + static_cast<std::ptrdiff_t>(n_val));
    for (std::size_t i = 0; i < train_data.records.size(); ++i) {
      if (val_bs.count(train_data.records[i].bs_id))
        sel_rows.push_back(i);
      else
        grad_rows.push_back(i);
    }
  } else {
    if (!selection_override)
      throw std::invalid_argument(
          "train: paper protocol requires a selection dataset");
    if (selection_override->records.empty())
      throw DataError("train: empty selection set");
    for (std::size_t i = 0; i < train_data.records.size(); ++i)
      grad_rows.push_back(i);
    sel_enc = encode_dataset(*selection_override, plan);
    sel_rows.resize(sel_enc.size());
    for (std::size_t i = 0; i < sel_rows.size(); ++i) sel_rows[i] = i;
  }
  if (grad_rows.empty()) throw DataError("train: empty gradient set");
  if (sel_rows.empty()) throw DataError("train: empty selection set");

  const Slice grad =
      gather(enc, grad_rows, embedding);
  const Slice sel =
      tcfg.selection == SelectionMode::validation_split
          ? gather(enc, sel_rows, embedding)
          : gather(sel_enc, sel_rows, embedding);

  RngStream init_rng(tcfg.seed, "init");
  RngStream mask_rng(tcfg.seed, "masking");
  RngStream batch_rng(tcfg.seed, "batching");

  EnergyModel model = EnergyModel::init(mcfg, init_rng);

  const std::size_t n = grad.y.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  TrainResult result;
  result.best_selection_mape = std::numeric_limits<double>::infinity();
  std::vector<std::vector<double>> best_values;

  for (std::size_t epoch = 1; epoch <= tcfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    if (tcfg.shuffle) batch_rng.shuffle(order);

    // Per-epoch mask; resampled every epoch.
    std::vector<std::uint8_t> masked(n, 0);
    std::size_t masked_count = 0;
    if (embedding || onehot) {
      if (tcfg.quota_mask) {
        std::vector<std::size_t> perm(n);
        for (std::size_t i = 0; i < n; ++i) perm[i] = i;
        mask_rng.shuffle(perm);
        const std::size_t k = static_cast<std::size_t>(
            std::llround(tcfg.mask_prob * static_cast<double>(n)));
        for (std::size_t i = 0; i < k; ++i) masked[perm[i]] = 1;
        masked_count = k;
      } else {
        for (std::size_t i = 0; i < n; ++i) {
          if (mask_rng.bernoulli(tcfg.mask_prob)) {
            masked[i] = 1;
            ++masked_count;
          }
        }
      }
    }

    double abs_err = 0.0, abs_y = 0.0;
    for (std::size_t start = 0; start < n; start += tcfg.batch_size) {
      const std::size_t end = std::min(n, start + tcfg.batch_size);
      const std::size_t b = end - start;
      Tensor fb = Tensor::zeros({b, grad.features.cols()});
      std::vector<double> yb(b);
      std::vector<std::size_t> ib(embedding ? b : 0);
      for (std::size_t i = 0; i < b; ++i) {
        const std::size_t row = order[start + i];
        std::copy(grad.features.row_ptr(row),
                  grad.features.row_ptr(row) + grad.features.cols(),
                  fb.row_ptr(i));
        yb[i] = grad.y[row];
        if (embedding) ib[i] = masked[row] ? 0 : grad.idx[row];
        if (onehot && masked[row])
          std::fill(fb.row_ptr(i) + bsid_block.offset,
                    fb.row_ptr(i) + bsid_block.offset + bsid_block.width, 0.0);
      }

      EnergyModel::Cache cache;
      const auto pred = model.forward(fb, ib, &cache);
      const double loss = mape(yb, pred);
      if (!std::isfinite(loss))
        throw NumericalError("train: non-finite loss at epoch " +
                             std::to_string(epoch) + ", batch " +
                             std::to_string(start / tcfg.batch_size));
      for (std::size_t i = 0; i < b; ++i) {
        abs_err += std::abs(yb[i] - pred[i]);
        abs_y += std::abs(yb[i]);
      }
      const auto dy = mape_gradient(yb, pred);
      model.backward(cache, dy);
      adam_step(model.params(), tcfg.adam);
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.train_mape = abs_err / abs_y;
    stats.selection_mape = pooled_mape(model, sel, tcfg.batch_size);
    stats.masked_count = masked_count;
    stats.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    result.history.push_back(stats);

    if (stats.selection_mape < result.best_selection_mape) {
      result.best_selection_mape = stats.selection_mape;
      result.best_epoch = epoch;
      best_values.clear();
      for (const auto& e : model.params().entries())
        best_values.push_back(e.value);
    }
  }

  for (std::size_t i = 0; i < model.params().entries().size(); ++i)
    model.params().entries()[i].value = best_values[i];
  result.model = std::move(model);
  return result;
}

void write_history_csv(const std::vector<EpochStats>& history,
                       const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write history csv: " + path);
  out << "epoch,train_mape,selection_mape,masked_count,seconds\n";
  for (const auto& s : history) {
    out << s.epoch << ',' << format_double(s.train_mape) << ','
        << format_double(s.selection_mape) << ',' << s.masked_count << ','
        << format_double(s.seconds) << '\n';
  }
  if (!out) throw DataError("history write failed: " + path);
}

}  // namespace bsem
