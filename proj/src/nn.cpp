#include "bsem/nn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bsem {

ParamEntry& ParameterStore::add(const std::string& name,
                                std::vector<std::size_t> shape) {
  if (index_.count(name))
    throw std::invalid_argument("ParameterStore: duplicate entry " + name);
  std::size_t n = Tensor::element_count(shape);
  ParamEntry e;
  e.name = name;
  e.shape = std::move(shape);
  e.value.assign(n, 0.0);
  e.grad.assign(n, 0.0);
  e.m.assign(n, 0.0);
  e.v.assign(n, 0.0);
  index_[name] = entries_.size();
  entries_.push_back(std::move(e));
  return entries_.back();
}

ParamEntry& ParameterStore::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end())
    throw std::invalid_argument("ParameterStore: no entry " + name);
  return entries_[it->second];
}

const ParamEntry& ParameterStore::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    throw std::invalid_argument("ParameterStore: no entry " + name);
  return entries_[it->second];
}

bool ParameterStore::contains(const std::string& name) const {
  return index_.count(name) != 0;
}

void ParameterStore::zero_grads() {
  for (auto& e : entries_) std::fill(e.grad.begin(), e.grad.end(), 0.0);
}

std::size_t ParameterStore::total_size() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.size();
  return n;
}

void ParameterStore::copy_values_from(const ParameterStore& other) {
  if (entries_.size() != other.entries_.size())
    throw std::invalid_argument("copy_values_from: entry count mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].shape != other.entries_[i].shape)
      throw std::invalid_argument("copy_values_from: shape mismatch at " +
                                  entries_[i].name);
    entries_[i].value = other.entries_[i].value;
  }
}

void adam_step(ParameterStore& store, const AdamConfig& cfg) {
  store.step_ += 1;
  const double t = static_cast<double>(store.step_);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& e : store.entries_) {
    double* val = e.value.data();
    double* g = e.grad.data();
    double* m = e.m.data();
    double* v = e.v.data();
    const std::size_t n = e.size();
    for (std::size_t i = 0; i < n; ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      val[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
      g[i] = 0.0;
    }
  }
}

// ---- primitives -------------------------------------------------------------

Tensor linear_forward(const Tensor& x, const Tensor& W, const Tensor& b) {
  const std::size_t batch = x.rows();
  const std::size_t in = x.cols();
  const std::size_t out = W.rows();
  if (W.cols() != in)
    throw std::invalid_argument("linear_forward: W cols != x cols");
  if (b.size() != out)
    throw std::invalid_argument("linear_forward: b size != W rows");
  Tensor y = Tensor::zeros({batch, out});
  for (std::size_t r = 0; r < batch; ++r) {
    const double* xr = x.row_ptr(r);
    double* yr = y.row_ptr(r);
    for (std::size_t o = 0; o < out; ++o) {
      const double* wr = W.row_ptr(o);
      double acc = 0.0;
      for (std::size_t i = 0; i < in; ++i) acc += xr[i] * wr[i];
      yr[o] = acc + b.data[o];
    }
  }
  return y;
}

void linear_backward(const Tensor& x, const Tensor& W, const Tensor& dy,
                     Tensor& dx, std::vector<double>& dW,
                     std::vector<double>& db) {
  const std::size_t batch = x.rows();
  const std::size_t in = x.cols();
  const std::size_t out = W.rows();
  if (dy.rows() != batch || dy.cols() != out)
    throw std::invalid_argument("linear_backward: dy shape mismatch");
  if (dW.size() != out * in || db.size() != out)
    throw std::invalid_argument("linear_backward: gradient buffer mismatch");
  dx = Tensor::zeros({batch, in});
  for (std::size_t r = 0; r < batch; ++r) {
    const double* xr = x.row_ptr(r);
    const double* dyr = dy.row_ptr(r);
    double* dxr = dx.row_ptr(r);
    for (std::size_t o = 0; o < out; ++o) {
      const double g = dyr[o];
      if (g == 0.0) continue;
      const double* wr = W.row_ptr(o);
      double* dWr = dW.data() + o * in;
      for (std::size_t i = 0; i < in; ++i) {
        dxr[i] += g * wr[i];
        dWr[i] += g * xr[i];
      }
      db[o] += g;
    }
  }
}

Tensor relu_forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& dy) {
  if (!x.same_shape(dy))
    throw std::invalid_argument("relu_backward: shape mismatch");
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.data.size(); ++i)
    if (x.data[i] <= 0.0) dx.data[i] = 0.0;
  return dx;
}

Tensor sigmoid_forward(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.data) {
    if (v >= 0.0) {
      v = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      v = e / (1.0 + e);
    }
  }
  return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& dy) {
  if (!y.same_shape(dy))
    throw std::invalid_argument("sigmoid_backward: shape mismatch");
  Tensor dx = dy;
  for (std::size_t i = 0; i < dx.data.size(); ++i)
    dx.data[i] *= y.data[i] * (1.0 - y.data[i]);
  return dx;
}

Tensor embedding_forward(const Tensor& table,
                         const std::vector<std::size_t>& indices) {
  const std::size_t rows = table.rows();
  const std::size_t dim = table.cols();
  Tensor y = Tensor::zeros({indices.size(), dim});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= rows)
      throw std::out_of_range("embedding_forward: index " +
                              std::to_string(indices[i]) + " >= rows " +
                              std::to_string(rows));
    const double* src = table.row_ptr(indices[i]);
    std::copy(src, src + dim, y.row_ptr(i));
  }
  return y;
}

void embedding_backward(const std::vector<std::size_t>& indices,
                        const Tensor& dy, std::vector<double>& table_grad,
                        std::size_t table_rows, std::size_t dim) {
  if (dy.rows() != indices.size() || dy.cols() != dim)
    throw std::invalid_argument("embedding_backward: dy shape mismatch");
  if (table_grad.size() != table_rows * dim)
    throw std::invalid_argument("embedding_backward: grad buffer mismatch");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= table_rows)
      throw std::out_of_range("embedding_backward: index out of range");
    const double* src = dy.row_ptr(i);
    double* dst = table_grad.data() + indices[i] * dim;
    for (std::size_t k = 0; k < dim; ++k) dst[k] += src[k];
  }
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("hadamard: shape mismatch");
  Tensor c = a;
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] *= b.data[i];
  return c;
}

// ---- initialization ----------------------------------------------------------

void init_linear(ParamEntry& W, ParamEntry& b, RngStream& rng) {
  const std::size_t out = W.shape[0];
  const std::size_t in = W.shape[1];
  const double limit = std::sqrt(6.0 / static_cast<double>(in + out));
  for (double& v : W.value) v = rng.uniform(-limit, limit);
  std::fill(b.value.begin(), b.value.end(), 0.0);
}

void init_embedding(ParamEntry& table, RngStream& rng) {
  for (double& v : table.value) v = rng.uniform(-0.1, 0.1);
}

// ---- gradient checking --------------------------------------------------------

GradCheckReport grad_check(const std::function<double()>& loss,
                           ParameterStore& params, double tolerance, double h,
                           std::size_t max_probes_per_entry) {
  GradCheckReport report;
  report.tolerance = tolerance;

  loss();  // fills analytic gradients
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.entries().size());
  for (const auto& e : params.entries()) analytic.push_back(e.grad);

  for (std::size_t ei = 0; ei < params.entries().size(); ++ei) {
    ParamEntry& e = params.entries()[ei];
    GradCheckEntry ge;
    ge.name = e.name;

    const std::size_t n = e.size();
    std::size_t probes = n;
    std::size_t stride = 1;
    if (max_probes_per_entry > 0 && n > max_probes_per_entry) {
      probes = max_probes_per_entry;
      stride = n / max_probes_per_entry;
    }
    for (std::size_t p = 0; p < probes; ++p) {
      const std::size_t i = p * stride;
      const double saved = e.value[i];
      e.value[i] = saved + h;
      const double lp = loss();
      e.value[i] = saved - h;
      const double lm = loss();
      e.value[i] = saved;

      const double numeric = (lp - lm) / (2.0 * h);
      const double a = analytic[ei][i];
      const double denom = std::max({1.0, std::abs(a), std::abs(numeric)});
      const double rel = std::abs(a - numeric) / denom;
      if (rel > ge.max_rel_err) ge.max_rel_err = rel;
      ++ge.probed;
    }
    if (ge.max_rel_err > report.max_rel_err) {
      report.max_rel_err = ge.max_rel_err;
      report.worst_param = ge.name;
    }
    report.entries.push_back(std::move(ge));
  }

  // Restore analytic grads so the store is left in the state loss() produced.
  loss();
  report.pass = report.max_rel_err < tolerance;
  return report;
}

}  // namespace bsem
