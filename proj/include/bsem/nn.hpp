#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bsem/rng.hpp"
#include "bsem/tensor.hpp"

namespace bsem {

// One named parameter tensor with its gradient buffer and Adam moment
// slots. Buffers always share the value shape.
struct ParamEntry {
  std::string name;
  std::vector<std::size_t> shape;
  std::vector<double> value;
  std::vector<double> grad;
  std::vector<double> m;  // first moment
  std::vector<double> v;  // second moment

  std::size_t size() const { return value.size(); }
};

class ParameterStore {
 public:
  // References returned by add/at stay valid for the store's lifetime.
  ParamEntry& add(const std::string& name, std::vector<std::size_t> shape);
  ParamEntry& at(const std::string& name);
  const ParamEntry& at(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::deque<ParamEntry>& entries() { return entries_; }
  const std::deque<ParamEntry>& entries() const { return entries_; }

  void zero_grads();
  std::size_t total_size() const;
  std::uint64_t step() const { return step_; }
  void set_step(std::uint64_t s) { step_ = s; }

  // Copies values only (not moments/grads); shapes must agree.
  void copy_values_from(const ParameterStore& other);

 private:
  friend struct AdamConfig;
  friend void adam_step(ParameterStore&, const struct AdamConfig&);

  std::deque<ParamEntry> entries_;
  std::unordered_map<std::string, std::size_t> index_;
  std::uint64_t step_ = 0;
};

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Standard Adam with bias correction over every entry in the store.
// Gradients are zeroed afterwards and the shared step counter increments.
void adam_step(ParameterStore& store, const AdamConfig& cfg);

// ---- differentiable primitives -------------------------------------------
//
// Forward functions are pure. Backward functions overwrite dx and
// *accumulate* (+=) into parameter gradients so a batch can be backpropagated
// through several primitives sharing one store.

// y = x W^T + b with x:[batch,in], W:[out,in], b:[out].
Tensor linear_forward(const Tensor& x, const Tensor& W, const Tensor& b);
void linear_backward(const Tensor& x, const Tensor& W, const Tensor& dy,
                     Tensor& dx, std::vector<double>& dW, std::vector<double>& db);

Tensor relu_forward(const Tensor& x);
// Gradient at exactly 0 is defined as 0.
Tensor relu_backward(const Tensor& x, const Tensor& dy);

// Numerically stable elementwise logistic; outputs strictly in (0,1).
Tensor sigmoid_forward(const Tensor& x);
// Takes the forward *output* y = sigmoid(x).
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy);

// out[i] = table[indices[i]]; indices must be < table rows.
Tensor embedding_forward(const Tensor& table, const std::vector<std::size_t>& indices);
// Scatter-adds dy rows into the table gradient; duplicates accumulate.
void embedding_backward(const std::vector<std::size_t>& indices, const Tensor& dy,
                        std::vector<double>& table_grad, std::size_t table_rows,
                        std::size_t dim);

Tensor hadamard(const Tensor& a, const Tensor& b);

// ---- initialization --------------------------------------------------------

// Uniform(-limit, +limit) with limit = sqrt(6 / (fan_in + fan_out)).
void init_linear(ParamEntry& W, ParamEntry& b, RngStream& rng);
// Uniform in [-0.1, 0.1].
void init_embedding(ParamEntry& table, RngStream& rng);

// ---- gradient checking -----------------------------------------------------

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  std::size_t probed = 0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_err = 0.0;
  std::string worst_param;
  double tolerance = 0.0;
  bool pass = false;
};

// Compares analytic gradients against central finite differences.
//
// `loss` must be deterministic: it zeroes grads, runs forward+backward over
// the same fixed inputs, and returns the scalar loss. Relative error uses
// |a - n| / max(1, |a|, |n|), i.e. absolute comparison for small gradients.
// Entries larger than max_probes_per_entry are probed on a deterministic
// stride-spread subset.
GradCheckReport grad_check(const std::function<double()>& loss,
                           ParameterStore& params, double tolerance,
                           double h = 1e-5,
                           std::size_t max_probes_per_entry = 0 /* 0 = all */);

}  // namespace bsem
