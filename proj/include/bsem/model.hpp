#pragma once

#include <string>
#include <utility>
#include <vector>

#include "bsem/encoder.hpp"
#include "bsem/nn.hpp"
#include "bsem/rng.hpp"
#include "bsem/tensor.hpp"

namespace bsem {

struct ModelConfig {
  // Model input width: encoder width plus embed_dim when the embedding is
  // present.
  std::size_t input_dim = 0;
  std::vector<std::size_t> hidden_dims{128, 64};
  bool has_embedding = true;
  std::size_t embed_dim = 64;
  std::size_t embed_rows = 0;  // table capacity; row 0 reserved for unknown
  std::size_t arl_bottleneck = 12;
  bool arl_enabled = true;
};

std::size_t next_pow2_at_least(std::size_t n);

// Closed-form trainable-parameter count; no instantiation.
std::size_t parameter_count(const ModelConfig& cfg);

// Derives the model configuration from a fitted plan: input_dim from
// dimension(plan), embedding capacity = next power of two >= #BSIDs + 1.
ModelConfig make_model_config(const EncodingPlan& plan,
                              std::vector<std::size_t> hidden_dims = {128, 64},
                              std::size_t arl_bottleneck = 12,
                              bool arl_enabled = true);

// Input re-weighting + MLP regression head:
//
//   x  = concat(features, emb[bsid])
//   w  = sigmoid(arl_w2 . relu(arl_w1 . x + arl_b1) + arl_b2)
//   x' = w (.) x                      (x' = x when the re-weighting is off)
//   y  = out(relu(fc2(relu(fc1(x')))))
//
// Parameters live in a ParameterStore in fixed declaration order:
// emb, arl_w1, arl_b1, arl_w2, arl_b2, fc1_w, fc1_b, ..., out_w, out_b.
class EnergyModel {
 public:
  EnergyModel() = default;

  // Uniform Glorot linears, biases zero, embedding rows uniform in [-0.1,0.1].
  static EnergyModel init(const ModelConfig& cfg, RngStream& rng);
  // All-zero parameters (hand-set weights in tests).
  static EnergyModel zeros(const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  ParameterStore& params() { return params_; }
  const ParameterStore& params() const { return params_; }

  struct Cache {
    Tensor x;                       // concatenated input
    Tensor arl_pre1, arl_post1;     // bottleneck pre/post ReLU
    Tensor arl_gate;                // sigmoid output w
    Tensor reweighted;              // x'
    std::vector<Tensor> mlp_in;     // layer inputs z_0..z_L (z_0 = x')
    std::vector<Tensor> mlp_pre;    // pre-activations a_1..a_L
    std::vector<std::size_t> bsid_idx;
  };

  // features: [batch, encoder width]; bsid_idx must have batch entries when
  // the embedding is present and be empty otherwise. Returns one prediction
  // per row. Reentrant on a frozen model.
  std::vector<double> forward(const Tensor& features,
                              const std::vector<std::size_t>& bsid_idx,
                              Cache* cache = nullptr) const;

  // Accumulates parameter gradients for dLoss/dy. Requires the cache from the
  // corresponding forward call.
  void backward(const Cache& cache, const std::vector<double>& dy);

  // Checkpoint: magic, format version, JSON header (config, plan sidecar
  // reference, SHA-256 of payload, entry table), then per-entry little-endian
  // 64-bit doubles in declaration order.
  void save(const std::string& path, const std::string& plan_ref) const;
  static EnergyModel load(const std::string& path,
                          std::string* plan_ref = nullptr);

 private:
  static EnergyModel build(const ModelConfig& cfg);

  ModelConfig cfg_;
  ParameterStore params_;
  std::size_t n_layers_ = 0;
};

// One row per fitted bs_id plus the reserved "UNKNOWN" row (index 0), values
// straight from the embedding table. Requires bsid_mode = embedding.
std::vector<std::pair<std::string, std::vector<double>>> export_embeddings(
    const EnergyModel& model, const EncodingPlan& plan);

void write_embeddings_csv(
    const std::vector<std::pair<std::string, std::vector<double>>>& rows,
    const std::string& path);

}  // namespace bsem
