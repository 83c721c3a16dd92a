#include "bsem/model.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "bsem/digest.hpp"
#include "bsem/errors.hpp"

namespace bsem {

namespace {

using json = nlohmann::json;

constexpr char kMagic[8] = {'B', 'S', 'E', 'M', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kFormatVersion = 1;

std::string layer_w(std::size_t i) { return "fc" + std::to_string(i + 1) + "_w"; }
std::string layer_b(std::size_t i) { return "fc" + std::to_string(i + 1) + "_b"; }

Tensor as_tensor(const ParamEntry& e) { return Tensor(e.shape, e.value); }

void append_u32_le(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void append_f64_le(std::vector<std::uint8_t>& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof bits);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

std::uint32_t read_u32_le(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

double read_f64_le(const std::uint8_t* p) {
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  double d;
  std::memcpy(&d, &bits, sizeof d);
  return d;
}

json config_to_json(const ModelConfig& cfg) {
  return json{{"input_dim", cfg.input_dim},
              {"hidden_dims", cfg.hidden_dims},
              {"has_embedding", cfg.has_embedding},
              {"embed_dim", cfg.embed_dim},
              {"embed_rows", cfg.embed_rows},
              {"arl_bottleneck", cfg.arl_bottleneck},
              {"arl_enabled", cfg.arl_enabled}};
}

ModelConfig config_from_json(const json& j) {
  ModelConfig cfg;
  cfg.input_dim = j.at("input_dim").get<std::size_t>();
  cfg.hidden_dims = j.at("hidden_dims").get<std::vector<std::size_t>>();
  cfg.has_embedding = j.at("has_embedding").get<bool>();
  cfg.embed_dim = j.at("embed_dim").get<std::size_t>();
  cfg.embed_rows = j.at("embed_rows").get<std::size_t>();
  cfg.arl_bottleneck = j.at("arl_bottleneck").get<std::size_t>();
  cfg.arl_enabled = j.at("arl_enabled").get<bool>();
  return cfg;
}

}  // namespace

std::size_t next_pow2_at_least(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

std::size_t parameter_count(const ModelConfig& cfg) {
  std::size_t total = 0;
  if (cfg.has_embedding) total += cfg.embed_rows * cfg.embed_dim;
  if (cfg.arl_enabled) {
    total += cfg.arl_bottleneck * cfg.input_dim + cfg.arl_bottleneck;  // compress
    total += cfg.input_dim * cfg.arl_bottleneck + cfg.input_dim;      // expand
  }
  std::size_t prev = cfg.input_dim;
  for (std::size_t h : cfg.hidden_dims) {
    total += h * prev + h;
    prev = h;
  }
  total += prev + 1;  // output layer
  return total;
}

ModelConfig make_model_config(const EncodingPlan& plan,
                              std::vector<std::size_t> hidden_dims,
                              std::size_t arl_bottleneck, bool arl_enabled) {
  ModelConfig cfg;
  cfg.input_dim = dimension(plan);
  cfg.hidden_dims = std::move(hidden_dims);
  cfg.has_embedding = plan.tmpl.bsid_mode == BsidMode::embedding;
  cfg.embed_dim = plan.tmpl.embed_dim;
  cfg.embed_rows =
      cfg.has_embedding ? next_pow2_at_least(plan.bsid_vocab.size() + 1) : 0;
  cfg.arl_bottleneck = arl_bottleneck;
  cfg.arl_enabled = arl_enabled;
  return cfg;
}

EnergyModel EnergyModel::build(const ModelConfig& cfg) {
  if (cfg.input_dim == 0)
    throw std::invalid_argument("EnergyModel: input_dim must be positive");
  if (cfg.arl_enabled && cfg.arl_bottleneck >= cfg.input_dim)
    throw std::invalid_argument(
        "EnergyModel: arl_bottleneck must be < input_dim");
  if (cfg.has_embedding && cfg.embed_rows == 0)
    throw std::invalid_argument("EnergyModel: embed_rows must be positive");

  EnergyModel m;
  m.cfg_ = cfg;
  m.n_layers_ = cfg.hidden_dims.size();
  if (cfg.has_embedding)
    m.params_.add("emb", {cfg.embed_rows, cfg.embed_dim});
  if (cfg.arl_enabled) {
    m.params_.add("arl_w1", {cfg.arl_bottleneck, cfg.input_dim});
    m.params_.add("arl_b1", {cfg.arl_bottleneck});
    m.params_.add("arl_w2", {cfg.input_dim, cfg.arl_bottleneck});
    m.params_.add("arl_b2", {cfg.input_dim});
  }
  std::size_t prev = cfg.input_dim;
  for (std::size_t i = 0; i < cfg.hidden_dims.size(); ++i) {
    m.params_.add(layer_w(i), {cfg.hidden_dims[i], prev});
    m.params_.add(layer_b(i), {cfg.hidden_dims[i]});
    prev = cfg.hidden_dims[i];
  }
  m.params_.add("out_w", {1, prev});
  m.params_.add("out_b", {1});
  return m;
}

EnergyModel EnergyModel::zeros(const ModelConfig& cfg) { return build(cfg); }

EnergyModel EnergyModel::init(const ModelConfig& cfg, RngStream& rng) {
  EnergyModel m = build(cfg);
  if (cfg.has_embedding) init_embedding(m.params_.at("emb"), rng);
  if (cfg.arl_enabled) {
    init_linear(m.params_.at("arl_w1"), m.params_.at("arl_b1"), rng);
    init_linear(m.params_.at("arl_w2"), m.params_.at("arl_b2"), rng);
  }
  for (std::size_t i = 0; i < m.n_layers_; ++i)
    init_linear(m.params_.at(layer_w(i)), m.params_.at(layer_b(i)), rng);
  init_linear(m.params_.at("out_w"), m.params_.at("out_b"), rng);
  return m;
}

std::vector<double> EnergyModel::forward(
    const Tensor& features, const std::vector<std::size_t>& bsid_idx,
    Cache* cache) const {
  const std::size_t batch = features.rows();
  const std::size_t enc = features.cols();
  const std::size_t expected_enc =
      cfg_.input_dim - (cfg_.has_embedding ? cfg_.embed_dim : 0);
  if (enc != expected_enc)
    throw std::invalid_argument("forward: encoder width " + std::to_string(enc) +
                                " does not match input_dim");
  if (cfg_.has_embedding && bsid_idx.size() != batch)
    throw std::invalid_argument("forward: bsid index count != batch");
  if (!cfg_.has_embedding && !bsid_idx.empty())
    throw std::invalid_argument("forward: model has no embedding");

  Tensor x = Tensor::zeros({batch, cfg_.input_dim});
  for (std::size_t r = 0; r < batch; ++r)
    std::copy(features.row_ptr(r), features.row_ptr(r) + enc, x.row_ptr(r));
  if (cfg_.has_embedding) {
    const Tensor emb = embedding_forward(as_tensor(params_.at("emb")), bsid_idx);
    for (std::size_t r = 0; r < batch; ++r)
      std::copy(emb.row_ptr(r), emb.row_ptr(r) + cfg_.embed_dim,
                x.row_ptr(r) + enc);
  }

  Tensor reweighted;
  Tensor pre1, post1, gate;
  if (cfg_.arl_enabled) {
    pre1 = linear_forward(x, as_tensor(params_.at("arl_w1")),
                          as_tensor(params_.at("arl_b1")));
    post1 = relu_forward(pre1);
    Tensor z = linear_forward(post1, as_tensor(params_.at("arl_w2")),
                              as_tensor(params_.at("arl_b2")));
    gate = sigmoid_forward(z);
    reweighted = hadamard(gate, x);
  } else {
    reweighted = x;
  }

  std::vector<Tensor> mlp_in, mlp_pre;
  mlp_in.push_back(reweighted);
  for (std::size_t i = 0; i < n_layers_; ++i) {
    Tensor a = linear_forward(mlp_in.back(), as_tensor(params_.at(layer_w(i))),
                              as_tensor(params_.at(layer_b(i))));
    mlp_pre.push_back(a);
    mlp_in.push_back(relu_forward(a));
  }
  Tensor y = linear_forward(mlp_in.back(), as_tensor(params_.at("out_w")),
                            as_tensor(params_.at("out_b")));

  std::vector<double> out(batch);
  for (std::size_t r = 0; r < batch; ++r) out[r] = y.at(r, 0);

  if (cache) {
    cache->x = std::move(x);
    cache->arl_pre1 = std::move(pre1);
    cache->arl_post1 = std::move(post1);
    cache->arl_gate = std::move(gate);
    cache->reweighted = mlp_in.front();
    cache->mlp_in = std::move(mlp_in);
    cache->mlp_pre = std::move(mlp_pre);
    cache->bsid_idx = bsid_idx;
  }
  return out;
}

void EnergyModel::backward(const Cache& cache, const std::vector<double>& dy) {
  const std::size_t batch = cache.x.rows();
  if (dy.size() != batch)
    throw std::invalid_argument("backward: dy size != batch");

  Tensor d_out = Tensor::zeros({batch, 1});
  for (std::size_t r = 0; r < batch; ++r) d_out.at(r, 0) = dy[r];

  ParamEntry& out_w = params_.at("out_w");
  ParamEntry& out_b = params_.at("out_b");
  Tensor d_prev;
  linear_backward(cache.mlp_in.back(), as_tensor(out_w), d_out, d_prev,
                  out_w.grad, out_b.grad);

  for (std::size_t i = n_layers_; i-- > 0;) {
    Tensor d_act = relu_backward(cache.mlp_pre[i], d_prev);
    ParamEntry& W = params_.at(layer_w(i));
    ParamEntry& b = params_.at(layer_b(i));
    Tensor d_in;
    linear_backward(cache.mlp_in[i], as_tensor(W), d_act, d_in, W.grad, b.grad);
    d_prev = std::move(d_in);
  }

  // d_prev is now dL/dx'.
  Tensor dx;
  if (cfg_.arl_enabled) {
    Tensor d_gate = hadamard(d_prev, cache.x);
    dx = hadamard(d_prev, cache.arl_gate);
    Tensor dz = sigmoid_backward(cache.arl_gate, d_gate);
    ParamEntry& w2 = params_.at("arl_w2");
    ParamEntry& b2 = params_.at("arl_b2");
    Tensor d_post1;
    linear_backward(cache.arl_post1, as_tensor(w2), dz, d_post1, w2.grad,
                    b2.grad);
    Tensor d_pre1 = relu_backward(cache.arl_pre1, d_post1);
    ParamEntry& w1 = params_.at("arl_w1");
    ParamEntry& b1 = params_.at("arl_b1");
    Tensor dx_arl;
    linear_backward(cache.x, as_tensor(w1), d_pre1, dx_arl, w1.grad, b1.grad);
    for (std::size_t i = 0; i < dx.data.size(); ++i)
      dx.data[i] += dx_arl.data[i];
  } else {
    dx = d_prev;
  }

  if (cfg_.has_embedding) {
    const std::size_t enc = cfg_.input_dim - cfg_.embed_dim;
    Tensor d_emb = Tensor::zeros({batch, cfg_.embed_dim});
    for (std::size_t r = 0; r < batch; ++r)
      std::copy(dx.row_ptr(r) + enc, dx.row_ptr(r) + cfg_.input_dim,
                d_emb.row_ptr(r));
    ParamEntry& emb = params_.at("emb");
    embedding_backward(cache.bsid_idx, d_emb, emb.grad, cfg_.embed_rows,
                       cfg_.embed_dim);
  }
}

void EnergyModel::save(const std::string& path,
                       const std::string& plan_ref) const {
  std::vector<std::uint8_t> payload;
  std::size_t total = 0;
  for (const auto& e : params_.entries()) total += e.size();
  payload.reserve(total * 8);
  json entries = json::array();
  for (const auto& e : params_.entries()) {
    for (double v : e.value) {
      if (!std::isfinite(v))
        throw NumericalError("save: non-finite value in parameter " + e.name);
      append_f64_le(payload, v);
    }
    entries.push_back({{"name", e.name}, {"shape", e.shape}});
  }

  json header;
  header["config"] = config_to_json(cfg_);
  header["plan_ref"] = plan_ref;
  header["payload_sha256"] = sha256_hex(payload);
  header["entries"] = entries;
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint: " + path);
  out.write(kMagic, sizeof kMagic);
  std::vector<std::uint8_t> lenbuf;
  append_u32_le(lenbuf, kFormatVersion);
  append_u32_le(lenbuf, static_cast<std::uint32_t>(header_text.size()));
  out.write(reinterpret_cast<const char*>(lenbuf.data()),
            static_cast<std::streamsize>(lenbuf.size()));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  out.write(reinterpret_cast<const char*>(payload.data()),
            static_cast<std::streamsize>(payload.size()));
  if (!out) throw DataError("checkpoint write failed: " + path);
}

EnergyModel EnergyModel::load(const std::string& path, std::string* plan_ref) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() < sizeof(kMagic) + 8 ||
      std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
    throw DataError("not a checkpoint file: " + path);

  std::size_t off = sizeof kMagic;
  const std::uint32_t version = read_u32_le(bytes.data() + off);
  off += 4;
  if (version != kFormatVersion)
    throw DataError("unsupported checkpoint version " + std::to_string(version) +
                    " (expected " + std::to_string(kFormatVersion) + ")");
  const std::uint32_t header_len = read_u32_le(bytes.data() + off);
  off += 4;
  if (off + header_len > bytes.size())
    throw DataError("checkpoint header truncated: " + path);
  json header;
  try {
    header = json::parse(bytes.begin() + static_cast<std::ptrdiff_t>(off),
                         bytes.begin() + static_cast<std::ptrdiff_t>(off + header_len));
  } catch (const json::exception& e) {
    throw DataError("checkpoint header corrupt: " + std::string(e.what()));
  }
  off += header_len;

  const std::string expected_sha = header.at("payload_sha256").get<std::string>();
  const std::string actual_sha =
      sha256_hex(bytes.data() + off, bytes.size() - off);
  if (actual_sha != expected_sha)
    throw DataError("checkpoint checksum mismatch (corrupt or truncated): " +
                    path);

  EnergyModel m = build(config_from_json(header.at("config")));
  const json& entries = header.at("entries");
  if (entries.size() != m.params_.entries().size())
    throw DataError("checkpoint entry table does not match config");
  for (std::size_t i = 0; i < m.params_.entries().size(); ++i) {
    ParamEntry& e = m.params_.entries()[i];
    if (entries.at(i).at("name").get<std::string>() != e.name ||
        entries.at(i).at("shape").get<std::vector<std::size_t>>() != e.shape)
      throw DataError("checkpoint entry mismatch at " + e.name);
    for (double& v : e.value) {
      if (off + 8 > bytes.size())
        throw DataError("checkpoint payload truncated: " + path);
      v = read_f64_le(bytes.data() + off);
      off += 8;
    }
  }
  if (off != bytes.size())
    throw DataError("checkpoint has trailing bytes: " + path);
  if (plan_ref) *plan_ref = header.at("plan_ref").get<std::string>();
  return m;
}

std::vector<std::pair<std::string, std::vector<double>>> export_embeddings(
    const EnergyModel& model, const EncodingPlan& plan) {
  if (!model.config().has_embedding)
    throw std::invalid_argument("export_embeddings: model lacks an embedding");
  if (plan.tmpl.bsid_mode != BsidMode::embedding)
    throw std::invalid_argument("export_embeddings: plan bsid_mode is not embedding");

  const ParamEntry& emb = model.params().at("emb");
  const std::size_t dim = model.config().embed_dim;
  auto row = [&](std::size_t r) {
    return std::vector<double>(emb.value.begin() + static_cast<std::ptrdiff_t>(r * dim),
                               emb.value.begin() + static_cast<std::ptrdiff_t>((r + 1) * dim));
  };

  std::vector<std::pair<std::string, std::vector<double>>> rows;
  rows.reserve(plan.bsid_vocab.size() + 1);
  rows.emplace_back("UNKNOWN", row(0));
  for (std::size_t i = 0; i < plan.bsid_vocab.size(); ++i)
    rows.emplace_back(plan.bsid_vocab[i], row(i + 1));
  return rows;
}

void write_embeddings_csv(
    const std::vector<std::pair<std::string, std::vector<double>>>& rows,
    const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write embeddings csv: " + path);
  const std::size_t dim = rows.empty() ? 0 : rows.front().second.size();
  out << "bs_id";
  for (std::size_t i = 0; i < dim; ++i) out << ",e" << i;
  out << '\n';
  for (const auto& [id, values] : rows) {
    out << id;
    char buf[64];
    for (double v : values) {
      std::snprintf(buf, sizeof buf, "%.10g", v);
      out << ',' << buf;
    }
    out << '\n';
  }
}

}  // namespace bsem
