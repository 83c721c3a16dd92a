#include "bsem/selfcheck.hpp"

#include <cmath>

#include "bsem/model.hpp"
#include "bsem/training.hpp"

namespace bsem {

namespace {

std::vector<double> random_vector(RngStream& rng, std::size_t n, double lo,
                                  double hi) {
  std::vector<double> v(n);
  for (auto& x : v) x = rng.uniform(lo, hi);
  return v;
}

// Values bounded away from zero so ReLU masks are stable under +-h probes.
std::vector<double> random_vector_away_from_zero(RngStream& rng, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) {
    const double mag = rng.uniform(0.05, 2.0);
    x = rng.bernoulli(0.5) ? mag : -mag;
  }
  return v;
}

// L = sum(c .* f(theta)) for fixed random c keeps the loss scalar while
// exposing every output element.
SelfCheckResult check_linear(std::uint64_t seed, double tol) {
  RngStream rng(seed, "selfcheck/linear");
  const std::size_t batch = 3, in = 5, out = 4;
  Tensor x({batch, in}, random_vector(rng, batch * in, -1.0, 1.0));
  const std::vector<double> c = random_vector(rng, batch * out, -1.0, 1.0);

  ParameterStore store;
  ParamEntry& W = store.add("W", {out, in});
  ParamEntry& b = store.add("b", {out});
  init_linear(W, b, rng);
  for (auto& v : b.value) v = rng.uniform(-0.5, 0.5);

  auto loss = [&]() {
    store.zero_grads();
    const Tensor y = linear_forward(x, Tensor(W.shape, W.value),
                                    Tensor(b.shape, b.value));
    double L = 0.0;
    Tensor dy = Tensor::zeros(y.shape);
    for (std::size_t i = 0; i < y.data.size(); ++i) {
      L += c[i] * y.data[i];
      dy.data[i] = c[i];
    }
    Tensor dx;
    linear_backward(x, Tensor(W.shape, W.value), dy, dx, W.grad, b.grad);
    return L;
  };
  return {"linear", grad_check(loss, store, tol)};
}

SelfCheckResult check_relu(std::uint64_t seed, double tol) {
  RngStream rng(seed, "selfcheck/relu");
  const std::size_t n = 24;
  ParameterStore store;
  ParamEntry& x = store.add("x", {n});
  x.value = random_vector_away_from_zero(rng, n);
  const std::vector<double> c = random_vector(rng, n, -1.0, 1.0);

  auto loss = [&]() {
    store.zero_grads();
    const Tensor y = relu_forward(Tensor(x.shape, x.value));
    double L = 0.0;
    Tensor dy = Tensor::zeros(y.shape);
    for (std::size_t i = 0; i < n; ++i) {
      L += c[i] * y.data[i];
      dy.data[i] = c[i];
    }
    const Tensor dx = relu_backward(Tensor(x.shape, x.value), dy);
    for (std::size_t i = 0; i < n; ++i) x.grad[i] += dx.data[i];
    return L;
  };
  return {"relu", grad_check(loss, store, tol)};
}

SelfCheckResult check_sigmoid(std::uint64_t seed, double tol) {
  RngStream rng(seed, "selfcheck/sigmoid");
  const std::size_t n = 24;
  ParameterStore store;
  ParamEntry& x = store.add("x", {n});
  x.value = random_vector(rng, n, -4.0, 4.0);
  const std::vector<double> c = random_vector(rng, n, -1.0, 1.0);

  auto loss = [&]() {
    store.zero_grads();
    const Tensor y = sigmoid_forward(Tensor(x.shape, x.value));
    double L = 0.0;
    Tensor dy = Tensor::zeros(y.shape);
    for (std::size_t i = 0; i < n; ++i) {
      L += c[i] * y.data[i];
      dy.data[i] = c[i];
    }
    const Tensor dx = sigmoid_backward(y, dy);
    for (std::size_t i = 0; i < n; ++i) x.grad[i] += dx.data[i];
    return L;
  };
  return {"sigmoid", grad_check(loss, store, tol)};
}

SelfCheckResult check_embedding(std::uint64_t seed, double tol) {
  RngStream rng(seed, "selfcheck/embedding");
  const std::size_t rows = 6, dim = 4;
  const std::vector<std::size_t> indices = {1, 0, 1, 5, 3};  // duplicate row 1
  ParameterStore store;
  ParamEntry& table = store.add("table", {rows, dim});
  init_embedding(table, rng);
  const std::vector<double> c = random_vector(rng, indices.size() * dim, -1.0, 1.0);

  auto loss = [&]() {
    store.zero_grads();
    const Tensor y =
        embedding_forward(Tensor(table.shape, table.value), indices);
    double L = 0.0;
    Tensor dy = Tensor::zeros(y.shape);
    for (std::size_t i = 0; i < y.data.size(); ++i) {
      L += c[i] * y.data[i];
      dy.data[i] = c[i];
    }
    embedding_backward(indices, dy, table.grad, rows, dim);
    return L;
  };
  return {"embedding_lookup", grad_check(loss, store, tol)};
}

SelfCheckResult check_hadamard(std::uint64_t seed, double tol) {
  RngStream rng(seed, "selfcheck/hadamard");
  const std::size_t n = 16;
  ParameterStore store;
  ParamEntry& a = store.add("a", {n});
  ParamEntry& b = store.add("b", {n});
  a.value = random_vector(rng, n, -2.0, 2.0);
  b.value = random_vector(rng, n, -2.0, 2.0);
  const std::vector<double> c = random_vector(rng, n, -1.0, 1.0);

  auto loss = [&]() {
    store.zero_grads();
    const Tensor ta(a.shape, a.value), tb(b.shape, b.value);
    const Tensor y = hadamard(ta, tb);
    double L = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      L += c[i] * y.data[i];
      a.grad[i] += c[i] * b.value[i];
      b.grad[i] += c[i] * a.value[i];
    }
    return L;
  };
  return {"hadamard", grad_check(loss, store, tol)};
}

SelfCheckResult check_full_model(std::uint64_t seed, double tol,
                                 bool inject_fault) {
  ModelConfig cfg;
  cfg.input_dim = 20;  // 12 encoded + 8 embedding
  cfg.hidden_dims = {16, 12};
  cfg.has_embedding = true;
  cfg.embed_dim = 8;
  cfg.embed_rows = 6;
  cfg.arl_bottleneck = 5;
  cfg.arl_enabled = true;
  const std::size_t batch = 8;
  const std::size_t enc = cfg.input_dim - cfg.embed_dim;

  // Resample until every pre-activation clears the ReLU kink and every
  // residual clears the |.| kink, so central differences stay valid.
  EnergyModel model;
  Tensor features;
  std::vector<std::size_t> idx(batch);
  std::vector<double> targets(batch);
  for (std::uint64_t attempt = 0;; ++attempt) {
    RngStream rng(seed + attempt, "selfcheck/model");
    model = EnergyModel::init(cfg, rng);
    features = Tensor({batch, enc}, random_vector(rng, batch * enc, -1.5, 1.5));
    for (auto& i : idx) i = rng.below(cfg.embed_rows);
    for (auto& t : targets) t = rng.uniform(0.5, 2.0);

    EnergyModel::Cache cache;
    const auto pred = model.forward(features, idx, &cache);
    bool clear = true;
    const double kink = 1e-3;
    for (const Tensor* t : {&cache.arl_pre1}) {
      for (double v : t->data)
        if (std::abs(v) < kink) clear = false;
    }
    for (const Tensor& t : cache.mlp_pre)
      for (double v : t.data)
        if (std::abs(v) < kink) clear = false;
    for (std::size_t i = 0; i < batch; ++i)
      if (std::abs(pred[i] - targets[i]) < kink) clear = false;
    if (clear || attempt > 50) break;
  }

  std::string fault_target;
  auto loss = [&]() {
    model.params().zero_grads();
    EnergyModel::Cache cache;
    const auto pred = model.forward(features, idx, &cache);
    const double L = mape(targets, pred);
    model.backward(cache, mape_gradient(targets, pred));
    if (inject_fault) {
      if (fault_target.empty()) {
        double best = -1.0;
        for (const auto& e : model.params().entries()) {
          for (double g : e.grad)
            if (std::abs(g) > best) {
              best = std::abs(g);
              fault_target = e.name;
            }
        }
      }
      for (double& g : model.params().at(fault_target).grad) g *= 1.1;
    }
    return L;
  };
  return {"full_model", grad_check(loss, model.params(), tol)};
}

}  // namespace

std::vector<SelfCheckResult> gradient_selfcheck(double tolerance,
                                                std::size_t seeds,
                                                bool inject_fault,
                                                std::uint64_t base_seed) {
  std::vector<SelfCheckResult> results;
  for (std::size_t s = 0; s < seeds; ++s) {
    const std::uint64_t seed = base_seed + s;
    results.push_back(check_linear(seed, tolerance));
    results.push_back(check_relu(seed, tolerance));
    results.push_back(check_sigmoid(seed, tolerance));
    results.push_back(check_embedding(seed, tolerance));
    results.push_back(check_hadamard(seed, tolerance));
    results.push_back(check_full_model(seed, tolerance, inject_fault));
  }
  return results;
}

bool all_pass(const std::vector<SelfCheckResult>& results) {
  for (const auto& r : results)
    if (!r.report.pass) return false;
  return !results.empty();
}

}  // namespace bsem
