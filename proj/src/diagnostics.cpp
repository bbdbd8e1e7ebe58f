#include "rrm/diagnostics.hpp"

#include <functional>
#include <map>
#include <random>

#include "rrm/decoder.hpp"
#include "rrm/encoder.hpp"
#include "rrm/errors.hpp"
#include "rrm/policy.hpp"
#include "rrm/scenario.hpp"

namespace rrm {

using ad::Matrix;
using ad::Tensor;

namespace {

using Fn = std::function<Tensor(std::span<const Tensor>)>;

struct Setup {
  std::vector<Tensor> inputs;
  Fn f;
};

Matrix randn(ad::Index r, ad::Index c, std::mt19937_64 &rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (ad::Index i = 0; i < m.size(); ++i)
    m.data()[i] = n(rng);
  return m;
}

Matrix positive(ad::Index r, ad::Index c, std::mt19937_64 &rng) {
  std::uniform_real_distribution<double> u(0.5, 2.0);
  Matrix m(r, c);
  for (ad::Index i = 0; i < m.size(); ++i)
    m.data()[i] = u(rng);
  return m;
}

ad::Mask random_mask(ad::Index r, ad::Index c, std::mt19937_64 &rng) {
  std::bernoulli_distribution b(0.6);
  ad::Mask m(r, c);
  for (ad::Index i = 0; i < r; ++i) {
    for (ad::Index j = 0; j < c; ++j)
      m(i, j) = b(rng);
    m(i, static_cast<ad::Index>(rng() % static_cast<std::uint64_t>(c))) = true;
  }
  return m;
}

Tensor param(Matrix m) { return Tensor::parameter(std::move(m)); }

Setup unary_case(std::function<Tensor(const Tensor &)> op, Matrix x) {
  return {{param(std::move(x))}, [op](std::span<const Tensor> in) { return op(in[0]); }};
}

Setup binary_case(std::function<Tensor(const Tensor &, const Tensor &)> op, Matrix a, Matrix b) {
  return {{param(std::move(a)), param(std::move(b))},
          [op](std::span<const Tensor> in) { return op(in[0], in[1]); }};
}

/// Inputs are the listed tensors of `store`; f re-runs `body` against the store.
Setup store_case(const ParamStore &store, std::vector<Tensor> extra, std::function<Tensor()> body) {
  std::vector<Tensor> inputs = std::move(extra);
  for (const auto &t : store.tensors())
    inputs.push_back(t);
  return {inputs, [body](std::span<const Tensor>) { return body(); }};
}

Setup make_setup(const std::string &name, std::mt19937_64 &rng) {
  if (name == "matmul")
    return binary_case(ad::matmul, randn(3, 4, rng), randn(4, 2, rng));
  if (name == "add")
    return binary_case(ad::add, randn(3, 4, rng), randn(3, 4, rng));
  if (name == "add_broadcast")
    return binary_case(ad::add, randn(3, 4, rng), randn(1, 4, rng));
  if (name == "sub")
    return binary_case(ad::sub, randn(3, 4, rng), randn(3, 4, rng));
  if (name == "sub_broadcast")
    return binary_case(ad::sub, randn(3, 4, rng), randn(1, 4, rng));
  if (name == "mul")
    return binary_case(ad::mul, randn(3, 4, rng), randn(3, 4, rng));
  if (name == "mul_broadcast")
    return binary_case(ad::mul, randn(3, 4, rng), randn(1, 4, rng));
  if (name == "div")
    return binary_case(ad::div, randn(3, 4, rng), positive(3, 4, rng));
  if (name == "scale")
    return unary_case([](const Tensor &x) { return ad::scale(x, -1.7); }, randn(3, 4, rng));
  if (name == "add_scalar")
    return unary_case([](const Tensor &x) { return ad::add_scalar(x, 0.3); }, randn(3, 4, rng));
  if (name == "neg")
    return unary_case(ad::neg, randn(3, 4, rng));
  if (name == "relu")
    return unary_case(ad::relu, randn(3, 4, rng));
  if (name == "sigmoid")
    return unary_case(ad::sigmoid, randn(3, 4, rng));
  if (name == "tanh")
    return unary_case(static_cast<Tensor (*)(const Tensor &)>(ad::tanh), randn(3, 4, rng));
  if (name == "exp")
    return unary_case(static_cast<Tensor (*)(const Tensor &)>(ad::exp), randn(3, 4, rng));
  if (name == "log")
    return unary_case(static_cast<Tensor (*)(const Tensor &)>(ad::log), positive(3, 4, rng));
  if (name == "row_softmax")
    return unary_case(ad::row_softmax, randn(3, 5, rng));
  if (name == "masked_row_softmax") {
    const ad::Mask m = random_mask(3, 5, rng);
    return unary_case([m](const Tensor &x) { return ad::masked_row_softmax(x, m); }, randn(3, 5, rng));
  }
  if (name == "masked_row_log_softmax") {
    const ad::Mask m = random_mask(3, 5, rng);
    return unary_case([m](const Tensor &x) { return ad::masked_row_log_softmax(x, m); }, randn(3, 5, rng));
  }
  if (name == "layer_norm") {
    return {{param(randn(3, 5, rng)), param(randn(1, 5, rng)), param(randn(1, 5, rng))},
            [](std::span<const Tensor> in) { return ad::layer_norm(in[0], in[1], in[2]); }};
  }
  if (name == "sum")
    return unary_case([](const Tensor &x) { return ad::sum(x); }, randn(3, 4, rng));
  if (name == "sum_axis0")
    return unary_case([](const Tensor &x) { return ad::sum(x, 0); }, randn(3, 4, rng));
  if (name == "sum_axis1")
    return unary_case([](const Tensor &x) { return ad::sum(x, 1); }, randn(3, 4, rng));
  if (name == "mean")
    return unary_case([](const Tensor &x) { return ad::mean(x); }, randn(3, 4, rng));
  if (name == "mean_axis0")
    return unary_case([](const Tensor &x) { return ad::mean(x, 0); }, randn(3, 4, rng));
  if (name == "mean_axis1")
    return unary_case([](const Tensor &x) { return ad::mean(x, 1); }, randn(3, 4, rng));
  if (name == "concat_axis0")
    return binary_case([](const Tensor &a, const Tensor &b) { return ad::concat({a, b}, 0); }, randn(2, 4, rng),
                       randn(3, 4, rng));
  if (name == "concat_axis1")
    return binary_case([](const Tensor &a, const Tensor &b) { return ad::concat({a, b}, 1); }, randn(3, 2, rng),
                       randn(3, 4, rng));
  if (name == "index_select") {
    const std::vector<ad::Index> rows{2, 0, 2, 1};
    return unary_case([rows](const Tensor &x) { return ad::index_select(x, rows); }, randn(3, 4, rng));
  }
  if (name == "index_add") {
    const std::vector<ad::Index> rows{1, 0, 1, 3, 1};
    return unary_case([rows](const Tensor &x) { return ad::index_add(x, rows, 4); }, randn(5, 3, rng));
  }
  if (name == "reshape")
    return unary_case([](const Tensor &x) { return ad::reshape(x, 2, 6); }, randn(3, 4, rng));
  if (name == "element")
    return unary_case([](const Tensor &x) { return ad::element(x, 1, 2); }, randn(3, 4, rng));
  if (name == "transpose")
    return unary_case(ad::transpose, randn(3, 4, rng));

  if (name == "gated_gcn_layer") {
    auto store = std::make_shared<ParamStore>();
    EncoderConfig cfg;
    cfg.hidden_dim = 3;
    cfg.n_layers = 1;
    init_encoder_params(*store, cfg, 2, rng, "enc");
    const auto edges = std::make_shared<GraphEdges>(GraphEdges::complete(4));
    const Tensor h = param(randn(4, 3, rng));
    const Tensor e = param(randn(edges->size(), 3, rng));
    return store_case(*store, {h, e}, [store, edges, h, e] {
      return gated_gcn_layer({h, e}, *edges, *store, "enc.layer0", true).h;
    });
  }
  if (name == "gat_layer") {
    auto store = std::make_shared<ParamStore>();
    EncoderConfig cfg;
    cfg.kind = EncoderConfig::Kind::GAT;
    cfg.hidden_dim = 4;
    cfg.n_layers = 1;
    cfg.n_heads = 2;
    init_encoder_params(*store, cfg, 2, rng, "enc");
    Eigen::MatrixXd w = positive(4, 4, rng);
    w.diagonal().setZero();
    const Tensor h = param(randn(4, 4, rng));
    return store_case(*store, {h}, [store, w, h] { return gat_layer(h, w, *store, "enc.layer0", 2, true); });
  }
  if (name == "distance_encode") {
    auto store = std::make_shared<ParamStore>();
    DistanceEncodingConfig cfg;
    cfg.k = 2;
    cfg.transform_hidden = 4;
    init_distance_encoding_params(*store, cfg, rng, "de");
    Eigen::MatrixXd d = positive(5, 5, rng);
    d = (d + d.transpose()).eval();
    d.diagonal().setZero();
    return store_case(*store, {}, [store, d, cfg] { return distance_encode(d, cfg, *store, "de"); });
  }
  if (name == "rollout_log_prob") {
    const Scenario s = generate_scenario(ScenarioConfig::for_size(3, rng()));
    PolicyConfig cfg;
    cfg.encoder.hidden_dim = 8;
    cfg.encoder.n_layers = 1;
    cfg.decoder.glimpse_heads = 2;
    auto policy = std::make_shared<Policy>(cfg, rng());
    const auto actions = rollout(s, policy->snapshot(), Sampling::sample(rng())).flat_actions();
    return store_case(policy->params(), {}, [policy, s, actions] {
      return rollout(s, *policy, Sampling::replay(actions)).total_log_prob;
    });
  }
  throw ContractViolation("unknown grad-check case '" + name + "'");
}

} // namespace

std::vector<std::string> gradcheck_case_names() {
  return {"matmul",       "add",          "add_broadcast",
          "sub",          "sub_broadcast", "mul",
          "mul_broadcast", "div",         "scale",
          "add_scalar",   "neg",          "relu",
          "sigmoid",      "tanh",         "exp",
          "log",          "row_softmax",  "masked_row_softmax",
          "masked_row_log_softmax", "layer_norm", "sum",
          "sum_axis0",    "sum_axis1",    "mean",
          "mean_axis0",   "mean_axis1",   "concat_axis0",
          "concat_axis1", "index_select", "index_add",
          "reshape",      "element",      "transpose",
          "gated_gcn_layer", "gat_layer", "distance_encode",
          "rollout_log_prob"};
}

GradCheckCase run_gradcheck_case(const std::string &name, std::uint64_t seed, double tolerance) {
  std::mt19937_64 rng(mix_seed(seed, std::hash<std::string>{}(name)));
  Setup setup = make_setup(name, rng);
  // Weight every output entry by a random constant so each coordinate gets a distinct gradient.
  const Tensor probe = setup.f(setup.inputs);
  const Tensor weights = Tensor::constant(randn(probe.rows(), probe.cols(), rng));
  const Fn inner = setup.f;
  const Fn scalar = [inner, weights](std::span<const Tensor> in) { return ad::sum(ad::mul(inner(in), weights)); };
  GradCheckCase out{name, seed, ad::grad_check(scalar, setup.inputs, tolerance)};
  return out;
}

std::vector<GradCheckCase> run_gradcheck_suite(int n_seeds, double tolerance) {
  std::vector<GradCheckCase> out;
  for (const auto &name : gradcheck_case_names())
    for (int s = 0; s < n_seeds; ++s)
      out.push_back(run_gradcheck_case(name, static_cast<std::uint64_t>(s), tolerance));
  return out;
}

} // namespace rrm
