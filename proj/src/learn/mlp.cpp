#include "triage/learn/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "triage/common/error.hpp"
#include "triage/common/random.hpp"

namespace triage::learn {

namespace {

void check_shapes(const Mlp& m) {
  const auto& l = m.layout;
  if (m.w1.size() != l.hidden_dim * l.input_dim || m.b1.size() != l.hidden_dim ||
      m.w2.size() != l.output_dim * l.hidden_dim || m.b2.size() != l.output_dim || l.output_dim == 0)
    throw Error(ErrorCode::DimensionMismatch, "parameters do not match the layout");
}

void check_input(const Mlp& m, const std::vector<double>& x) {
  if (x.size() != m.layout.input_dim)
    throw Error(ErrorCode::DimensionMismatch, "input has " + std::to_string(x.size()) + " values, expected " +
                                                  std::to_string(m.layout.input_dim));
}

double sigmoid(double a) { return 1.0 / (1.0 + std::exp(-a)); }

// Hidden activations and output logits.
void run(const Mlp& m, const std::vector<double>& x, std::vector<double>& h, std::vector<double>& z) {
  const auto& l = m.layout;
  h.resize(l.hidden_dim);
  z.resize(l.output_dim);
  for (std::size_t j = 0; j < l.hidden_dim; ++j) {
    double a = m.b1[j];
    const double* w = &m.w1[j * l.input_dim];
    for (std::size_t i = 0; i < l.input_dim; ++i) a += w[i] * x[i];
    h[j] = sigmoid(a);
  }
  for (std::size_t o = 0; o < l.output_dim; ++o) {
    double a = m.b2[o];
    const double* w = &m.w2[o * l.hidden_dim];
    for (std::size_t j = 0; j < l.hidden_dim; ++j) a += w[j] * h[j];
    z[o] = a;
  }
}

// Softmax in place; returns log-sum-exp of the logits.
double softmax(std::vector<double>& z) {
  const double mx = *std::max_element(z.begin(), z.end());
  double sum = 0.0;
  for (auto& v : z) {
    v = std::exp(v - mx);
    sum += v;
  }
  for (auto& v : z) v /= sum;
  return mx + std::log(sum);
}

void check_label(const Mlp& m, int label) {
  if (label < 0 || static_cast<std::size_t>(label) >= m.layout.output_dim)
    throw Error(ErrorCode::DimensionMismatch, "label outside the output layer");
}

// Adds the example's gradient into g (parameters() order).
double accumulate(const Mlp& m, const std::vector<double>& x, int label, std::vector<double>& g,
                  std::vector<double>& h, std::vector<double>& z, std::vector<double>& dh) {
  const auto& l = m.layout;
  run(m, x, h, z);
  const double zl = z[static_cast<std::size_t>(label)];
  const double lse = softmax(z);
  z[static_cast<std::size_t>(label)] -= 1.0;  // dL/dlogits

  const std::size_t ow1 = 0, ob1 = ow1 + l.hidden_dim * l.input_dim, ow2 = ob1 + l.hidden_dim,
                    ob2 = ow2 + l.output_dim * l.hidden_dim;
  dh.assign(l.hidden_dim, 0.0);
  for (std::size_t o = 0; o < l.output_dim; ++o) {
    const double dz = z[o];
    g[ob2 + o] += dz;
    for (std::size_t j = 0; j < l.hidden_dim; ++j) {
      g[ow2 + o * l.hidden_dim + j] += dz * h[j];
      dh[j] += dz * m.w2[o * l.hidden_dim + j];
    }
  }
  for (std::size_t j = 0; j < l.hidden_dim; ++j) {
    const double da = dh[j] * h[j] * (1.0 - h[j]);
    g[ob1 + j] += da;
    for (std::size_t i = 0; i < l.input_dim; ++i) g[ow1 + j * l.input_dim + i] += da * x[i];
  }
  return lse - zl;
}

}  // namespace

Mlp Mlp::zeros(const Layout& layout) {
  Mlp m;
  m.layout = layout;
  m.w1.assign(layout.hidden_dim * layout.input_dim, 0.0);
  m.b1.assign(layout.hidden_dim, 0.0);
  m.w2.assign(layout.output_dim * layout.hidden_dim, 0.0);
  m.b2.assign(layout.output_dim, 0.0);
  return m;
}

Mlp Mlp::random(const Layout& layout, std::uint64_t seed) {
  Mlp m = zeros(layout);
  std::mt19937_64 rng(seed);
  for (auto* v : {&m.w1, &m.b1, &m.w2, &m.b2})
    for (auto& p : *v) p = uniform(rng, -0.5, 0.5);
  return m;
}

std::vector<double> Mlp::parameters() const {
  std::vector<double> out;
  out.reserve(layout.parameter_count());
  for (const auto* v : {&w1, &b1, &w2, &b2}) out.insert(out.end(), v->begin(), v->end());
  return out;
}

void Mlp::set_parameters(const std::vector<double>& flat) {
  if (flat.size() != layout.parameter_count())
    throw Error(ErrorCode::DimensionMismatch, "parameter vector has the wrong length");
  auto it = flat.begin();
  for (auto* v : {&w1, &b1, &w2, &b2}) {
    v->assign(it, it + static_cast<std::ptrdiff_t>(v->size()));
    it += static_cast<std::ptrdiff_t>(v->size());
  }
}

std::vector<double> forward(const Mlp& mlp, const std::vector<double>& x) {
  check_shapes(mlp);
  check_input(mlp, x);
  std::vector<double> h, z;
  run(mlp, x, h, z);
  softmax(z);
  return z;
}

std::size_t predict(const Mlp& mlp, const std::vector<double>& x) {
  const auto p = forward(mlp, x);
  return static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
}

double loss(const Mlp& mlp, const Dataset& data) {
  check_shapes(mlp);
  if (data.size() == 0) return 0.0;
  std::vector<double> h, z;
  double total = 0.0;
  for (std::size_t r = 0; r < data.size(); ++r) {
    check_input(mlp, data.inputs[r]);
    check_label(mlp, data.labels[r]);
    run(mlp, data.inputs[r], h, z);
    const double zl = z[static_cast<std::size_t>(data.labels[r])];
    total += softmax(z) - zl;
  }
  return total / static_cast<double>(data.size());
}

double accuracy(const Mlp& mlp, const Dataset& data) {
  if (data.size() == 0) return 0.0;
  std::size_t hits = 0;
  for (std::size_t r = 0; r < data.size(); ++r)
    hits += predict(mlp, data.inputs[r]) == static_cast<std::size_t>(data.labels[r]);
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

std::vector<double> gradient(const Mlp& mlp, const std::vector<double>& x, int label) {
  check_shapes(mlp);
  check_input(mlp, x);
  check_label(mlp, label);
  std::vector<double> g(mlp.layout.parameter_count(), 0.0), h, z, dh;
  accumulate(mlp, x, label, g, h, z, dh);
  return g;
}

TrainResult train_backprop(const Mlp& initial, const Dataset& data, int epochs, double learning_rate) {
  check_shapes(initial);
  for (std::size_t r = 0; r < data.size(); ++r) {
    check_input(initial, data.inputs[r]);
    check_label(initial, data.labels[r]);
  }
  TrainResult out{initial, {}};
  if (data.size() == 0) return out;
  const double scale = learning_rate / static_cast<double>(data.size());
  std::vector<double> g, h, z, dh;
  for (int e = 0; e < epochs; ++e) {
    g.assign(out.mlp.layout.parameter_count(), 0.0);
    for (std::size_t r = 0; r < data.size(); ++r) accumulate(out.mlp, data.inputs[r], data.labels[r], g, h, z, dh);
    auto it = g.begin();
    for (auto* v : {&out.mlp.w1, &out.mlp.b1, &out.mlp.w2, &out.mlp.b2})
      for (auto& p : *v) p -= scale * *it++;
    out.loss_curve.push_back(loss(out.mlp, data));
  }
  return out;
}

TrainResult train_backprop(const Layout& layout, const Dataset& data, int epochs, double learning_rate,
                           std::uint64_t seed) {
  return train_backprop(Mlp::random(layout, seed), data, epochs, learning_rate);
}

double numeric_gradient_check(const Mlp& mlp, const std::vector<double>& x, int label, double epsilon) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::InvalidParams, "epsilon must be > 0");
  const auto analytic = gradient(mlp, x, label);
  Dataset one;
  one.inputs = {x};
  one.labels = {label};
  auto params = mlp.parameters();
  Mlp probe = mlp;
  double worst = 0.0;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double keep = params[i];
    params[i] = keep + epsilon;
    probe.set_parameters(params);
    const double up = loss(probe, one);
    params[i] = keep - epsilon;
    probe.set_parameters(params);
    const double down = loss(probe, one);
    params[i] = keep;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double err = std::abs(analytic[i] - numeric) / std::max(1e-8, std::abs(analytic[i]) + std::abs(numeric));
    worst = std::max(worst, err);
  }
  return worst;
}

namespace {

nlohmann::json matrix(const std::vector<double>& flat, std::size_t rows, std::size_t cols) {
  nlohmann::json m = nlohmann::json::array();
  for (std::size_t r = 0; r < rows; ++r)
    m.push_back(std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(r * cols),
                                    flat.begin() + static_cast<std::ptrdiff_t>((r + 1) * cols)));
  return m;
}

std::vector<double> flatten(const nlohmann::json& m, std::size_t rows, std::size_t cols) {
  if (!m.is_array() || m.size() != rows) throw Error(ErrorCode::DimensionMismatch, "matrix row count mismatch");
  std::vector<double> out;
  for (const auto& row : m) {
    auto r = row.get<std::vector<double>>();
    if (r.size() != cols) throw Error(ErrorCode::DimensionMismatch, "matrix column count mismatch");
    out.insert(out.end(), r.begin(), r.end());
  }
  return out;
}

}  // namespace

nlohmann::json mlp_to_json(const Mlp& m) {
  const auto& l = m.layout;
  return {{"format_version", 1},
          {"layout", {{"input_dim", l.input_dim}, {"hidden_dim", l.hidden_dim}, {"output_dim", l.output_dim}}},
          {"activation", {{"hidden", "sigmoid"}, {"output", "softmax"}}},
          {"w1", matrix(m.w1, l.hidden_dim, l.input_dim)},
          {"b1", m.b1},
          {"w2", matrix(m.w2, l.output_dim, l.hidden_dim)},
          {"b2", m.b2}};
}

Mlp mlp_from_json(const nlohmann::json& j) {
  try {
    if (j.value("format_version", 0) != 1) throw Error(ErrorCode::ParseError, "unsupported model format version");
    Mlp m;
    const auto& l = j.at("layout");
    m.layout = {l.at("input_dim").get<std::size_t>(), l.at("hidden_dim").get<std::size_t>(),
                l.at("output_dim").get<std::size_t>()};
    m.w1 = flatten(j.at("w1"), m.layout.hidden_dim, m.layout.input_dim);
    m.b1 = j.at("b1").get<std::vector<double>>();
    m.w2 = flatten(j.at("w2"), m.layout.output_dim, m.layout.hidden_dim);
    m.b2 = j.at("b2").get<std::vector<double>>();
    check_shapes(m);
    for (const auto* v : {&m.w1, &m.b1, &m.w2, &m.b2})
      for (double p : *v)
        if (!std::isfinite(p)) throw Error(ErrorCode::ParseError, "non-finite model parameter");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("malformed model: ") + e.what());
  }
}

}  // namespace triage::learn
