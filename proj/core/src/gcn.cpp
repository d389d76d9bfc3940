#include "grabnel/gcn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "grabnel/errors.hpp"
#include "json_internal.hpp"

namespace grabnel {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string to_string(GCNPooling p) { return p == GCNPooling::Max ? "max" : "sum"; }

GCNPooling parse_gcn_pooling(const std::string& text) {
  if (text == "max") return GCNPooling::Max;
  if (text == "sum") return GCNPooling::Sum;
  throw InvalidConfig("unknown pooling '" + text + "' (expected max or sum)");
}

GCNWeights GCNWeights::zeros(std::size_t input_dim, std::size_t num_classes, std::size_t hidden,
                             std::size_t degree_features, GCNPooling pooling) {
  GCNWeights w;
  w.input_dim = input_dim;
  w.degree_features = degree_features;
  w.pooling = pooling;
  w.num_classes = num_classes;
  const auto h = static_cast<Index>(hidden);
  w.layers = {MatrixXd::Zero(static_cast<Index>(input_dim + degree_features), h), MatrixXd::Zero(h, h), MatrixXd::Zero(h, h)};
  w.layer_bias.assign(3, VectorXd::Zero(h));
  w.readout = MatrixXd::Zero(h, static_cast<Index>(num_classes));
  w.bias = VectorXd::Zero(static_cast<Index>(num_classes));
  return w;
}

void GCNWeights::validate() const {
  if (layers.size() != 3) throw ShapeMismatch("expected three convolution layers");
  const Index h = layers[0].cols();
  if (layers[0].rows() != static_cast<Index>(input_dim + degree_features)) throw ShapeMismatch("first layer does not match input_dim");
  for (std::size_t i = 1; i < 3; ++i) {
    if (layers[i].rows() != h || layers[i].cols() != h) throw ShapeMismatch("hidden layers must be square");
  }
  if (layer_bias.size() != 3) throw ShapeMismatch("expected three convolution biases");
  for (const auto& b : layer_bias) {
    if (b.size() != h) throw ShapeMismatch("convolution bias length differs from hidden size");
  }
  if (readout.rows() != h || readout.cols() != static_cast<Index>(num_classes)) {
    throw ShapeMismatch("readout shape does not match hidden size and class count");
  }
  if (bias.size() != static_cast<Index>(num_classes)) throw ShapeMismatch("bias length differs from class count");
  if (num_classes == 0) throw ShapeMismatch("classifier needs at least one class");
  bool finite = readout.allFinite() && bias.allFinite();
  for (const auto& l : layers) finite = finite && l.allFinite();
  for (const auto& b : layer_bias) finite = finite && b.allFinite();
  if (!finite) throw DivergenceError("non-finite weight");
}

bool GCNWeights::operator==(const GCNWeights& o) const {
  if (input_dim != o.input_dim || degree_features != o.degree_features || pooling != o.pooling ||
      num_classes != o.num_classes || layers.size() != o.layers.size()) return false;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].rows() != o.layers[i].rows() || layers[i].cols() != o.layers[i].cols() ||
        layers[i] != o.layers[i] || layer_bias[i] != o.layer_bias[i]) {
      return false;
    }
  }
  return readout.rows() == o.readout.rows() && readout.cols() == o.readout.cols() &&
         readout == o.readout && bias.size() == o.bias.size() && bias == o.bias;
}

MatrixXd normalised_adjacency(const Graph& g) {
  const auto n = static_cast<Index>(g.num_nodes());
  MatrixXd a = MatrixXd::Identity(n, n);
  const auto& edges = g.edges();
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const double w = g.is_weighted() ? g.weights()[i] : 1.0;
    a(edges[i].u, edges[i].v) = w;
    a(edges[i].v, edges[i].u) = w;
  }
  const VectorXd inv_sqrt = a.rowwise().sum().cwiseSqrt().cwiseInverse();
  return inv_sqrt.asDiagonal() * a * inv_sqrt.asDiagonal();
}

MatrixXd gcn_input(const Graph& g, std::size_t input_dim, std::size_t degree_features) {
  const auto n = static_cast<Index>(g.num_nodes());
  MatrixXd x = MatrixXd::Zero(n, static_cast<Index>(input_dim + degree_features));
  if (degree_features > 0) {
    const auto cap = static_cast<Index>(degree_features) - 1;
    for (Index v = 0; v < n; ++v) {
      x(v, static_cast<Index>(input_dim) + std::min<Index>(cap, static_cast<Index>(g.degree(static_cast<NodeId>(v))))) = 1.0;
    }
  }
  if (g.has_discrete_labels()) {
    const auto& labels = g.labels();
    for (Index v = 0; v < n; ++v) {
      const auto label = labels[static_cast<std::size_t>(v)];
      if (label < 0 || static_cast<std::size_t>(label) >= input_dim) {
        throw ShapeMismatch("node label " + std::to_string(label) + " outside the one-hot input of size " +
                            std::to_string(input_dim));
      }
      x(v, static_cast<Index>(label)) = 1.0;
    }
    return x;
  }
  const auto& f = g.features();
  if (f.dim != input_dim) {
    throw ShapeMismatch("node feature dimension " + std::to_string(f.dim) + " differs from input size " +
                        std::to_string(input_dim));
  }
  const auto dim = static_cast<Index>(f.dim);
  for (Index v = 0; v < n; ++v) {
    for (Index k = 0; k < dim; ++k) x(v, k) = f.values[static_cast<std::size_t>(v * dim + k)];
  }
  return x;
}

namespace {

struct Pass {
  std::vector<MatrixXd> propagated;  // A_hat * H_{l-1}
  std::vector<MatrixXd> hidden;      // H_0 (input) .. H_3
  VectorXd pooled;
  std::vector<Index> pool_arg;  // node holding each column maximum
  VectorXd logits;
};

Pass forward(const MatrixXd& a_hat, const MatrixXd& x, const GCNWeights& w) {
  Pass p;
  p.hidden.push_back(x);
  for (std::size_t l = 0; l < w.layers.size(); ++l) {
    p.propagated.push_back(a_hat * p.hidden.back());
    MatrixXd z = p.propagated.back() * w.layers[l];
    z.rowwise() += w.layer_bias[l].transpose();
    p.hidden.push_back(z.cwiseMax(0.0));
  }
  const MatrixXd& top = p.hidden.back();
  const Index h = top.cols();
  p.pooled = VectorXd::Zero(h);
  p.pool_arg.assign(static_cast<std::size_t>(h), -1);
  if (w.pooling == GCNPooling::Sum) {
    p.pooled = top.colwise().sum().transpose();
    p.logits = w.readout.transpose() * p.pooled + w.bias;
    return p;
  }
  for (Index c = 0; c < h; ++c) {
    for (Index v = 0; v < top.rows(); ++v) {
      if (p.pool_arg[static_cast<std::size_t>(c)] < 0 || top(v, c) > p.pooled(c)) {
        p.pooled(c) = top(v, c);
        p.pool_arg[static_cast<std::size_t>(c)] = v;
      }
    }
  }
  p.logits = w.readout.transpose() * p.pooled + w.bias;
  return p;
}

void check_input(const Graph& g, const GCNWeights& w) {
  if (w.layers.size() != 3) throw ShapeMismatch("expected three convolution layers");
  if (!g.has_discrete_labels() && g.features().dim != w.input_dim) {
    throw ShapeMismatch("node feature dimension differs from the first layer");
  }
}

double cross_entropy_grad(const MatrixXd& a_hat, const MatrixXd& x, int label, const GCNWeights& w,
                          GCNWeights& grad) {
  const Pass p = forward(a_hat, x, w);
  const double top = p.logits.maxCoeff();
  const VectorXd e = (p.logits.array() - top).exp().matrix();
  const double z = e.sum();
  VectorXd dlogits = e / z;
  const double loss = -(p.logits(label) - top - std::log(z));
  dlogits(label) -= 1.0;

  grad.readout += p.pooled * dlogits.transpose();
  grad.bias += dlogits;
  const VectorXd dpooled = w.readout * dlogits;

  MatrixXd dh = MatrixXd::Zero(p.hidden.back().rows(), p.hidden.back().cols());
  if (w.pooling == GCNPooling::Sum) {
    dh.rowwise() = dpooled.transpose();
  } else {
    for (Index c = 0; c < dh.cols(); ++c) {
      const Index v = p.pool_arg[static_cast<std::size_t>(c)];
      if (v >= 0) dh(v, c) += dpooled(c);
    }
  }
  for (std::size_t l = 3; l-- > 0;) {
    const MatrixXd dz = (p.hidden[l + 1].array() > 0.0).select(dh, 0.0);
    grad.layers[l] += p.propagated[l].transpose() * dz;
    grad.layer_bias[l] += dz.colwise().sum().transpose();
    if (l > 0) dh = a_hat.transpose() * (dz * w.layers[l].transpose());
  }
  return loss;
}

GCNWeights zeros_like(const GCNWeights& w) {
  return GCNWeights::zeros(w.input_dim, w.num_classes, w.hidden(), w.degree_features, w.pooling);
}

template <typename F>
void for_each_param(GCNWeights& a, GCNWeights& b, GCNWeights& c, GCNWeights& d, F&& f) {
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    f(a.layers[i], b.layers[i], c.layers[i], d.layers[i]);
    Eigen::Map<MatrixXd> ab(a.layer_bias[i].data(), a.layer_bias[i].size(), 1),
        bb(b.layer_bias[i].data(), b.layer_bias[i].size(), 1), cb(c.layer_bias[i].data(), c.layer_bias[i].size(), 1),
        db(d.layer_bias[i].data(), d.layer_bias[i].size(), 1);
    f(ab, bb, cb, db);
  }
  f(a.readout, b.readout, c.readout, d.readout);
  Eigen::Map<MatrixXd> ab(a.bias.data(), a.bias.size(), 1), bb(b.bias.data(), b.bias.size(), 1),
      cb(c.bias.data(), c.bias.size(), 1), db(d.bias.data(), d.bias.size(), 1);
  f(ab, bb, cb, db);
}

MatrixXd glorot(Index rows, Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  MatrixXd m(rows, cols);
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) m(i, j) = dist(rng);
  }
  return m;
}

}  // namespace

VectorXd gcn_logits(const Graph& g, const GCNWeights& w) {
  check_input(g, w);
  return forward(normalised_adjacency(g), gcn_input(g, w.input_dim, w.degree_features), w).logits;
}

VictimResponse gcn_forward(const Graph& g, const GCNWeights& w) {
  const VectorXd logits = gcn_logits(g, w);
  return VictimResponse{softmax(std::span<const double>(logits.data(), static_cast<std::size_t>(logits.size())))};
}

double gcn_loss_and_gradient(const Graph& g, int label, const GCNWeights& w, GCNWeights& grad) {
  check_input(g, w);
  if (label < 0 || static_cast<std::size_t>(label) >= w.num_classes) throw ShapeMismatch("label outside class range");
  grad = zeros_like(w);
  return cross_entropy_grad(normalised_adjacency(g), gcn_input(g, w.input_dim, w.degree_features), label, w, grad);
}

std::size_t infer_input_dim(const LabeledDataset& ds) {
  if (ds.graphs.empty()) return 1;
  if (!ds.graphs.front().has_discrete_labels()) return ds.graphs.front().features().dim;
  std::int64_t top = 0;
  for (const auto& g : ds.graphs) {
    for (auto label : g.labels()) top = std::max(top, label);
  }
  return static_cast<std::size_t>(top) + 1;
}

double gcn_accuracy(const LabeledDataset& ds, std::span<const std::size_t> indices, const GCNWeights& w) {
  if (indices.empty()) return 0.0;
  std::size_t correct = 0;
  for (auto i : indices) {
    const VectorXd logits = gcn_logits(ds.graphs[i], w);
    Index best = 0;
    logits.maxCoeff(&best);
    if (best == ds.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(indices.size());
}

GCNTrainResult train_gcn(const LabeledDataset& ds, const GCNTrainConfig& cfg, const EpochCallback& on_epoch) {
  const auto& train = ds.split.train;
  if (train.empty()) throw EmptyInput("training split is empty");
  if (cfg.batch_size == 0 || cfg.epochs < 0 || cfg.hidden == 0) throw InvalidConfig("bad training hyperparameters");

  std::mt19937_64 rng(cfg.seed);
  const std::size_t input_dim = cfg.input_dim ? cfg.input_dim : infer_input_dim(ds);
  const auto h = static_cast<Index>(cfg.hidden);
  GCNWeights w = GCNWeights::zeros(input_dim, static_cast<std::size_t>(std::max(ds.num_classes, 1)), cfg.hidden,
                                   cfg.degree_features, cfg.pooling);
  w.layers[0] = glorot(static_cast<Index>(input_dim + cfg.degree_features), h, rng);
  w.layers[1] = glorot(h, h, rng);
  w.layers[2] = glorot(h, h, rng);
  w.readout = glorot(h, static_cast<Index>(w.num_classes), rng);

  std::vector<MatrixXd> a_hat(ds.size()), inputs(ds.size());
  for (auto i : train) {
    a_hat[i] = normalised_adjacency(ds.graphs[i]);
    inputs[i] = gcn_input(ds.graphs[i], input_dim, cfg.degree_features);
  }

  GCNWeights m = zeros_like(w), v = zeros_like(w), grad = zeros_like(w);
  GCNTrainResult result;
  result.weights = w;
  result.best_validation_accuracy = -1.0;
  std::vector<std::size_t> order(train.begin(), train.end());
  long step = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      grad = zeros_like(w);
      for (std::size_t k = start; k < end; ++k) {
        const auto i = order[k];
        loss_sum += cross_entropy_grad(a_hat[i], inputs[i], ds.labels[i], w, grad);
      }
      if (!std::isfinite(loss_sum)) throw DivergenceError("training loss became non-finite at epoch " + std::to_string(epoch));
      const double scale = 1.0 / static_cast<double>(end - start);
      ++step;
      const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
      for_each_param(w, grad, m, v, [&](auto& param, auto& g, auto& mom, auto& vel) {
        const MatrixXd gs = g * scale;
        mom = cfg.beta1 * mom + (1.0 - cfg.beta1) * gs;
        vel = cfg.beta2 * vel + (1.0 - cfg.beta2) * gs.cwiseProduct(gs);
        param.array() -= cfg.learning_rate * (mom.array() / c1) / ((vel.array() / c2).sqrt() + cfg.epsilon);
      });
    }

    EpochStats stats;
    stats.train_loss = loss_sum / static_cast<double>(order.size());
    stats.train_accuracy = gcn_accuracy(ds, train, w);
    stats.validation_accuracy = gcn_accuracy(ds, ds.split.validation, w);
    result.history.push_back(stats);
    if (on_epoch) on_epoch(epoch, stats);
    if (ds.split.validation.empty() || stats.validation_accuracy > result.best_validation_accuracy) {
      result.best_validation_accuracy = stats.validation_accuracy;
      result.best_epoch = epoch;
      result.weights = w;
    }
  }
  if (result.best_validation_accuracy < 0.0) result.best_validation_accuracy = 0.0;
  return result;
}

namespace {

using detail::ordered_json;

ordered_json matrix_json(const MatrixXd& m) {
  ordered_json rows = ordered_json::array();
  for (Index i = 0; i < m.rows(); ++i) {
    ordered_json row = ordered_json::array();
    for (Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

MatrixXd json_matrix(const ordered_json& v, Index rows, Index cols, const std::string& path) {
  const auto& arr = detail::as_array(v, path);
  if (static_cast<Index>(arr.size()) != rows) throw ShapeMismatch(path + ": expected " + std::to_string(rows) + " rows");
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const std::string rp = path + "/" + std::to_string(i);
    const auto& row = detail::as_array(arr[static_cast<std::size_t>(i)], rp);
    if (static_cast<Index>(row.size()) != cols) throw ShapeMismatch(rp + ": expected " + std::to_string(cols) + " columns");
    for (Index j = 0; j < cols; ++j) m(i, j) = detail::as_double(row[static_cast<std::size_t>(j)], rp + "/" + std::to_string(j));
  }
  return m;
}

}  // namespace

std::string gcn_weights_to_json(const GCNWeights& w) {
  w.validate();
  ordered_json j;
  j["input_dim"] = w.input_dim;
  j["degree_features"] = w.degree_features;
  j["pooling"] = to_string(w.pooling);
  j["num_classes"] = w.num_classes;
  j["hidden"] = w.hidden();
  ordered_json layers = ordered_json::array();
  for (const auto& l : w.layers) layers.push_back(matrix_json(l));
  j["layers"] = std::move(layers);
  ordered_json biases = ordered_json::array();
  for (const auto& b : w.layer_bias) biases.push_back(std::vector<double>(b.data(), b.data() + b.size()));
  j["layer_bias"] = std::move(biases);
  j["readout"] = matrix_json(w.readout);
  j["bias"] = ordered_json(std::vector<double>(w.bias.data(), w.bias.data() + w.bias.size()));
  return j.dump() + "\n";
}

GCNWeights gcn_weights_from_json(const std::string& text) {
  const auto j = detail::parse_json(text);
  const auto in = static_cast<std::size_t>(detail::as_int(detail::member(j, "input_dim", ""), "/input_dim"));
  const auto classes = static_cast<std::size_t>(detail::as_int(detail::member(j, "num_classes", ""), "/num_classes"));
  const auto hidden = static_cast<Index>(detail::as_int(detail::member(j, "hidden", ""), "/hidden"));
  const auto degree = static_cast<std::size_t>(detail::as_int(detail::member(j, "degree_features", ""), "/degree_features"));
  const auto& pool = detail::member(j, "pooling", "");
  if (!pool.is_string()) throw DecodeError("/pooling: expected string");
  GCNWeights w = GCNWeights::zeros(in, classes, static_cast<std::size_t>(hidden), degree,
                                   parse_gcn_pooling(pool.get<std::string>()));
  const auto& layers = detail::as_array(detail::member(j, "layers", ""), "/layers");
  if (layers.size() != 3) throw ShapeMismatch("/layers: expected three matrices");
  for (std::size_t l = 0; l < 3; ++l) {
    w.layers[l] = json_matrix(layers[l], l == 0 ? static_cast<Index>(in + degree) : hidden, hidden, "/layers/" + std::to_string(l));
  }
  const auto& biases = detail::as_array(detail::member(j, "layer_bias", ""), "/layer_bias");
  if (biases.size() != 3) throw ShapeMismatch("/layer_bias: expected three vectors");
  for (std::size_t l = 0; l < 3; ++l) {
    w.layer_bias[l] = json_matrix(ordered_json::array({biases[l]}), 1, hidden, "/layer_bias/" + std::to_string(l)).row(0).transpose();
  }
  w.readout = json_matrix(detail::member(j, "readout", ""), hidden, static_cast<Index>(classes), "/readout");
  const auto& bias = detail::as_array(detail::member(j, "bias", ""), "/bias");
  if (bias.size() != classes) throw ShapeMismatch("/bias: expected " + std::to_string(classes) + " entries");
  for (std::size_t c = 0; c < classes; ++c) w.bias(static_cast<Index>(c)) = detail::as_double(bias[c], "/bias/" + std::to_string(c));
  w.validate();
  return w;
}

void save_gcn_weights(const GCNWeights& w, const std::filesystem::path& path) {
  detail::write_file(path.string(), gcn_weights_to_json(w));
}

GCNWeights load_gcn_weights(const std::filesystem::path& path) {
  return gcn_weights_from_json(detail::read_file(path.string()));
}

}  // namespace grabnel
