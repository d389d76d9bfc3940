#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "grabnel/dataset.hpp"
#include "grabnel/errors.hpp"
#include "grabnel/gcn.hpp"
#include "grabnel/victim.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace grabnel;

namespace {

GCNWeights random_weights(std::size_t input, std::size_t classes, std::size_t hidden, std::size_t degree,
                          GCNPooling pooling, std::mt19937_64& rng) {
  GCNWeights w = GCNWeights::zeros(input, classes, hidden, degree, pooling);
  std::normal_distribution<double> z(0.0, 0.6);
  for (auto& l : w.layers) l = l.unaryExpr([&](double) { return z(rng); });
  for (auto& b : w.layer_bias) b = b.unaryExpr([&](double) { return z(rng); });
  w.readout = w.readout.unaryExpr([&](double) { return z(rng); });
  w.bias = w.bias.unaryExpr([&](double) { return z(rng); });
  return w;
}

std::vector<double*> parameters(GCNWeights& w) {
  std::vector<double*> out;
  auto add = [&](auto& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) out.push_back(m.data() + i);
  };
  for (auto& l : w.layers) add(l);
  for (auto& b : w.layer_bias) add(b);
  add(w.readout);
  add(w.bias);
  return out;
}

double cross_entropy(const Graph& g, int label, const GCNWeights& w) {
  return -std::log(gcn_forward(g, w).class_scores[static_cast<std::size_t>(label)]);
}

}  // namespace

TEST_CASE("softmax") {
  const std::vector<double> logits{1.0, 2.0, 3.0};
  const auto p = softmax(logits);
  CHECK(std::accumulate(p.begin(), p.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(p[2] / p[1] == doctest::Approx(std::exp(1.0)));
  const std::vector<double> huge{1000.0, 0.0};
  CHECK(softmax(huge)[0] == doctest::Approx(1.0));
  const std::vector<double> bad{1.0, NAN};
  CHECK_THROWS_AS(softmax(bad), SimplexViolation);

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> l(2 + rng() % 6);
    for (auto& x : l) x = u(rng);
    const auto q = softmax(l);
    CHECK(std::abs(std::accumulate(q.begin(), q.end(), 0.0) - 1.0) < 1e-9);
  }
}

TEST_CASE("score validation") {
  CHECK(validate_scores({0.2, 0.8}).class_scores == std::vector<double>{0.2, 0.8});
  const auto renorm = validate_scores({0.2, 0.7995});
  CHECK(renorm.class_scores[0] + renorm.class_scores[1] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_THROWS_AS(validate_scores({0.2, 0.9}), SimplexViolation);
  CHECK_THROWS_AS(validate_scores({-0.1, 1.1}), SimplexViolation);
  CHECK_THROWS_AS(validate_scores({}), SimplexViolation);
  CHECK(validate_scores({0.1, 0.6, 0.3}).argmax() == 1);
}

TEST_CASE("query counter counts transmissions, including failed replies") {
  int calls = 0;
  CallbackSession s([&](const Graph&) -> std::vector<double> {
    if (++calls % 2 == 0) return {0.5, 0.7};
    return {0.5, 0.5};
  });
  const Graph g = Graph::unlabeled(2, {});
  for (int k = 0; k < 6; ++k) {
    try {
      s.query(g);
    } catch (const SimplexViolation&) {
    }
    CHECK(s.queries() == static_cast<std::size_t>(k + 1));
  }
}

TEST_CASE("zero weights give uniform scores") {
  const GCNWeights w = GCNWeights::zeros(2, 4);
  const auto r = gcn_forward(Graph(3, {{0, 1}}, DiscreteLabels{0, 1, 1}), w);
  for (double p : r.class_scores) CHECK(p == doctest::Approx(0.25));
}

TEST_CASE("single node follows the plain MLP path") {
  std::mt19937_64 rng(2);
  for (auto pooling : {GCNPooling::Max, GCNPooling::Sum}) {
    const GCNWeights w = random_weights(3, 2, 5, 0, pooling, rng);
    const Graph g(1, {}, DiscreteLabels{2});
    Eigen::RowVectorXd x = Eigen::RowVectorXd::Zero(3);
    x[2] = 1.0;
    for (int l = 0; l < 3; ++l) x = (x * w.layers[static_cast<std::size_t>(l)] + w.layer_bias[static_cast<std::size_t>(l)].transpose()).cwiseMax(0.0);
    const Eigen::VectorXd expected = (x * w.readout).transpose() + w.bias;
    CHECK((gcn_logits(g, w) - expected).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("normalised adjacency") {
  const Graph path = Graph::unlabeled(3, {{0, 1}, {1, 2}});
  const auto a = normalised_adjacency(path);
  CHECK(a(0, 0) == doctest::Approx(0.5));
  CHECK(a(0, 1) == doctest::Approx(1.0 / std::sqrt(6.0)));
  CHECK(a(1, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(a(0, 2) == 0.0);
  CHECK((a - a.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("degree features") {
  const Graph star = Graph::unlabeled(4, {{0, 1}, {0, 2}, {0, 3}});
  const auto x = gcn_input(star, 1, 3);
  REQUIRE(x.cols() == 4);
  CHECK(x(0, 3) == 1.0);  // degree 3 clipped to bucket 2
  CHECK(x(1, 2) == 1.0);
  CHECK(x.rowwise().sum().minCoeff() == 2.0);
}

TEST_CASE("scores are invariant to node order") {
  std::mt19937_64 rng(3);
  for (auto pooling : {GCNPooling::Max, GCNPooling::Sum}) {
    const GCNWeights w = random_weights(3, 3, 8, 4, pooling, rng);
    for (int t = 0; t < 100; ++t) {
      const Graph g = oracle::random_graph(2 + rng() % 12, 0.3, 3, rng);
      std::vector<NodeId> perm(g.num_nodes());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng);
      const auto a = gcn_forward(g, w).class_scores;
      const auto b = gcn_forward(oracle::permute(g, perm), w).class_scores;
      for (std::size_t c = 0; c < a.size(); ++c) CHECK(a[c] == doctest::Approx(b[c]).epsilon(1e-12));
    }
  }
}

TEST_CASE("shape mismatch") {
  const GCNWeights w = GCNWeights::zeros(2, 2);
  CHECK_THROWS_AS(gcn_forward(Graph(2, {}, DiscreteLabels{0, 5}), w), ShapeMismatch);
  CHECK_THROWS_AS(gcn_forward(Graph(1, {}, ContinuousFeatures{3, {1, 2, 3}}), w), ShapeMismatch);
  GCNWeights broken = w;
  broken.readout.resize(3, 2);
  CHECK_THROWS_AS(broken.validate(), ShapeMismatch);
  broken = w;
  broken.bias[0] = NAN;
  CHECK_THROWS_AS(broken.validate(), DivergenceError);
}

TEST_CASE("analytic gradient matches finite differences") {
  std::mt19937_64 rng(4);
  for (auto pooling : {GCNPooling::Sum, GCNPooling::Max}) {
    for (int t = 0; t < 5; ++t) {
      GCNWeights w = random_weights(3, 3, 6, 3, pooling, rng);
      const Graph g = oracle::random_graph(3 + rng() % 6, 0.4, 3, rng);
      const int label = static_cast<int>(rng() % 3);
      GCNWeights grad;
      const double loss = gcn_loss_and_gradient(g, label, w, grad);
      CHECK(loss == doctest::Approx(cross_entropy(g, label, w)).epsilon(1e-12));
      auto params = parameters(w);
      auto grads = parameters(grad);
      REQUIRE(params.size() == grads.size());
      std::size_t checked = 0;
      std::size_t close = 0;
      for (std::size_t i = 0; i < params.size(); ++i) {
        const double keep = *params[i];
        const double h = 1e-6;
        *params[i] = keep + h;
        const double up = cross_entropy(g, label, w);
        *params[i] = keep - h;
        const double down = cross_entropy(g, label, w);
        *params[i] = keep;
        const double numeric = (up - down) / (2 * h);
        ++checked;
        // ReLU and max-pooling kinks can break the difference quotient for an odd entry.
        if (std::abs(numeric - *grads[i]) < 1e-5 * std::max(1.0, std::abs(numeric))) ++close;
      }
      CHECK(close >= checked - checked / 100);
    }
  }
}

TEST_CASE("training is deterministic and learns a trivial task") {
  ERGenConfig er;
  er.seed = 3;
  LabeledDataset ds = generate_er_dataset(er, 60);
  GCNTrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 11;
  const auto a = train_gcn(ds, cfg);
  const auto b = train_gcn(ds, cfg);
  CHECK(a.weights == b.weights);
  CHECK(a.history.size() == 3);

  for (auto& l : ds.labels) l = 0;
  ds.num_classes = 1;
  const auto one = train_gcn(ds, cfg);
  CHECK(gcn_accuracy(ds, ds.split.test, one.weights) == 1.0);

  LabeledDataset empty = ds;
  empty.split.train.clear();
  CHECK_THROWS_AS(train_gcn(empty, cfg), EmptyInput);
}

TEST_CASE("weights JSON round-trip") {
  std::mt19937_64 rng(5);
  const GCNWeights w = random_weights(4, 3, 7, 2, GCNPooling::Sum, rng);
  CHECK(gcn_weights_from_json(gcn_weights_to_json(w)) == w);
  TempDir dir;
  save_gcn_weights(w, dir / "w.json");
  CHECK(load_gcn_weights(dir / "w.json") == w);
  CHECK_THROWS(gcn_weights_from_json("{\"layers\": 3}"));
}

TEST_CASE("in-process session is bitwise gcn_forward") {
  std::mt19937_64 rng(6);
  auto w = std::make_shared<const GCNWeights>(random_weights(2, 2, 4, 0, GCNPooling::Max, rng));
  GCNSession s(w);
  for (int t = 0; t < 20; ++t) {
    const Graph g = oracle::random_graph(1 + rng() % 8, 0.4, 2, rng);
    CHECK(s.query(g).class_scores == gcn_forward(g, *w).class_scores);
  }
  CHECK(s.queries() == 20);
}
