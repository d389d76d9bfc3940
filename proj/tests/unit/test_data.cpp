#include <doctest.h>

#include <fstream>
#include <random>

#include "grabnel/algorithms.hpp"
#include "grabnel/dataset.hpp"
#include "grabnel/errors.hpp"
#include "grabnel/json_io.hpp"
#include "grabnel/tudataset.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"

using namespace grabnel;

namespace {

void write(const std::filesystem::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("ER generator respects the task definition") {
  ERGenConfig cfg;
  cfg.seed = 42;
  const LabeledDataset ds = generate_er_dataset(cfg, 300);
  REQUIRE(ds.size() == 300);
  CHECK(ds.num_classes == 3);
  std::vector<int> counts(3, 0);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Graph& g = ds.graphs[i];
    CHECK(g.num_nodes() >= 15);
    CHECK(g.num_nodes() <= 20);
    CHECK(oracle::dfs_components(g) == static_cast<std::size_t>(ds.labels[i] + 1));
    for (auto l : g.labels()) CHECK(l == g.labels()[0]);
    ++counts[static_cast<std::size_t>(ds.labels[i])];
  }
  for (int c : counts) CHECK(c >= 80);
  CHECK_NOTHROW(ds.validate());
  const auto& s = ds.split;
  CHECK(s.train.size() + s.validation.size() + s.test.size() == 300);

  const LabeledDataset again = generate_er_dataset(cfg, 300);
  CHECK(again.graphs == ds.graphs);
  CHECK(again.labels == ds.labels);
}

TEST_CASE("ER generator rejects bad configurations") {
  ERGenConfig cfg;
  cfg.edge_probability = 0.0;
  CHECK_THROWS(generate_er_dataset(cfg, 10));
  cfg = {};
  cfg.min_nodes = 30;
  cfg.max_nodes = 20;
  CHECK_THROWS(generate_er_dataset(cfg, 10));
  CHECK_THROWS(generate_er_dataset(ERGenConfig{}, 0));
}

TEST_CASE("TUDataset toy fixture") {
  TempDir dir;
  write(dir / "TOY_A.txt", "1, 2\n2, 1\n2, 3\n4, 5\n");
  write(dir / "TOY_graph_indicator.txt", "1\n1\n1\n2\n2\n");
  write(dir / "TOY_graph_labels.txt", "-1\n1\n");
  write(dir / "TOY_node_labels.txt", "3\n5\n3\n5\n5\n");
  const LabeledDataset ds = parse_tudataset(dir.path());
  REQUIRE(ds.size() == 2);
  CHECK(ds.labels == std::vector<int>{0, 1});
  CHECK(ds.num_classes == 2);
  CHECK(ds.graphs[0] == Graph(3, {{0, 1}, {1, 2}}, DiscreteLabels{0, 1, 0}));
  CHECK(ds.graphs[1] == Graph(2, {{0, 1}}, DiscreteLabels{1, 1}));
}

TEST_CASE("TUDataset rejects 0-indexed and inconsistent files") {
  TempDir dir;
  write(dir / "BAD_A.txt", "0, 1\n");
  write(dir / "BAD_graph_indicator.txt", "1\n1\n");
  write(dir / "BAD_graph_labels.txt", "0\n");
  CHECK_THROWS_AS(parse_tudataset(dir.path()), Error);

  TempDir d2;
  write(d2 / "X_A.txt", "1, 2\n");
  write(d2 / "X_graph_indicator.txt", "1\n3\n");
  write(d2 / "X_graph_labels.txt", "0\n");
  CHECK_THROWS_AS(parse_tudataset(d2.path()), InconsistentIndex);

  TempDir d3;
  write(d3 / "Y_A.txt", "1, two\n");
  write(d3 / "Y_graph_indicator.txt", "1\n1\n");
  write(d3 / "Y_graph_labels.txt", "0\n");
  CHECK_THROWS_AS(parse_tudataset(d3.path()), ParseError);
}

TEST_CASE("TUDataset continuous attributes and edge weights") {
  TempDir dir;
  write(dir / "C_A.txt", "1, 2\n2, 1\n");
  write(dir / "C_graph_indicator.txt", "1\n1\n");
  write(dir / "C_graph_labels.txt", "4\n");
  write(dir / "C_node_attributes.txt", "0.5, 1.5\n-2, 3\n");
  write(dir / "C_edge_attributes.txt", "0.25\n0.25\n");
  TUParseOptions opts;
  opts.use_edge_weights = true;
  const LabeledDataset ds = parse_tudataset(dir.path(), opts);
  REQUIRE(ds.size() == 1);
  const Graph& g = ds.graphs[0];
  CHECK_FALSE(g.has_discrete_labels());
  CHECK(g.features().dim == 2);
  CHECK(g.features().values == std::vector<double>{0.5, 1.5, -2, 3});
  CHECK(g.weight(0, 1) == 0.25);
}

TEST_CASE("TUDataset emitter round-trips") {
  ERGenConfig cfg;
  cfg.seed = 9;
  LabeledDataset ds = generate_er_dataset(cfg, 25);
  TempDir dir;
  write_tudataset(ds, dir.path(), "ER");
  const LabeledDataset back = parse_tudataset(dir.path());
  CHECK(back.graphs == ds.graphs);
  CHECK(back.labels == ds.labels);
}

TEST_CASE("graph JSON schema") {
  const Graph tri(3, {{0, 1}, {1, 2}, {0, 2}}, DiscreteLabels{0, 0, 1});
  CHECK(graph_to_json(tri) == R"({"num_nodes":3,"edges":[[0,1],[0,2],[1,2]],"node_labels":[0,0,1]})");
  CHECK(json_to_graph(R"({"num_nodes":3,"edges":[[0,1],[1,2],[0,2]],"node_labels":[0,0,1]})") == tri);

  const Graph cont = Graph(2, {{0, 1}}, ContinuousFeatures{2, {1.5, -2.0, 0.0, 0.1}});
  const std::string text = graph_to_json(cont);
  CHECK(text.find("node_features") != std::string::npos);
  CHECK(text.find("node_labels") == std::string::npos);
  CHECK(json_to_graph(text) == cont);

  const Graph w = Graph::weighted(2, {{0, 1}}, {0.1 + 0.2}, DiscreteLabels{0, 0});
  CHECK(json_to_graph(graph_to_json(w)).weight(0, 1) == 0.1 + 0.2);
}

TEST_CASE("graph JSON errors name the path") {
  auto message = [](const std::string& text) {
    try {
      json_to_graph(text);
    } catch (const DecodeError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("{").size() > 0);
  CHECK(message(R"({"num_nodes":2,"edges":[[0,"x"]],"node_labels":[0,0]})").find("/edges/0/1") != std::string::npos);
  CHECK(message(R"({"num_nodes":2,"edges":[],"node_labels":[0]})").size() > 0);
  CHECK(message(R"({"num_nodes":2,"edges":[],"node_labels":[0,0],"node_features":[[1],[2]]})").size() > 0);
  CHECK(message(R"({"num_nodes":2,"edges":[[0,0]],"node_labels":[0,0]})").size() > 0);
}

TEST_CASE("graph JSON round-trip property") {
  std::mt19937_64 rng(123);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 1 + rng() % 12;
    const Graph g = t % 2 ? oracle::random_graph(n, 0.3, 4, rng) : oracle::random_continuous_graph(n, 0.3, 3, rng);
    REQUIRE(json_to_graph(graph_to_json(g)) == g);
  }
}

TEST_CASE("perturbation JSON round-trip") {
  for (const Perturbation& p : std::vector<Perturbation>{Flip{0, 3}, Rewire{1, 2, 3}, Swap{4, 0, 2},
                                                         Inject{std::int64_t{2}, {0, 4}},
                                                         Inject{std::vector<double>{0.5, 1e-300}, {1}}}) {
    CHECK(json_to_perturbation(perturbation_to_json(p)) == p);
  }
}

TEST_CASE("dataset file round-trip") {
  ERGenConfig cfg;
  cfg.seed = 4;
  const LabeledDataset ds = generate_er_dataset(cfg, 30);
  TempDir dir;
  save_dataset(ds, dir / "d.json");
  const LabeledDataset back = load_dataset(dir / "d.json");
  CHECK(back.graphs == ds.graphs);
  CHECK(back.labels == ds.labels);
  CHECK(back.split.test == ds.split.test);
  CHECK(back.num_classes == ds.num_classes);
}

TEST_CASE("splits are disjoint and cover the dataset") {
  const auto s = make_split(101, 0.7, 0.15, 3);
  std::vector<int> seen(101, 0);
  for (const auto* part : {&s.train, &s.validation, &s.test}) {
    for (auto i : *part) ++seen[i];
  }
  for (int x : seen) CHECK(x == 1);
  CHECK(make_split(101, 0.7, 0.15, 3).train == s.train);
}
