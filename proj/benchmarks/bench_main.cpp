#include <benchmark/benchmark.h>

#include <memory>
#include <random>
#include <vector>

#include "grabnel/acquisition.hpp"
#include "grabnel/candidates.hpp"
#include "grabnel/dataset.hpp"
#include "grabnel/gcn.hpp"
#include "grabnel/surrogate.hpp"
#include "grabnel/wl_features.hpp"

using namespace grabnel;

namespace {

std::vector<Graph> er_graphs(std::size_t count) {
  ERGenConfig cfg;
  cfg.seed = 3;
  return generate_er_dataset(cfg, count).graphs;
}

}  // namespace

static void BM_WLExtract(benchmark::State& state) {
  const auto graphs = er_graphs(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    auto out = wl_extract_discrete(graphs, 2);
    benchmark::DoNotOptimize(out.first.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_WLExtract)->Arg(50)->Arg(200);

static void BM_SurrogateFit(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> count(0, 5);
  std::normal_distribution<double> noise(0.0, 1.0);
  const auto n = static_cast<Eigen::Index>(state.range(0));
  const Eigen::Index d = 60;
  FeatureMatrix phi(n, d);
  std::vector<double> y;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) phi(i, j) = count(rng);
    y.push_back(phi(i, 0) - 0.5 * phi(i, 3) + 0.1 * noise(rng));
  }
  for (auto _ : state) {
    auto post = fit_surrogate(phi, y);
    benchmark::DoNotOptimize(post.weight_mean.data());
  }
}
BENCHMARK(BM_SurrogateFit)->Arg(20)->Arg(100);

static void BM_GCNForward(benchmark::State& state) {
  const auto graphs = er_graphs(64);
  const GCNWeights w = GCNWeights::zeros(1, 3, 16, 8, GCNPooling::Sum);
  std::size_t i = 0;
  for (auto _ : state) {
    auto r = gcn_forward(graphs[i++ % graphs.size()], w);
    benchmark::DoNotOptimize(r.class_scores.data());
  }
}
BENCHMARK(BM_GCNForward);

static void BM_AcquisitionSearch(benchmark::State& state) {
  const Graph base = er_graphs(1).front();
  const CandidateGenerator gen(AttackMode::Flip, {});
  Rng rng(5);
  std::vector<ScoredEdits> history;
  std::vector<Graph> queried;
  std::normal_distribution<double> loss(-2.0, 0.5);
  for (int k = 0; k < 30; ++k) {
    auto e = *gen.random_edit_set(base, 1, rng);
    queried.push_back(apply_edits(base, e));
    history.push_back({e, loss(rng)});
  }
  WLEncoder encoder(1, false);
  const FeatureMatrix& phi = encoder.observe(queried);
  std::vector<double> y;
  double best = -1e9;
  for (const auto& h : history) {
    y.push_back(h.loss);
    best = std::max(best, h.loss);
  }
  const SurrogatePosterior post = fit_surrogate(phi, y);
  const AcquisitionFn fn = make_ei_acquisition(post, encoder, base, best);
  const AcquisitionConfig cfg;
  for (auto _ : state) {
    auto r = optimise_acquisition(fn, base, history, gen, cfg, 1, {}, rng);
    benchmark::DoNotOptimize(r.batch.data());
  }
}
BENCHMARK(BM_AcquisitionSearch);
BENCHMARK_MAIN();
