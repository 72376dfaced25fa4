#include <cmath>

#include <benchmark/benchmark.h>

#include "rfq/bnt.hpp"
#include "rfq/market_sim.hpp"
#include "rfq/pricing.hpp"
#include "rfq/random.hpp"

using namespace rfq;

namespace {

/// Balanced-ish tree with random gates, grown by splitting the first leaf.
bnt::BntModel gate_tree(RandomStream& rng, std::size_t dim, std::size_t leaves) {
  auto m = bnt::BntModel::single_leaf(dim);
  while (m.n_leaves() < leaves) {
    std::vector<double> w(dim);
    for (double& v : w) v = rng.normal();
    m.split_leaf(m.leaf_ids().front(), w, rng.normal());
  }
  return m;
}

void noise_data(RandomStream& rng, std::size_t n, std::size_t dim, Matrix& X, std::vector<int>& y) {
  X = Matrix(n, dim);
  y.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < dim; ++k) X(i, k) = rng.normal();
    y[i] = rng.bernoulli(0.5) ? 1 : 0;
  }
}

}  // namespace

static void BM_GradBound(benchmark::State& state) {
  RandomStream rng(1);
  const auto leaves = static_cast<std::size_t>(state.range(0));
  const auto n = static_cast<std::size_t>(state.range(1));
  const auto m = gate_tree(rng, 6, leaves);
  Matrix X;
  std::vector<int> y;
  noise_data(rng, n, 6, X, y);
  for (auto _ : state) benchmark::DoNotOptimize(bnt::grad_bound(m, X, y));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n));
}
BENCHMARK(BM_GradBound)->Args({4, 1000})->Args({16, 1000})->Args({16, 7000});

static void BM_SimulateDataset(benchmark::State& state) {
  sim::SimConfig cfg;
  cfg.n_records = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sim::gen_rfq_dataset(cfg));
}
BENCHMARK(BM_SimulateDataset)->Arg(10005)->Unit(benchmark::kMillisecond);

static void BM_OptimalQuote(benchmark::State& state) {
  RandomStream rng(2);
  std::vector<pricing::ValidationSample> samples(static_cast<std::size_t>(state.range(0)));
  for (auto& s : samples) {
    s.predicted_next_mid = 124.0 + 0.2 * rng.normal();
    s.true_next_mid = s.predicted_next_mid + 0.03 * rng.normal();
  }
  const auto curve = pricing::exceed_curve(samples, 0, sim::Side::bid);
  sim::RfqRecord rfq;
  rfq.mid_price = 124.0;
  rfq.side = sim::Side::bid;
  const pricing::FillProbability fill = [](double q) { return 1.0 / (1.0 + std::exp(-30.0 * (q - 123.9))); };
  for (auto _ : state) benchmark::DoNotOptimize(pricing::optimal_quote(rfq, fill, 124.0, curve));
}
BENCHMARK(BM_OptimalQuote)->Arg(600)->Arg(3000);
BENCHMARK_MAIN();
