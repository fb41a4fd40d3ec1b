#include <benchmark/benchmark.h>

#include "atomic_li/dataset.hpp"
#include "atomic_li/neural.hpp"
#include "atomic_li/regress.hpp"

namespace {

// Untrained networks cost the same to evaluate as trained ones.
void BM_NeuralPredict(benchmark::State& state) {
  const auto model = ali::NeuralModel::initialized(static_cast<int>(state.range(0)), 1e6, 7);
  std::uint64_t key = 0x123456789abcdefULL;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.predict(key));
    key = key * 6364136223846793005ULL + 1442695040888963407ULL;
  }
}

void BM_PolynomialPredict(benchmark::State& state) {
  const ali::SortedTable table = ali::generate_uniform(1 << 16, 1);
  const ali::PolynomialModel model = ali::fit_polynomial(table, static_cast<int>(state.range(0)));
  std::uint64_t key = 0x123456789abcdefULL;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.predict(key));
    key = key * 6364136223846793005ULL + 1442695040888963407ULL;
  }
}

void BM_TrainEpoch(benchmark::State& state) {
  const ali::SortedTable table = ali::generate_uniform(1 << 12, 3);
  ali::TrainConfig config;
  config.epochs = 1;
  for (auto _ : state) benchmark::DoNotOptimize(ali::train_nn(table, static_cast<int>(state.range(0)), config));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(table.size()));
}

}  // namespace

BENCHMARK(BM_NeuralPredict)->Arg(0)->Arg(1)->Arg(2);
BENCHMARK(BM_PolynomialPredict)->Arg(1)->Arg(2)->Arg(3);
BENCHMARK(BM_TrainEpoch)->Arg(0)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);
