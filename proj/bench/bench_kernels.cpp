// Serial reference kernels against their OpenMP counterparts. Pass
// OMP_NUM_THREADS to vary the thread count.

#include <benchmark/benchmark.h>

#include "relkit/experiment.hpp"
#include "relkit/forest.hpp"
#include "relkit/localfit.hpp"
#include "relkit/neighbors.hpp"
#include "relkit/reliability.hpp"
#include "relkit/sim.hpp"

using namespace relkit;

namespace {

struct Fixture {
  sim::SimData data;
  std::vector<int> predictions;
  neighbors::NeighborIndex index;
  localfit::SyntheticPoints synthetic;
  density::DensityModel density;
  localfit::LocalFitModel localfit;

  Fixture()
      : data(sim::generate_sim(sim::SimSpec{})),
        predictions(flip_some(*data.train.labels)),
        index(data.train.values),
        synthetic(localfit::generate_synthetic(data.train.values, localfit::NoiseConfig{})) {
    const auto policy = density::ThresholdPolicy::percentile_of_validation(98.0);
    auto train_cfg = density::default_train_config(policy, 1);
    train_cfg.epochs = 100;
    density = density::fit_density(data.train.values, train_cfg, policy, &data.validation.values).model;
    localfit::LocalFitConfig lf;
    lf.proxy_train.epochs = 5;
    localfit = localfit::fit_localfit(data.train.values, *data.train.labels, predictions, lf).model;
  }

  // Every seventh prediction wrong, so local accuracy varies.
  static std::vector<int> flip_some(std::vector<int> y) {
    for (std::size_t i = 0; i < y.size(); i += 7) y[i] = 1 - y[i];
    return y;
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

template <bool Parallel>
void BM_KnnBatch(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    auto r = Parallel ? neighbors::knn_batch(f.index, f.data.test.values, 5)
                      : neighbors::knn_batch_serial(f.index, f.data.test.values, 5);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.data.test.rows()));
}

template <bool Parallel>
void BM_LabelSynthetic(benchmark::State& state) {
  const auto& f = fixture();
  const auto& y = *f.data.train.labels;
  for (auto _ : state) {
    auto r = Parallel ? localfit::label_synthetic(f.synthetic.points, f.index, y, f.predictions, 5, 0.85)
                      : localfit::label_synthetic_serial(f.synthetic.points, f.index, y, f.predictions,
                                                         5, 0.85);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.synthetic.points.rows()));
}

template <bool Parallel>
void BM_AssessRows(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    auto r = Parallel ? assess_rows(f.density, f.localfit, f.data.test.values)
                      : assess_rows_serial(f.density, f.localfit, f.data.test.values);
    benchmark::DoNotOptimize(r);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(f.data.test.rows()));
}

template <bool Parallel>
void BM_RandomForest(benchmark::State& state) {
  const auto& f = fixture();
  const experiment::ExperimentConfig defaults;
  auto cfg = defaults.forest;
  cfg.n_trees = 20;
  for (auto _ : state) {
    auto rf = Parallel ? forest::rf_fit(f.data.train.values, *f.data.train.labels, cfg)
                       : forest::rf_fit_serial(f.data.train.values, *f.data.train.labels, cfg);
    benchmark::DoNotOptimize(rf);
  }
}

}  // namespace

BENCHMARK(BM_KnnBatch<false>)->Name("knn_batch/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KnnBatch<true>)->Name("knn_batch/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LabelSynthetic<false>)->Name("label_synthetic/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LabelSynthetic<true>)->Name("label_synthetic/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssessRows<false>)->Name("assess_rows/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AssessRows<true>)->Name("assess_rows/openmp")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RandomForest<false>)->Name("rf_fit/serial")->Unit(benchmark::kMillisecond);
BENCHMARK(BM_RandomForest<true>)->Name("rf_fit/openmp")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
