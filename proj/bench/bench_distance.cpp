// Serial reference vs OpenMP kernel for the pairwise distance matrix.

#include <benchmark/benchmark.h>

#include "ssa/descriptives.hpp"
#include "ssa/dissim.hpp"
#include "ssa/synthcohort.hpp"

namespace {

ssa::SequenceSet cohort_sequences(std::size_t n) {
    auto cfg = ssa::default_generator_config();
    cfg.n_patients = n;
    auto cohort = ssa::generate(cfg);
    return ssa::validate_set(cohort.simulated);
}

void BM_DistanceSerial(benchmark::State& state) {
    auto set = cohort_sequences(static_cast<std::size_t>(state.range(0)));
    auto cost = ssa::trate_costs(ssa::transition_rates(set));
    for (auto _ : state) benchmark::DoNotOptimize(ssa::distance_matrix_serial(set, cost));
    state.SetItemsProcessed(state.iterations() * state.range(0) * (state.range(0) - 1) / 2);
}

void BM_DistanceParallel(benchmark::State& state) {
    auto set = cohort_sequences(static_cast<std::size_t>(state.range(0)));
    auto cost = ssa::trate_costs(ssa::transition_rates(set));
    const int threads = static_cast<int>(state.range(1));
    for (auto _ : state) benchmark::DoNotOptimize(ssa::distance_matrix(set, cost, threads));
    state.SetItemsProcessed(state.iterations() * state.range(0) * (state.range(0) - 1) / 2);
}

void BM_TransitionsSerial(benchmark::State& state) {
    auto set = cohort_sequences(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(ssa::transition_rates_serial(set));
}

void BM_TransitionsParallel(benchmark::State& state) {
    auto set = cohort_sequences(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(ssa::transition_rates(set));
}

}  // namespace

BENCHMARK(BM_DistanceSerial)->Arg(200)->Arg(500)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DistanceParallel)->Args({200, 1})->Args({200, 4})->Args({500, 1})->Args({500, 4})
    ->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_TransitionsSerial)->Arg(5000);
BENCHMARK(BM_TransitionsParallel)->Arg(5000);

BENCHMARK_MAIN();
