#include <benchmark/benchmark.h>

#include <vector>

#include "capinfer/adaptive.hpp"
#include "capinfer/ctt.hpp"
#include "capinfer/irt.hpp"
#include "capinfer/rng.hpp"
#include "capinfer/synthetic.hpp"

using namespace capinfer;

namespace {

std::vector<double> per_item_means(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> means(n);
    for (auto& m : means) m = rng.uniform();
    return means;
}

void BM_ClusteredBootstrap(benchmark::State& state) {
    const auto means = per_item_means(static_cast<std::size_t>(state.range(0)), 7);
    for (auto _ : state) {
        auto result = ctt::clustered_bootstrap(means, 1000, 0.05, 42);
        benchmark::DoNotOptimize(result.lower);
    }
    state.SetItemsProcessed(state.iterations() * 1000 * state.range(0));
}
BENCHMARK(BM_ClusteredBootstrap)->Arg(50)->Arg(200)->Arg(1000);

void BM_MleAbility(benchmark::State& state) {
    Rng rng(11);
    std::vector<irt::AdministeredItem> items;
    for (int i = 0; i < state.range(0); ++i) {
        ItemParams item{synthetic::item_name(i), rng.uniform(0.5, 2.0), rng.normal(0.0, 1.0)};
        items.push_back({item, rng.uniform(0.1, 0.9), 20});
    }
    for (auto _ : state) {
        auto estimate = irt::mle_ability(items, {});
        benchmark::DoNotOptimize(estimate.theta);
    }
}
BENCHMARK(BM_MleAbility)->Arg(20)->Arg(100)->Arg(500);

void BM_GridOracle(benchmark::State& state) {
    Rng rng(13);
    std::vector<irt::AdministeredItem> items;
    for (int i = 0; i < 10; ++i) {
        ItemParams item{synthetic::item_name(i), rng.uniform(0.5, 2.0), rng.normal(0.0, 1.0)};
        items.push_back({item, rng.uniform(0.1, 0.9), 20});
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(synthetic::oracle_grid_mle(items, -6.0, 6.0, 1e-4));
    }
}
BENCHMARK(BM_GridOracle);

void BM_Calibrate(benchmark::State& state) {
    synthetic::SyntheticSpec spec;
    spec.n_items = static_cast<int>(state.range(0));
    spec.k_models = 15;
    spec.m_perturbations = 20;
    spec.s_distribution = synthetic::OffsetDistribution::uniform(0.05);
    spec.seed = 17;
    Rng rng(substream_seed(17, "truth"));
    for (int i = 0; i < spec.n_items; ++i) {
        spec.items.push_back({synthetic::item_name(i), rng.uniform(0.5, 2.0),
                              rng.normal(0.0, 1.0)});
    }
    for (int k = 0; k < spec.k_models; ++k) spec.theta_models.push_back(rng.normal(0.0, 1.0));
    const auto data = synthetic::generate_irt(spec);
    for (auto _ : state) {
        auto result = irt::calibrate(data.counts);
        benchmark::DoNotOptimize(result.final_objective);
    }
}
BENCHMARK(BM_Calibrate)->Unit(benchmark::kMillisecond)->Arg(20)->Arg(50);

void BM_AdaptiveSession(benchmark::State& state) {
    Rng rng(19);
    std::vector<ItemParams> pool;
    for (int i = 0; i < 500; ++i) {
        pool.push_back({synthetic::item_name(i), rng.uniform(0.3, 3.0), rng.normal(0.0, 1.5)});
    }
    for (auto _ : state) {
        adaptive::SyntheticResponder responder(
            0.8, pool, synthetic::OffsetDistribution::uniform(0.1), 23);
        auto session = adaptive::run_adaptive_test(
            pool, responder, {0.0, 1.0}, adaptive::StoppingRule::defaults(pool.size()), 10);
        benchmark::DoNotOptimize(session.estimate.theta);
    }
    state.SetLabel("pool=500");
}
BENCHMARK(BM_AdaptiveSession)->Unit(benchmark::kMillisecond);

void BM_SyntheticGeneration(benchmark::State& state) {
    synthetic::SyntheticSpec spec;
    spec.n_items = static_cast<int>(state.range(0));
    spec.m_perturbations = 10;
    spec.s_distribution = synthetic::OffsetDistribution::two_point(0.2);
    spec.seed = 29;
    Rng rng(31);
    for (int i = 0; i < spec.n_items; ++i) spec.item_accuracy.push_back(rng.uniform(0.2, 0.8));
    for (auto _ : state) {
        auto data = synthetic::generate_ctt(spec);
        benchmark::DoNotOptimize(data.matrix.size());
    }
    state.SetItemsProcessed(state.iterations() * spec.n_items * spec.m_perturbations);
}
BENCHMARK(BM_SyntheticGeneration)->Unit(benchmark::kMillisecond)->Arg(200)->Arg(1000);

}  // namespace
