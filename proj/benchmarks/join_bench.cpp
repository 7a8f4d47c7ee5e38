#include <benchmark/benchmark.h>

#include <random>

#include "warden/engine.hpp"

using namespace warden;

namespace {

std::vector<Fact> relation(const std::string& pred, size_t n, int domain,
                           uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> pick(0, domain - 1);
    std::vector<Fact> out;
    out.reserve(n);
    for (size_t i = 0; i < n; ++i) {
        Fact f;
        f.pred = pred;
        f.args = {Value{int64_t(pick(rng))}, Value{int64_t(pick(rng))}};
        out.push_back(std::move(f));
    }
    return out;
}

}  // namespace

static void BM_SlotJoin(benchmark::State& state) {
    size_t n = size_t(state.range(0));
    auto left = relation("l", n, int(n / 4) + 1, 1);
    auto right = relation("r", n, int(n / 4) + 1, 2);
    for (auto _ : state) {
        auto joined = slot_join(left, right, {1}, {0});
        benchmark::DoNotOptimize(joined.size());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SlotJoin)->Range(1 << 8, 1 << 14)->Complexity();

static void BM_DynamicIndexProbe(benchmark::State& state) {
    auto rows = relation("r", 10000, 500, 3);
    for (auto _ : state) {
        DynamicIndex ix(&rows, {0});
        size_t hits = 0;
        for (int k = 0; k < 500; ++k)
            hits += ix.probe({Value{int64_t(k)}}).size();
        benchmark::DoNotOptimize(hits);
    }
}
BENCHMARK(BM_DynamicIndexProbe);
