#include <benchmark/benchmark.h>

#include <random>

#include "semimart/doob.hpp"
#include "semimart/generators.hpp"
#include "semimart/komlos.hpp"
#include "semimart/pipeline.hpp"

using namespace semimart;

namespace {

const GeneratedTree& level4(Kind kind) {
    static const GeneratedTree bm = [] {
        GeneratorSpec s;
        s.level = 4;
        return generate_tree(s);
    }();
    static const GeneratedTree rl = [] {
        GeneratorSpec s;
        s.kind = Kind::RlFractional;
        s.level = 4;
        return generate_tree(s);
    }();
    return kind == Kind::RlFractional ? rl : bm;
}

}  // namespace

static void BM_DoobDecompose(benchmark::State& state) {
    const auto& t = level4(Kind::RlFractional);
    const int n = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(doob_decompose(t.process, n));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(t.space->atom_count()));
}
BENCHMARK(BM_DoobDecompose)->DenseRange(1, 4)->Unit(benchmark::kMillisecond);

static void BM_ExtractConvex(benchmark::State& state) {
    const auto k = static_cast<std::size_t>(state.range(0));
    const std::size_t dim = 4096;
    std::mt19937_64 rng(5);
    std::normal_distribution<double> nd;
    std::vector<std::vector<double>> seq(k, std::vector<double>(dim));
    for (auto& f : seq) {
        for (double& x : f) x = nd(rng);
    }
    const std::vector<double> prob(dim, 1.0 / dim);
    KomlosConfig cfg;
    cfg.tol = 1e6;
    for (auto _ : state) benchmark::DoNotOptimize(extract_convex(seq, prob, cfg));
}
BENCHMARK(BM_ExtractConvex)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_DetectLevel4(benchmark::State& state) {
    const auto& t = level4(state.range(0) ? Kind::RlFractional : Kind::RademacherBm);
    for (auto _ : state) benchmark::DoNotOptimize(detect(t.process));
    state.SetLabel(state.range(0) ? "rl_fractional" : "rademacher_bm");
}
BENCHMARK(BM_DetectLevel4)->Arg(0)->Arg(1)->Unit(benchmark::kSecond)->Iterations(1);

static void BM_GenerateEnsemble(benchmark::State& state) {
    GeneratorSpec s;
    s.kind = Kind::RlFractional;
    s.level = static_cast<int>(state.range(0));
    s.mode = Mode::Ensemble;
    s.paths = 4096;
    for (auto _ : state) benchmark::DoNotOptimize(generate_ensemble(s));
}
BENCHMARK(BM_GenerateEnsemble)->Arg(6)->Arg(8)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
