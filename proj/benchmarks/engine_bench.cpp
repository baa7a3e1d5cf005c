#include <benchmark/benchmark.h>

#include "qnet/engine/state_register.hpp"

using namespace qnet::engine;

static StateRegister make(std::size_t n) {
    StateRegister r(0, 24);
    for (std::size_t i = 0; i < n; ++i) r.add_qubit();
    return r;
}

static void BM_SingleGate(benchmark::State& state) {
    auto r = make(static_cast<std::size_t>(state.range(0)));
    const auto h = gate_from_command(GateCode::H);
    for (auto _ : state) {
        r.apply_single(0, h);
        benchmark::DoNotOptimize(r.amplitudes().data());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SingleGate)->DenseRange(4, 20, 4);

static void BM_Cnot(benchmark::State& state) {
    auto r = make(static_cast<std::size_t>(state.range(0)));
    r.apply_single(0, gate_from_command(GateCode::H));
    const auto cx = gate_from_command(GateCode::CNot);
    for (auto _ : state) {
        r.apply_two(0, r.num_qubits() - 1, cx);
        benchmark::DoNotOptimize(r.amplitudes().data());
    }
}
BENCHMARK(BM_Cnot)->DenseRange(4, 20, 4);

static void BM_Merge(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto b = make(n);
    for (auto _ : state) {
        auto a = make(n);
        a.merge(b);
        benchmark::DoNotOptimize(a.amplitudes().data());
    }
}
BENCHMARK(BM_Merge)->DenseRange(2, 10, 2);

static void BM_Measure(benchmark::State& state) {
    Rng rng(1);
    const auto n = static_cast<std::size_t>(state.range(0));
    for (auto _ : state) {
        state.PauseTiming();
        auto r = make(n);
        r.apply_single(0, gate_from_command(GateCode::H));
        state.ResumeTiming();
        benchmark::DoNotOptimize(r.measure(0, true, rng));
    }
}
BENCHMARK(BM_Measure)->DenseRange(4, 16, 4);
