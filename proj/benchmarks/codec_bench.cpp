#include <benchmark/benchmark.h>

#include "qnet/cqc/codec.hpp"
#include "qnet/peerlink/frame.hpp"

using namespace qnet;

static cqc::Message ghz_message(std::size_t n) {
    cqc::Message m{cqc::MsgType::Command, 1, {}};
    m.commands.push_back({0, cqc::Instr::H, cqc::opt::Block, std::nullopt, {}});
    for (std::size_t i = 0; i + 1 < n; ++i) {
        cqc::ExtraHeader e{};
        e.extra_qubit_id = static_cast<QubitId>(i + 1);
        m.commands.push_back({static_cast<QubitId>(i), cqc::Instr::CNot, cqc::opt::Block, e, {}});
    }
    return m;
}

static void BM_CqcEncode(benchmark::State& state) {
    const auto m = ghz_message(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(cqc::encode_message(m));
}
BENCHMARK(BM_CqcEncode)->Arg(1)->Arg(16)->Arg(128);

static void BM_CqcDecode(benchmark::State& state) {
    const auto bytes = cqc::encode_message(ghz_message(static_cast<std::size_t>(state.range(0))));
    for (auto _ : state) benchmark::DoNotOptimize(cqc::decode_message(bytes));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * bytes.size()));
}
BENCHMARK(BM_CqcDecode)->Arg(1)->Arg(16)->Arg(128);

static void BM_FrameRoundTrip(benchmark::State& state) {
    peerlink::PeerMessage msg{7, peerlink::FrameKind::Request, peerlink::PeerOp::MergePull,
                              Bytes(static_cast<std::size_t>(state.range(0)), 0xAB)};
    for (auto _ : state) benchmark::DoNotOptimize(peerlink::frame_decode(peerlink::frame_encode(msg)));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * state.range(0)));
}
BENCHMARK(BM_FrameRoundTrip)->Arg(64)->Arg(16 << 10)->Arg(1 << 20);
BENCHMARK_MAIN();
