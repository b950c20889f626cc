// Serial reference vs OpenMP kernels, plus the per-message protocol costs they
// are built from. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include "leap/ameap.hpp"
#include "leap/crypto/rc4.hpp"
#include "leap/endpoint.hpp"
#include "leap/kernels.hpp"

using namespace leap;

namespace {

kernels::KeySearchProblem unsolvable_problem() {
    // Ciphertext chosen so no candidate in the benchmarked range matches; every
    // trial runs to completion on both paths.
    kernels::KeySearchProblem p;
    p.key_template.assign(16, 0x5A);
    p.unknown_bits = 40;
    p.ciphertext.fill(0xFF);
    return p;
}

crypto::SymmetricKey128 bench_key() {
    crypto::SymmetricKey128 k;
    for (std::size_t i = 0; i < 16; ++i) k.bytes[i] = static_cast<std::uint8_t>(i * 7 + 3);
    return k;
}

void BM_KeySearchRef(benchmark::State& state) {
    const auto p = unsolvable_problem();
    const auto n = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::key_search_ref(p, 1, n));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

void BM_KeySearchOmp(benchmark::State& state) {
    const auto p = unsolvable_problem();
    const auto n = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::key_search_omp(p, 1, n));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
    state.counters["threads"] = kernels::max_threads();
}

void BM_ForgeryRef(benchmark::State& state) {
    const auto n = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::forgery_acceptances_ref(bench_key(), 3, CanId(0x010), n, 1));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

void BM_ForgeryOmp(benchmark::State& state) {
    const auto n = static_cast<std::uint64_t>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::forgery_acceptances_omp(bench_key(), 3, CanId(0x010), n, 1));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
    state.counters["threads"] = kernels::max_threads();
}

void BM_LeapKeystream(benchmark::State& state) {
    const auto key = bench_key();
    std::uint64_t ctr = 0;
    for (auto _ : state) benchmark::DoNotOptimize(message_keystream(key, ctr++));
}

template <class Endpoint>
void BM_SealOpen(benchmark::State& state) {
    Endpoint tx(CanId(0x010), CanId(0x020), Role::sender, ChannelConfig{std::uint64_t{1} << 40, 0, 48});
    Endpoint rx(CanId(0x020), CanId(0x010), Role::receiver, ChannelConfig{std::uint64_t{1} << 40, 0, 48});
    tx.install_session(bench_key());
    rx.install_session(bench_key());
    std::uint64_t i = 0;
    for (auto _ : state) {
        const auto sealed = tx.seal(BitString(kernels::splitmix64(i++) >> 16, 48));
        benchmark::DoNotOptimize(rx.open(sealed.view()));
    }
}

}  // namespace

BENCHMARK(BM_KeySearchRef)->Arg(1 << 14)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KeySearchOmp)->Arg(1 << 14)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForgeryRef)->Arg(1 << 14)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ForgeryOmp)->Arg(1 << 14)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LeapKeystream);
BENCHMARK(BM_SealOpen<LeapEndpoint>)->Name("BM_SealOpen/LEAP");
BENCHMARK(BM_SealOpen<AmeapEndpoint>)->Name("BM_SealOpen/AMEAP");

BENCHMARK_MAIN();
