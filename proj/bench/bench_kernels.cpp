// Serial reference vs OpenMP kernel for chain verification, usage
// aggregation and the monthly histogram.

#include <benchmark/benchmark.h>

#include <random>

#include "scribe/audit_log.hpp"
#include "scribe/audit_verify.hpp"
#include "scribe/metrics.hpp"

using namespace scribe;

namespace {

std::vector<std::string> make_chain(std::size_t n) {
  std::vector<std::string> lines;
  lines.reserve(n);
  Digest prev = kGenesisDigest;
  for (std::size_t i = 0; i < n; ++i) {
    AuditEvent e;
    e.seq = i + 1;
    e.timestamp = Timestamp{1730419200000 + static_cast<std::int64_t>(i)};
    e.actor_id = "physician";
    e.action = "note_edited";
    e.entity_kind = "note";
    e.entity_id = new_id();
    e.payload = {{"i", i}};
    e.payload_digest = compute_payload_digest(e);
    e.prev_digest = prev;
    e.chain_digest = compute_chain_digest(prev, e.payload_digest, e.seq);
    prev = e.chain_digest;
    lines.push_back(serialize_event(e));
  }
  return lines;
}

MetricsSnapshot make_snapshot(std::size_t n) {
  std::mt19937 rng(7);
  MetricsSnapshot s;
  for (int u = 0; u < 198; ++u) s.user_ids.push_back("u" + std::to_string(u));
  for (int f = 0; f < 105; ++f) s.facility_ids.push_back("f" + std::to_string(f));
  const std::int64_t lo = Month{2024, 11}.start().ms;
  const std::int64_t span = Month{2025, 8}.start().ms - lo;
  s.sessions.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    SessionFact f;
    f.created_ms = lo + static_cast<std::int64_t>(rng() % static_cast<std::uint64_t>(span));
    f.owner = static_cast<std::int32_t>(rng() % 198);
    f.facility = static_cast<std::int32_t>(rng() % 105);
    f.audio_us = 456'000'000;
    f.prompt_tokens = 1500;
    f.completion_tokens = 400;
    s.sessions.push_back(f);
  }
  return s;
}

const MonthRange kRange{{2024, 11}, {2025, 7}};

void BM_VerifySerial(benchmark::State& state) {
  const auto lines = make_chain(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(verify_chain_serial(lines));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_VerifyParallel(benchmark::State& state) {
  const auto lines = make_chain(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(verify_chain_parallel(lines));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_AggregateSerial(benchmark::State& state) {
  const auto snap = make_snapshot(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(aggregate_serial(kRange, snap));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_AggregateParallel(benchmark::State& state) {
  const auto snap = make_snapshot(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(aggregate(kRange, snap));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SeriesSerial(benchmark::State& state) {
  const auto snap = make_snapshot(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(monthly_series_serial(kRange, snap));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_SeriesParallel(benchmark::State& state) {
  const auto snap = make_snapshot(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(monthly_series(kRange, snap));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_VerifySerial)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_VerifyParallel)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AggregateSerial)->Arg(22148)->Arg(1 << 20)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_AggregateParallel)->Arg(22148)->Arg(1 << 20)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SeriesSerial)->Arg(22148)->Arg(1 << 20)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_SeriesParallel)->Arg(22148)->Arg(1 << 20)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
