#include <benchmark/benchmark.h>

#include <random>

#include "mhqa/metrics.hpp"
#include "mhqa/spans.hpp"

using namespace mhqa;

namespace {

SpanSet random_set(std::mt19937_64& rng, int n) {
  std::uniform_real_distribution<double> u(0, 180);
  std::vector<TimeSpan> raw;
  for (int i = 0; i < n; ++i) {
    double a = u(rng), b = u(rng);
    if (a > b) std::swap(a, b);
    raw.push_back({a, b + 0.5});
  }
  return normalize(raw);
}

void BM_Score(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto p = random_set(rng, static_cast<int>(state.range(0)));
  const auto g = random_set(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(metrics::score(p, g));
}
BENCHMARK(BM_Score)->Arg(2)->Arg(8)->Arg(64);

void BM_Normalize(benchmark::State& state) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 180);
  std::vector<TimeSpan> raw;
  for (int i = 0; i < state.range(0); ++i) {
    const double a = u(rng);
    raw.push_back({a, a + 3});
  }
  for (auto _ : state) benchmark::DoNotOptimize(normalize(raw));
}
BENCHMARK(BM_Normalize)->Arg(16)->Arg(256);

void BM_Aggregate(benchmark::State& state) {
  std::mt19937_64 rng(3);
  std::vector<metrics::SampleEval> samples(static_cast<std::size_t>(state.range(0)));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    samples[i].sample_id = std::to_string(i);
    samples[i].prediction = random_set(rng, 3);
    samples[i].ground_truth = random_set(rng, 3);
  }
  for (auto _ : state) benchmark::DoNotOptimize(metrics::aggregate(samples));
}
BENCHMARK(BM_Aggregate)->Arg(1080);

}  // namespace
BENCHMARK_MAIN();
