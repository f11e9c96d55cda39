#include <benchmark/benchmark.h>

#include <random>

#include "mhqa/grounding.hpp"
#include "mhqa/proposals.hpp"

using namespace mhqa;
using grounding::Matrix;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  Matrix m(r, c);
  for (auto& v : m.data) v = u(rng);
  return m;
}

void BM_MilNce(benchmark::State& state) {
  const auto L = static_cast<std::size_t>(state.range(0));
  const auto s = random_matrix(4, L, 1);
  Matrix y(4, L);
  for (std::size_t k = 0; k < 4; ++k) y(k, k) = 1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(grounding::milnce_loss(s, y, 0.07));
    benchmark::DoNotOptimize(grounding::milnce_grad(s, y, 0.07));
  }
}
BENCHMARK(BM_MilNce)->Arg(16)->Arg(180);

void BM_Bce(benchmark::State& state) {
  std::vector<double> p(static_cast<std::size_t>(state.range(0)), 0.3), y(p.size(), 1.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(grounding::bce_loss(p, y));
    benchmark::DoNotOptimize(grounding::bce_grad(p, y));
  }
}
BENCHMARK(BM_Bce)->Arg(180);

void BM_SaliencyProposals(benchmark::State& state) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> s(static_cast<std::size_t>(state.range(0)));
  for (auto& v : s) v = u(rng);
  for (auto _ : state) benchmark::DoNotOptimize(proposals::saliency_to_spans(s, 0.7, {}));
}
BENCHMARK(BM_SaliencyProposals)->Arg(180);

void BM_SimilarityProposals(benchmark::State& state) {
  const auto s = random_matrix(static_cast<std::size_t>(state.range(0)), 180, 6);
  for (auto _ : state) {
    benchmark::DoNotOptimize(proposals::similarity_to_spans(s, 0.07, 0.1, {}));
  }
}
BENCHMARK(BM_SimilarityProposals)->Arg(2)->Arg(6);

}  // namespace
