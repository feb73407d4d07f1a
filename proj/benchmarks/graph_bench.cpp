#include <benchmark/benchmark.h>

#include <random>
#include <set>

#include "lg4av/graph.hpp"

using namespace lg4av;

namespace {

graph::CoauthorGraph random_graph(std::size_t n, double avg_degree, std::mt19937_64& rng) {
    std::vector<corpus::AuthorId> ids;
    for (std::size_t i = 0; i < n; ++i) ids.push_back("a" + std::to_string(i));
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::set<graph::Edge> edges;
    const auto m = static_cast<std::size_t>(avg_degree * static_cast<double>(n) / 2.0);
    while (edges.size() < m) {
        auto i = pick(rng), j = pick(rng);
        if (i == j) continue;
        edges.insert({std::min(i, j), std::max(i, j)});
    }
    return graph::CoauthorGraph(ids, edges);
}

void BM_Normalize(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const auto g = random_graph(static_cast<std::size_t>(state.range(0)), 8.0, rng);
    for (auto _ : state) benchmark::DoNotOptimize(graph::normalize_adjacency(g));
}
BENCHMARK(BM_Normalize)->Arg(100)->Arg(1000)->Arg(10000);

void BM_Propagate(benchmark::State& state) {
    std::mt19937_64 rng(2);
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto adj = graph::normalize_adjacency(random_graph(n, 8.0, rng));
    const Matrix x = Matrix::Random(static_cast<Eigen::Index>(n), 64);
    for (auto _ : state) benchmark::DoNotOptimize(graph::propagate(adj, x, 2));
}
BENCHMARK(BM_Propagate)->Arg(100)->Arg(1000)->Arg(10000);

}  // namespace
