#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "evr/fusion.hpp"
#include "evr/metrics.hpp"
#include "evr/similarity.hpp"

namespace {

evr::Vec unit_vector(std::mt19937_64& rng, std::size_t dim) {
    evr::Vec v(dim);
    double norm = 0.0;
    for (auto& x : v) {
        x = (static_cast<double>(rng() >> 11) / 9007199254740992.0) * 2.0 - 1.0;
        norm += x * x;
    }
    norm = std::sqrt(norm);
    for (auto& x : v) x /= norm;
    return v;
}

evr::TokenEmbeddingSequence make_sequence(std::mt19937_64& rng, std::size_t tokens,
                                          std::size_t dim) {
    evr::TokenEmbeddingSequence seq;
    for (std::size_t i = 0; i < tokens; ++i) seq.tokens.push_back(unit_vector(rng, dim));
    return seq;
}

void BM_LateInteraction(benchmark::State& state) {
    std::mt19937_64 rng(7);
    const auto q = make_sequence(rng, 16, 128);
    const auto d = make_sequence(rng, static_cast<std::size_t>(state.range(0)), 128);
    for (auto _ : state) {
        benchmark::DoNotOptimize(evr::late_interaction_sim(q, d));
    }
}
BENCHMARK(BM_LateInteraction)->Arg(32)->Arg(128)->Arg(512);

void BM_InverseEntropyFusion(benchmark::State& state) {
    std::mt19937_64 rng(11);
    const std::size_t videos = static_cast<std::size_t>(state.range(0));
    std::vector<std::string> order;
    for (std::size_t v = 0; v < videos; ++v) order.push_back("v" + std::to_string(v));
    std::vector<evr::ComponentDistribution> dists;
    for (int i = 0; i < 5; ++i) {
        std::vector<double> scores(videos);
        for (auto& s : scores) s = static_cast<double>(rng() % 1000) / 100.0;
        dists.push_back(evr::softmax_over_videos(scores));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(evr::fuse_inverse_entropy(dists, order, "q"));
    }
}
BENCHMARK(BM_InverseEntropyFusion)->Arg(100)->Arg(1000)->Arg(10000);

void BM_EvaluateRun(benchmark::State& state) {
    std::mt19937_64 rng(13);
    const std::size_t videos = 1000;
    std::vector<std::string> ids;
    for (std::size_t v = 0; v < videos; ++v) ids.push_back("v" + std::to_string(v));
    std::vector<evr::RankedList> rankings;
    evr::RelevanceJudgments judgments;
    for (int q = 0; q < 50; ++q) {
        evr::RankedList list;
        list.query_id = "q" + std::to_string(q);
        list.video_ids = ids;
        std::shuffle(list.video_ids.begin(), list.video_ids.end(), rng);
        judgments.relevant[list.query_id] = {list.video_ids[rng() % videos]};
        rankings.push_back(std::move(list));
    }
    for (auto _ : state) {
        benchmark::DoNotOptimize(evr::evaluate_run(rankings, judgments));
    }
}
BENCHMARK(BM_EvaluateRun);

}  // namespace

BENCHMARK_MAIN();
