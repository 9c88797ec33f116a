// Acceptance suite: verifies the seven release criteria and prints one
// pass/fail line per criterion. Usage:
//
//   evr_acceptance <path-to-evr-cli> <fixture-dir>
//
// Criteria 1-4 and 7 are oracle/property checks on seeded random
// instances; 5 and 6 drive the CLI binary over the bundled replay fixture.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "evr/corpus_io.hpp"
#include "evr/fusion.hpp"
#include "evr/metrics.hpp"
#include "evr/pipeline.hpp"
#include "evr/scoring.hpp"
#include "nlohmann/json.hpp"
#include "support/oracles.hpp"
#include "support/rng.hpp"

namespace fs = std::filesystem;
namespace oracle = testsupport::oracle;
using testsupport::Rng;
using Clock = std::chrono::steady_clock;

namespace {

struct Check {
    bool ok = true;
    std::string detail;

    void fail(std::string why) {
        if (ok) detail = std::move(why);
        ok = false;
    }
    void require(bool condition, const std::string& why) {
        if (!condition) fail(why);
    }
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

oracle::Fusion to_oracle(evr::FusionMethod m) {
    switch (m) {
        case evr::FusionMethod::InvEntropy: return oracle::Fusion::InvEntropy;
        case evr::FusionMethod::Mean: return oracle::Fusion::Mean;
        case evr::FusionMethod::Max: return oracle::Fusion::Max;
        case evr::FusionMethod::Rrf: return oracle::Fusion::Rrf;
        case evr::FusionMethod::NegExpEntropy: return oracle::Fusion::NegExpEntropy;
    }
    return oracle::Fusion::Mean;
}

// ---------------------------------------------------------------------------
// 1. Fusion oracle equivalence
// ---------------------------------------------------------------------------

Check criterion_fusion_oracle() {
    Check check;
    const auto start = Clock::now();
    Rng rng(10001);
    for (int instance = 0; instance < 200 && check.ok; ++instance) {
        const std::size_t videos = rng.between(2, 50);
        const std::size_t comps = rng.between(1, 5);
        const auto ids = testsupport::video_ids(videos);
        std::vector<std::vector<double>> raw;
        std::vector<evr::ComponentDistribution> dists;
        for (std::size_t c = 0; c < comps; ++c) {
            raw.push_back(rng.scores(videos, -5.0, 5.0));
            dists.push_back(evr::softmax_over_videos(raw.back()));
        }
        for (evr::FusionMethod method : evr::all_fusion_methods()) {
            auto fused = evr::fuse(method, dists, ids, "q");
            auto expected = oracle::fuse(to_oracle(method), raw, ids);
            check.require(fused.ranking == expected.ranking,
                          std::string("ranking mismatch, method ") +
                              evr::fusion_method_name(method) + ", instance " +
                              std::to_string(instance));
            for (std::size_t v = 0; v < videos; ++v) {
                check.require(std::abs(fused.scores[v] - expected.scores[v]) <= 1e-9,
                              std::string("score off by more than 1e-9, method ") +
                                  evr::fusion_method_name(method));
            }
        }
    }
    const double elapsed = seconds_since(start);
    check.require(elapsed < 5.0, "runtime " + std::to_string(elapsed) + "s exceeds 5s");
    return check;
}

// ---------------------------------------------------------------------------
// 2. Metric oracle equivalence
// ---------------------------------------------------------------------------

Check criterion_metric_oracle() {
    Check check;
    const auto start = Clock::now();

    // analytic fixtures
    {
        auto ids = testsupport::video_ids(20);
        check.require(std::abs(evr::ndcg_at_k(ids, {ids[1]}, 10) - 1.0 / std::log2(3.0)) <
                          1e-12,
                      "single relevant at rank 2: NDCG@10 != 1/log2(3)");
        check.require(evr::mrr(ids, {ids[1]}) == 0.5, "MRR rank-2 != 0.5");
        check.require(evr::average_precision(ids, {ids[3]}) == 0.25, "AP rank-4 != 0.25");
        std::set<std::string> rel5 = {ids[0], ids[2], ids[4], ids[9], ids[11]};
        check.require(std::abs(evr::recall_at_k(ids, rel5, 10) - 0.8) < 1e-12,
                      "R@10 with 4/5 relevant != 0.8");
        check.require(evr::first_relevant_rank(ids, {ids[5], ids[9]}) == 6,
                      "first relevant rank != 6");
    }

    Rng rng(10002);
    for (int run = 0; run < 100 && check.ok; ++run) {
        const std::size_t videos = rng.between(2, 40);
        const std::size_t queries = rng.between(1, 10);
        auto ids = testsupport::video_ids(videos);

        evr::RelevanceJudgments judgments;
        std::vector<evr::RankedList> lists;
        std::vector<double> ranks;
        std::map<std::string, std::vector<double>> sums;
        for (std::size_t q = 0; q < queries; ++q) {
            evr::RankedList list;
            list.query_id = "q" + std::to_string(q);
            list.video_ids = ids;
            rng.shuffle(list.video_ids);
            std::set<std::string> relevant;
            const std::size_t rel = rng.between(1, std::min<std::size_t>(4, videos));
            while (relevant.size() < rel) relevant.insert(ids[rng.index(videos)]);
            judgments.relevant[list.query_id] = relevant;

            for (std::size_t k : {std::size_t(1), std::size_t(5), std::size_t(10)}) {
                sums["R@" + std::to_string(k)].push_back(
                    oracle::recall(list.video_ids, relevant, k));
                sums["P@" + std::to_string(k)].push_back(
                    oracle::precision(list.video_ids, relevant, k));
            }
            sums["NDCG@10"].push_back(oracle::ndcg(list.video_ids, relevant, 10));
            sums["MRR"].push_back(oracle::mrr(list.video_ids, relevant));
            sums["NDCG"].push_back(oracle::ndcg(list.video_ids, relevant, videos));
            sums["MAP"].push_back(oracle::average_precision(list.video_ids, relevant));
            ranks.push_back(
                static_cast<double>(oracle::first_rank(list.video_ids, relevant)));
            lists.push_back(std::move(list));
        }

        evr::EvalOptions options;
        options.ks = {1, 5, 10};
        options.ndcg_k = 10;
        auto report = evr::evaluate_run(lists, judgments, options);

        auto mean_of = [](const std::vector<double>& xs) {
            double s = 0.0;
            for (double x : xs) s += x;
            return s / static_cast<double>(xs.size());
        };
        for (const auto& name : {"R@1", "R@5", "R@10", "P@1", "P@5", "P@10", "MRR",
                                 "NDCG", "NDCG@10", "MAP"}) {
            check.require(std::abs(report.values.at(name) - mean_of(sums.at(name))) <=
                              1e-9,
                          std::string(name) + " differs from reference evaluation");
        }
        check.require(std::abs(report.values.at("MnR") - mean_of(ranks)) <= 1e-9,
                      "MnR differs from reference evaluation");
        std::sort(ranks.begin(), ranks.end());
        const double median = ranks.size() % 2 == 1
                                  ? ranks[ranks.size() / 2]
                                  : 0.5 * (ranks[ranks.size() / 2 - 1] +
                                           ranks[ranks.size() / 2]);
        check.require(std::abs(report.values.at("MdR") - median) <= 1e-9,
                      "MdR differs from reference evaluation");
    }
    const double elapsed = seconds_since(start);
    check.require(elapsed < 5.0, "runtime " + std::to_string(elapsed) + "s exceeds 5s");
    return check;
}

// ---------------------------------------------------------------------------
// 3. Component-score equivalence and hallucination robustness
// ---------------------------------------------------------------------------

Check criterion_component_scores() {
    Check check;
    Rng rng(10003);

    for (int instance = 0; instance < 100 && check.ok; ++instance) {
        const std::size_t dim = rng.between(2, 8);
        auto query = rng.token_sequence(rng.between(1, 6), dim);
        std::vector<evr::TokenEmbeddingSequence> descs;
        std::vector<std::vector<std::vector<double>>> desc_tokens;
        for (std::size_t c = 0, n = rng.between(1, 6); c < n; ++c) {
            descs.push_back(rng.token_sequence(rng.between(1, 5), dim));
            desc_tokens.push_back(descs.back().tokens);
        }
        const double got = evr::score_query_vs_descriptions(query, descs);
        const double expected = oracle::query_vs_descriptions(query.tokens, desc_tokens);
        check.require(std::abs(got - expected) <= 1e-12,
                      "query/description score differs from loop oracle");

        std::vector<evr::TokenEmbeddingSequence> events;
        std::vector<std::vector<std::vector<double>>> event_tokens;
        for (std::size_t e = 0, n = rng.between(1, 5); e < n; ++e) {
            events.push_back(rng.token_sequence(rng.between(1, 4), dim));
            event_tokens.push_back(events.back().tokens);
        }
        evr::AggregationPolicy global_max;
        const double got_events =
            evr::score_events_vs_descriptions(events, descs, global_max);
        const double expected_events = oracle::events_vs_descriptions(
            event_tokens, desc_tokens, oracle::Agg::Max, 1, oracle::Agg::Max, 1);
        check.require(std::abs(got_events - expected_events) <= 1e-12,
                      "event/description score differs from loop oracle");
    }

    // hallucination robustness: a dominated extra event never changes the
    // global-max score
    int dominated_cases = 0;
    for (int instance = 0; dominated_cases < 100 && instance < 1000 && check.ok;
         ++instance) {
        const std::size_t dim = rng.between(2, 6);
        std::vector<evr::TokenEmbeddingSequence> descs;
        for (std::size_t c = 0, n = rng.between(1, 4); c < n; ++c) {
            descs.push_back(rng.token_sequence(rng.between(1, 4), dim));
        }
        std::vector<evr::TokenEmbeddingSequence> events;
        for (std::size_t e = 0, n = rng.between(1, 4); e < n; ++e) {
            events.push_back(rng.token_sequence(rng.between(1, 4), dim));
        }
        evr::AggregationPolicy global_max;
        const double before = evr::score_events_vs_descriptions(events, descs, global_max);

        auto hallucinated = rng.token_sequence(rng.between(1, 4), dim);
        const double alone = evr::score_events_vs_descriptions(
            std::vector{hallucinated}, descs, global_max);
        if (alone > before) continue;  // not dominated; skip
        ++dominated_cases;

        events.push_back(hallucinated);
        const double after = evr::score_events_vs_descriptions(events, descs, global_max);
        check.require(after == before, "dominated event changed the global-max score");
    }
    check.require(dominated_cases >= 100,
                  "only " + std::to_string(dominated_cases) + " dominated cases sampled");
    return check;
}

// ---------------------------------------------------------------------------
// 4. Shift invariance of every fusion rule
// ---------------------------------------------------------------------------

Check criterion_shift_invariance() {
    Check check;
    Rng rng(10004);
    for (int instance = 0; instance < 100 && check.ok; ++instance) {
        const std::size_t videos = rng.between(2, 30);
        const std::size_t comps = rng.between(1, 5);
        const auto ids = testsupport::video_ids(videos);
        std::vector<evr::ComponentDistribution> base, shifted;
        for (std::size_t c = 0; c < comps; ++c) {
            auto scores = rng.scores(videos, -10.0, 10.0);
            base.push_back(evr::softmax_over_videos(scores));
            const double constant = rng.uniform(-100.0, 100.0);
            for (auto& s : scores) s += constant;
            shifted.push_back(evr::softmax_over_videos(scores));
        }
        for (evr::FusionMethod method : evr::all_fusion_methods()) {
            auto a = evr::fuse(method, base, ids, "q");
            auto b = evr::fuse(method, shifted, ids, "q");
            check.require(a.ranking == b.ranking,
                          std::string("per-component shift changed the ranking for ") +
                              evr::fusion_method_name(method));
        }
    }
    return check;
}

// ---------------------------------------------------------------------------
// 5. End-to-end determinism over the bundled replay fixture
// ---------------------------------------------------------------------------

int run_cli(const std::string& command) { return std::system(command.c_str()); }

Check criterion_end_to_end(const std::string& cli, const fs::path& fixture,
                           const fs::path& scratch) {
    Check check;
    const std::string config = (fixture / "config.json").string();
    const fs::path work1 = scratch / "run1";
    const fs::path work2 = scratch / "run2";
    const fs::path work_noasr = scratch / "run_noasr";

    for (const auto& work : {work1, work2}) {
        const int rc = run_cli("\"" + cli + "\" run --config \"" + config +
                               "\" --work_dir \"" + work.string() + "\" > /dev/null");
        check.require(rc == 0, "CLI run failed with exit code " + std::to_string(rc));
    }
    if (!check.ok) return check;

    for (const char* name : {"rankings.jsonl", "report.json", "report.tsv"}) {
        check.require(evr::read_text_file(work1 / name) ==
                          evr::read_text_file(work2 / name),
                      std::string(name) + " differs between consecutive runs");
    }
    check.require(evr::read_text_file(work1 / "rankings.jsonl") ==
                      evr::read_text_file(fixture / "golden" / "rankings.jsonl"),
                  "rankings.jsonl differs from the frozen golden file");
    check.require(evr::read_text_file(work1 / "report.json") ==
                      evr::read_text_file(fixture / "golden" / "report.json"),
                  "report.json differs from the frozen golden file");

    // audio stage excluded on request, component set still complete
    const int rc = run_cli("\"" + cli + "\" run --config \"" + config +
                           "\" --use_asr false --work_dir \"" + work_noasr.string() +
                           "\" > /dev/null");
    check.require(rc == 0, "CLI run --use_asr false failed");
    if (!check.ok) return check;

    check.require(evr::read_text_file(work_noasr / "transcripts.json") == "[]\n",
                  "audio stage produced transcripts despite --use_asr false");
    auto descriptions =
        nlohmann::json::parse(evr::read_text_file(work_noasr / "descriptions.json"));
    for (const auto& d : descriptions) {
        check.require(!d.contains("transcript"),
                      "description still carries a transcript without the audio stage");
    }
    auto index =
        nlohmann::json::parse(evr::read_text_file(work_noasr / "matrices_index.json"));
    for (const auto& entry : index) {
        check.require(entry.at("components").size() == 5,
                      "component set is not 5 without the audio stage");
    }
    return check;
}

// ---------------------------------------------------------------------------
// 6. Ablation harness with the -Event equivalence oracle
// ---------------------------------------------------------------------------

Check criterion_ablation(const std::string& cli, const fs::path& fixture,
                         const fs::path& scratch) {
    Check check;
    const fs::path work = scratch / "ablate";
    const int rc = run_cli("\"" + cli + "\" ablate --config \"" +
                           (fixture / "config.json").string() + "\" --work_dir \"" +
                           work.string() + "\" > /dev/null");
    check.require(rc == 0, "CLI ablate failed with exit code " + std::to_string(rc));
    if (!check.ok) return check;

    const std::string tsv = evr::read_text_file(work / "ablation.tsv");
    std::size_t lines = 0;
    for (char c : tsv) lines += c == '\n';
    check.require(lines == 1 + 5 * 4, "ablation table has " + std::to_string(lines) +
                                          " lines, expected header + 20 cells");
    for (evr::FusionMethod method : evr::all_fusion_methods()) {
        check.require(tsv.find(evr::fusion_method_name(method)) != std::string::npos,
                      std::string("ablation table missing method ") +
                          evr::fusion_method_name(method));
    }

    // -Event cells equal direct 2-component fusion
    evr::RunConfig config = evr::load_run_config(fixture / "config.json");
    config.work_dir = scratch / "ablate_lib";
    evr::Pipeline pipeline(config);
    auto cells = evr::run_ablation(pipeline, *config.ablate);
    check.require(cells.size() == 20,
                  "library ablation produced " + std::to_string(cells.size()) + " cells");

    auto matrices = pipeline.load_matrices();
    const std::vector<evr::ComponentKind> event_drop = {evr::ComponentKind::PrequelDesc,
                                                        evr::ComponentKind::CurrentDesc,
                                                        evr::ComponentKind::SequelDesc};
    int event_cells = 0;
    for (const auto& cell : cells) {
        if (cell.drops != event_drop) continue;
        ++event_cells;
        std::vector<evr::ScoreComponentMatrix> reduced = matrices;
        for (auto& m : reduced) {
            for (evr::ComponentKind kind : event_drop) m.components.erase(kind);
        }
        auto direct = evr::fuse_matrices(reduced, cell.method, {},
                                         pipeline.config().rrf_rank_constant);
        for (std::size_t q = 0; q < direct.size(); ++q) {
            check.require(direct[q].fused.ranking == cell.rankings[q].fused.ranking,
                          "-Event ranking differs from direct 2-component fusion");
            for (std::size_t v = 0; v < direct[q].fused.scores.size(); ++v) {
                check.require(std::abs(direct[q].fused.scores[v] -
                                       cell.rankings[q].fused.scores[v]) <= 1e-12,
                              "-Event fused score differs beyond 1e-12");
            }
        }
    }
    check.require(event_cells == 5, "expected a -Event cell per fusion method");
    return check;
}

// ---------------------------------------------------------------------------
// 7. Frame sampling formula, exhaustive
// ---------------------------------------------------------------------------

Check criterion_frame_sampling() {
    Check check;
    const auto start = Clock::now();
    for (std::size_t n = 1; n <= 1000 && check.ok; ++n) {
        for (std::size_t k : {2, 4, 8, 16, 32, 64}) {
            auto indices = evr::sample_frames_uniform(n, k);
            if (n <= k) {
                check.require(indices.size() == n, "n <= k must keep every frame");
                for (std::size_t i = 0; i < indices.size(); ++i) {
                    check.require(indices[i] == i, "n <= k indices must be 0..n-1");
                }
            } else {
                check.require(indices.size() == k, "n > k must sample exactly k frames");
                for (std::size_t i = 0; i < k; ++i) {
                    check.require(indices[i] == i * n / k,
                                  "index differs from floor(i*n/k)");
                    if (i > 0) {
                        check.require(indices[i] > indices[i - 1],
                                      "indices must be strictly increasing");
                    }
                }
                check.require(indices.back() < n, "index out of range");
            }
        }
    }
    const double elapsed = seconds_since(start);
    check.require(elapsed < 1.0, "runtime " + std::to_string(elapsed) + "s exceeds 1s");
    return check;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::fprintf(stderr, "usage: evr_acceptance <evr-cli> <fixture-dir>\n");
        return 64;
    }
    const std::string cli = argv[1];
    const fs::path fixture = fs::absolute(argv[2]);
    const fs::path scratch =
        fs::temp_directory_path() / ("evr_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(scratch);

    struct Criterion {
        const char* description;
        std::function<Check()> run;
    };
    const std::vector<Criterion> criteria = {
        {"fusion rules reproduce the brute-force reference on 200 seeded instances",
         criterion_fusion_oracle},
        {"metrics match the reference evaluation on 100 seeded runs plus analytic fixtures",
         criterion_metric_oracle},
        {"component scores equal nested-loop oracles; dominated events never change them",
         criterion_component_scores},
        {"per-component score shifts leave every fusion ranking identical",
         criterion_shift_invariance},
        {"replayed end-to-end runs are byte-identical and honor --use_asr false",
         [&] { return criterion_end_to_end(cli, fixture, scratch); }},
        {"ablation sweep is complete and -Event equals direct 2-component fusion",
         [&] { return criterion_ablation(cli, fixture, scratch); }},
        {"uniform frame sampling matches the index formula for all N<=1000",
         criterion_frame_sampling},
    };

    int passed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check check;
        try {
            check = criteria[i].run();
        } catch (const std::exception& e) {
            check.ok = false;
            check.detail = std::string("exception: ") + e.what();
        }
        if (check.ok) {
            ++passed;
            std::printf("PASS  criterion %zu: %s\n", i + 1, criteria[i].description);
        } else {
            std::printf("FAIL  criterion %zu: %s (%s)\n", i + 1, criteria[i].description,
                        check.detail.c_str());
        }
    }
    std::printf("acceptance: %d/%zu criteria passed\n", passed, criteria.size());

    std::error_code ec;
    fs::remove_all(scratch, ec);
    return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
