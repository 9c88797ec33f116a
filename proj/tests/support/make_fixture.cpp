// Regenerates tests/fixtures/minicorpus from the tables in
// fixture_data.hpp: corpus files, run config, replay stores (recorded by
// running the real pipeline against the scripted clients, once with and
// once without the audio stage), and the golden outputs of a replayed run.
//
//   evr_make_fixture <fixture_dir> <prompt_dir>
//
// Everything written is deterministic, so regeneration is diffable.

#include <cstdio>
#include <filesystem>

#include "evr/corpus_io.hpp"
#include "evr/pipeline.hpp"
#include "nlohmann/json.hpp"
#include "support/fake_provider.hpp"
#include "support/fixture_data.hpp"

namespace fs = std::filesystem;
namespace fixture = testsupport::fixture;
using nlohmann::json;

namespace {

evr::Corpus build_corpus(testsupport::HashEmbeddingProvider& provider) {
    evr::Corpus corpus;
    corpus.embedding_dim = fixture::kDim;
    for (const auto& q : fixture::queries()) {
        corpus.queries.push_back({q.id, q.text, q.language, q.category});
        auto& rel = corpus.judgments.relevant[q.id];
        rel.insert(q.relevant.begin(), q.relevant.end());
        corpus.judgments.labels[q.id] = {q.language, q.category};
    }
    for (const auto& v : fixture::videos()) {
        evr::VideoRecord record;
        record.id = v.id;
        record.frame_count = v.total_frames;
        record.has_audio = v.has_audio;
        // Frames lean toward the related query's sentence embedding so the
        // query/video component is informative, with per-frame noise.
        const evr::Vec anchor = provider.embed_query_sentence(v.bias_query);
        for (std::size_t f = 0; f < 4; ++f) {
            const evr::Vec noise =
                provider.vector_for(v.id + "/frame" + std::to_string(f));
            evr::Vec mixed(fixture::kDim);
            double norm = 0.0;
            for (std::size_t d = 0; d < fixture::kDim; ++d) {
                mixed[d] = 0.75 * anchor[d] + 0.25 * noise[d];
                norm += mixed[d] * mixed[d];
            }
            norm = std::sqrt(norm);
            for (auto& x : mixed) x /= norm;
            // snap to float32 so the binary file round-trips exactly
            for (auto& x : mixed) x = static_cast<double>(static_cast<float>(x));
            record.frame_embeddings.push_back(std::move(mixed));
        }
        corpus.videos.push_back(std::move(record));
    }
    return corpus;
}

void write_config(const fs::path& dir, const fs::path& prompt_dir) {
    json endpoints = {
        {"chat", {{"model", "fixture-chat"}}},
        {"vision", {{"model", "fixture-chat"}}},
        {"asr", {{"model", "fixture-asr"}}},
        {"translate", {{"model", "fixture-mt"}}},
        {"embeddings", {{"model", "hash-embed-8"}}},
    };
    json config = {
        {"manifest", "manifest.json"},
        {"work_dir", "work"},
        {"prompt_dir", fs::relative(prompt_dir, dir).string()},
        {"mode", "replay"},
        {"frame_count", fixture::kFrameCount},
        {"use_asr", true},
        {"use_refined_events", true},
        {"fusion", "inv_entropy"},
        {"metric_ks", {1, 2, 3}},
        {"ndcg_k", 10},
        {"group_by", "category"},
        {"workers", 2},
        {"seed", 7},
        {"endpoints", endpoints},
        {"replay",
         {{"chat", "replay/chat.jsonl"},
          {"embeddings", "replay/embeddings.jsonl"},
          {"asr", "replay/asr.jsonl"},
          {"translate", "replay/translate.jsonl"}}},
        {"ablate",
         {{"fusion", {"inv_entropy", "mean", "max", "rrf", "neg_exp_entropy"}},
          {"drop_components",
           json::array({json::array(),
                        {"PrequelDesc", "CurrentDesc", "SequelDesc"},
                        {"QueryVideo"},
                        {"QueryDesc"}})}}},
    };
    evr::write_text_file(dir / "config.json", config.dump(2) + "\n");
}

// One recording pass: real pipeline, scripted clients, throwaway work dir.
void record_pass(const fs::path& dir, bool use_asr) {
    evr::RunConfig config = evr::load_run_config(dir / "config.json");
    config.use_asr = use_asr;
    config.mode = evr::RunMode::Live;  // clients are injected; nothing is fetched
    config.record_dir = dir / "replay";
    config.work_dir = dir / "tmp_record_work";

    auto chat = fixture::make_chat_script();
    auto asr = fixture::make_asr_script();
    auto translate = fixture::make_translate_script();
    testsupport::HashEmbeddingProvider embeddings(fixture::kDim);

    evr::Pipeline::Clients clients;
    clients.chat = &chat;
    clients.vision = &chat;
    clients.asr = &asr;
    clients.translate = &translate;
    clients.embeddings = &embeddings;

    evr::Pipeline pipeline(std::move(config), &clients);
    pipeline.run();
    fs::remove_all(dir / "tmp_record_work");
}

// Golden outputs come from a genuine replay-mode run over the recorded
// stores, which also proves the stores are complete.
void freeze_golden(const fs::path& dir) {
    evr::RunConfig config = evr::load_run_config(dir / "config.json");
    config.work_dir = dir / "tmp_golden_work";
    evr::Pipeline pipeline(std::move(config));
    pipeline.run();

    fs::create_directories(dir / "golden");
    for (const char* name : {"rankings.jsonl", "report.json", "report.tsv"}) {
        fs::copy_file(dir / "tmp_golden_work" / name, dir / "golden" / name,
                      fs::copy_options::overwrite_existing);
    }
    fs::remove_all(dir / "tmp_golden_work");
}

}  // namespace

int main(int argc, char** argv) {
    if (argc != 3) {
        std::fprintf(stderr, "usage: evr_make_fixture <fixture_dir> <prompt_dir>\n");
        return 64;
    }
    const fs::path dir = fs::absolute(argv[1]);
    const fs::path prompt_dir = fs::absolute(argv[2]);

    fs::create_directories(dir);
    fs::remove_all(dir / "replay");
    fs::remove_all(dir / "golden");
    fs::remove_all(dir / "work");

    testsupport::HashEmbeddingProvider provider(fixture::kDim);
    evr::save_corpus(dir, build_corpus(provider));
    write_config(dir, prompt_dir);

    record_pass(dir, true);
    record_pass(dir, false);
    freeze_golden(dir);

    std::printf("fixture written to %s\n", dir.string().c_str());
    return 0;
}
