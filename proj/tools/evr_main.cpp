// evr: zero-shot text-to-video retrieval driver.
//
// Subcommands mirror the pipeline stages (validate, decompose, describe,
// transcribe, score, fuse, evaluate), plus end-to-end `run` and the
// `ablate` sweep. Every stage persists its artifact under the configured
// work_dir, so later stages can run from an earlier invocation's output.

#include <cstdio>
#include <exception>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "evr/corpus_io.hpp"
#include "evr/errors.hpp"
#include "evr/pipeline.hpp"

namespace {

struct Overrides {
    std::optional<std::string> work_dir;
    std::optional<std::string> mode;
    std::optional<std::string> fusion;
    std::optional<bool> use_asr;
    std::optional<bool> use_refined_events;
    std::optional<std::size_t> frame_count;
    std::optional<std::size_t> workers;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> group_by;
    std::vector<std::string> drop_components;
};

void add_override_flags(CLI::App* cmd, Overrides& o) {
    cmd->add_option("--work_dir", o.work_dir, "Override the work directory");
    cmd->add_option("--mode", o.mode, "replay or live")
        ->check(CLI::IsMember({"replay", "live"}));
    cmd->add_option("--fusion", o.fusion,
                    "inv_entropy, mean, max, rrf, or neg_exp_entropy");
    cmd->add_option("--use_asr", o.use_asr, "Enable/disable the audio stage");
    cmd->add_option("--use_refined_events", o.use_refined_events,
                    "Score with refined (true) or raw (false) event strings");
    cmd->add_option("--frame_count", o.frame_count, "Frames sampled per video");
    cmd->add_option("--workers", o.workers, "Bounded worker pool size");
    cmd->add_option("--seed", o.seed, "Seed recorded for fixture generation");
    cmd->add_option("--group_by", o.group_by, "none, language, or category")
        ->check(CLI::IsMember({"none", "language", "category"}));
    cmd->add_option("--drop", o.drop_components,
                    "Component kinds dropped before fusion (repeatable)");
}

evr::RunConfig make_config(const std::string& config_path, const Overrides& o) {
    evr::RunConfig config = evr::load_run_config(config_path);
    if (o.work_dir) config.work_dir = *o.work_dir;
    if (o.mode) config.mode = *o.mode == "live" ? evr::RunMode::Live : evr::RunMode::Replay;
    if (o.fusion) config.fusion = evr::fusion_method_from_name(*o.fusion);
    if (o.use_asr) config.use_asr = *o.use_asr;
    if (o.use_refined_events) config.use_refined_events = *o.use_refined_events;
    if (o.frame_count) config.frame_count = *o.frame_count;
    if (o.workers) config.workers = *o.workers;
    if (o.seed) config.seed = *o.seed;
    if (o.group_by) config.group_by = evr::group_by_from_name(*o.group_by);
    if (!o.drop_components.empty()) {
        config.drop_components.clear();
        for (const auto& name : o.drop_components) {
            config.drop_components.push_back(evr::component_kind_from_name(name));
        }
    }
    evr::validate_config(config);
    return config;
}

int cmd_validate(const evr::RunConfig& config) {
    evr::Pipeline pipeline(config);
    auto violations = pipeline.validate();
    if (violations.empty()) {
        std::printf("corpus ok: %zu queries, %zu videos\n", pipeline.corpus().queries.size(),
                    pipeline.corpus().videos.size());
        return 0;
    }
    for (const auto& v : violations) {
        std::printf("%s\t%s\t%s\n", v.code.c_str(), v.subject.c_str(), v.detail.c_str());
    }
    std::fprintf(stderr, "%zu violations\n", violations.size());
    return 1;
}

int cmd_run(const evr::RunConfig& config) {
    evr::Pipeline pipeline(config);
    evr::RunResult result = pipeline.run();
    std::printf("%s", evr::report_to_tsv(result.report).c_str());
    std::printf("artifacts written to %s\n", config.work_dir.string().c_str());
    return 0;
}

int cmd_ablate(const evr::RunConfig& config) {
    evr::Pipeline pipeline(config);
    evr::AblationGrid grid =
        config.ablate ? *config.ablate : evr::default_ablation_grid();
    auto cells = evr::run_ablation(pipeline, grid);
    const std::string tsv = evr::ablation_to_tsv(cells);
    evr::write_text_file(config.work_dir / "ablation.tsv", tsv);
    evr::write_text_file(config.work_dir / "ablation.json",
                         evr::ablation_to_json_string(cells));
    std::printf("%s", tsv.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"zero-shot text-to-video retrieval: decomposition, scoring, fusion, eval"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides overrides;

    const char* stage_names[] = {"validate",   "decompose", "describe",
                                 "transcribe", "score",     "fuse",
                                 "evaluate",   "run",       "ablate"};
    const char* stage_help[] = {
        "Check corpus consistency and print violations",
        "Expand queries into prequel/current/sequel events",
        "Caption sampled frames and summarize videos",
        "Run the ASR -> translate -> refine chain",
        "Build the per-query component score matrices",
        "Fuse persisted matrices into rankings",
        "Evaluate persisted rankings against judgments",
        "Execute the full pipeline end to end",
        "Sweep fusion methods / component drops / aggregation policies",
    };
    for (std::size_t i = 0; i < 9; ++i) {
        CLI::App* cmd = app.add_subcommand(stage_names[i], stage_help[i]);
        cmd->add_option("--config", config_path, "Run configuration JSON")
            ->required()
            ->check(CLI::ExistingFile);
        add_override_flags(cmd, overrides);
    }

    CLI11_PARSE(app, argc, argv);
    const std::string sub = app.get_subcommands().front()->get_name();

    try {
        evr::RunConfig config = make_config(config_path, overrides);
        if (sub == "validate") return cmd_validate(config);
        if (sub == "run") return cmd_run(config);
        if (sub == "ablate") return cmd_ablate(config);

        evr::Pipeline pipeline(config);
        if (sub == "decompose") {
            auto artifacts = pipeline.stage_decompose();
            std::printf("decomposed %zu queries\n", artifacts.size());
        } else if (sub == "transcribe") {
            auto artifacts = pipeline.stage_transcribe();
            std::printf("transcribed %zu videos\n", artifacts.size());
        } else if (sub == "describe") {
            auto transcripts = config.use_asr ? pipeline.load_transcripts()
                                              : std::vector<evr::TranscriptArtifact>{};
            auto sets = pipeline.stage_describe(transcripts);
            std::printf("described %zu videos\n", sets.size());
        } else if (sub == "score") {
            auto matrices =
                pipeline.stage_score(pipeline.load_decompositions(),
                                     pipeline.load_descriptions());
            std::printf("scored %zu queries\n", matrices.size());
        } else if (sub == "fuse") {
            auto rankings = pipeline.stage_fuse(pipeline.load_matrices());
            std::printf("fused %zu rankings\n", rankings.size());
        } else if (sub == "evaluate") {
            auto report = pipeline.stage_evaluate(pipeline.load_rankings());
            std::printf("%s", evr::report_to_tsv(report).c_str());
        }
        return 0;
    } catch (const evr::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "unexpected error: %s\n", e.what());
        return 3;
    }
}
