#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evr/audio_clients.hpp"
#include "evr/chat_client.hpp"
#include "evr/corpus_io.hpp"
#include "evr/embedding_provider.hpp"
#include "evr/fusion.hpp"
#include "evr/knowledge.hpp"
#include "evr/metrics.hpp"
#include "evr/prompts.hpp"
#include "evr/scoring.hpp"
#include "evr/types.hpp"

namespace evr {

enum class RunMode { Replay, Live };

struct EndpointSettings {
    ChatEndpointConfig chat;    // decomposition, refinement, summaries, transcript merge
    ChatEndpointConfig vision;  // frame captions
    std::string asr_base_url;
    std::string asr_model = "asr-default";
    std::string translate_base_url;
    std::string translate_model = "mt-default";
    std::string embed_base_url;
    std::string embed_model = "embed-default";
};

struct ReplayPaths {
    std::filesystem::path chat;
    std::filesystem::path embeddings;
    std::filesystem::path asr;
    std::filesystem::path translate;
};

// Ablation axes. Empty axes fall back to the run configuration's value;
// a grid whose every axis is empty is an error.
struct AblationGrid {
    std::vector<FusionMethod> fusion_methods;
    std::vector<std::vector<ComponentKind>> component_drops;
    std::vector<AggregationPolicy> policies;
};

// The default ablation sweep: every fusion rule plus the single-component
// family drops (-Event drops all three event components).
AblationGrid default_ablation_grid();

struct RunConfig {
    std::filesystem::path manifest;
    std::filesystem::path work_dir = "work";
    std::filesystem::path prompt_dir;

    std::size_t frame_count = 16;
    bool use_asr = true;
    TranscribeOptions transcribe;
    bool use_refined_events = true;
    AggregationPolicy aggregation;
    FusionMethod fusion = FusionMethod::InvEntropy;
    double rrf_rank_constant = 0.0;
    std::vector<std::size_t> metric_ks = {1, 5, 10};
    std::optional<std::size_t> ndcg_k;
    GroupBy group_by = GroupBy::None;
    RankAggregation rank_aggregation = RankAggregation::FirstRelevant;
    std::vector<ComponentKind> drop_components;  // applied before fusion

    RunMode mode = RunMode::Replay;
    std::uint64_t seed = 0;  // governs synthetic fixture generation only
    std::size_t workers = 1;

    EndpointSettings endpoints;
    ReplayPaths replay;
    std::optional<std::filesystem::path> record_dir;  // live mode: capture replay stores
    std::optional<AblationGrid> ablate;
};

// Reads the single JSON config file; relative paths resolve against the
// config file's directory. Flag overrides are applied by the CLI after
// loading. Throws ConfigError on invariant violations (frame_count >= 1,
// replay mode requires store paths, ...).
RunConfig load_run_config(const std::filesystem::path& config_file);
void validate_config(const RunConfig& config);

// Uniform frame sampling: all indices when the video has at most k
// frames, otherwise floor(i*n/k) for i in 0..k-1 (strictly increasing).
std::vector<std::size_t> sample_frames_uniform(std::size_t total_frames, std::size_t k);

// Conventions tying pipeline stages to adapter references: a frame is
// addressed as "<video_id>#<frame_index>" and a video's audio by its id.
std::string make_frame_ref(const std::string& video_id, std::size_t frame_index);

struct DecompositionArtifact {
    std::string query_id;
    EventDecomposition decomposition;
    // Kinds whose decomposition failed; their components are skipped and
    // the query falls back to the remaining scores.
    std::vector<EventKind> failed_kinds;
};

struct TranscriptArtifact {
    std::string video_id;
    std::optional<std::string> original;  // original-language text, caption context
    std::optional<std::string> refined;   // English text entering the description set
};

struct RankingArtifact {
    FusedRanking fused;
    std::vector<std::string> video_order;
};

struct RunResult {
    std::vector<RankingArtifact> rankings;
    MetricReport report;
};

// Drops the named components from each matrix and fuses the remaining
// distributions. No renormalization happens across components: dropping is
// exactly fusing the survivors.
std::vector<RankingArtifact> fuse_matrices(std::span<const ScoreComponentMatrix> matrices,
                                           FusionMethod method,
                                           std::span<const ComponentKind> drops,
                                           double rrf_rank_constant = 0.0);

std::string rankings_to_jsonl(std::span<const RankingArtifact> rankings);
std::vector<RankingArtifact> rankings_from_jsonl(const std::string& text);

// End-to-end driver. Every stage persists its artifact under work_dir and
// is content-addressed-cached, so reruns reuse everything upstream of a
// config change and a replayed run is byte-identical.
class Pipeline {
  public:
    struct Clients {
        ChatClient* chat = nullptr;
        ChatClient* vision = nullptr;
        AsrClient* asr = nullptr;
        TranslationClient* translate = nullptr;
        EmbeddingProvider* embeddings = nullptr;
    };

    explicit Pipeline(RunConfig config, const Clients* injected = nullptr);

    const RunConfig& config() const { return config_; }
    const Corpus& corpus() const { return corpus_; }
    Diagnostics& diagnostics() { return diagnostics_; }

    std::vector<Violation> validate() const;

    std::vector<DecompositionArtifact> stage_decompose();
    std::vector<TranscriptArtifact> stage_transcribe();
    std::vector<DescriptionSet> stage_describe(
        const std::vector<TranscriptArtifact>& transcripts);
    std::vector<ScoreComponentMatrix> stage_score(
        const std::vector<DecompositionArtifact>& decompositions,
        const std::vector<DescriptionSet>& descriptions,
        const AggregationPolicy* policy_override = nullptr);
    std::vector<RankingArtifact> stage_fuse(
        const std::vector<ScoreComponentMatrix>& matrices);
    MetricReport stage_evaluate(const std::vector<RankingArtifact>& rankings);

    RunResult run();

    // Artifact loaders for running later stages from persisted outputs.
    std::vector<DecompositionArtifact> load_decompositions() const;
    std::vector<TranscriptArtifact> load_transcripts() const;
    std::vector<DescriptionSet> load_descriptions() const;
    std::vector<ScoreComponentMatrix> load_matrices() const;
    std::vector<RankingArtifact> load_rankings() const;

    EvalOptions eval_options() const;

  private:
    friend struct PipelineAccess;

    RunConfig config_;
    Corpus corpus_;
    PromptLibrary prompts_;
    Diagnostics diagnostics_;
    std::shared_ptr<CallLog> call_log_;

    std::unique_ptr<ChatClient> owned_chat_;
    std::unique_ptr<ChatClient> owned_vision_;
    std::unique_ptr<AsrClient> owned_asr_;
    std::unique_ptr<TranslationClient> owned_translate_;
    std::unique_ptr<EmbeddingProvider> owned_embeddings_;
    std::unique_ptr<ChatClient> recording_chat_;
    std::unique_ptr<ChatClient> recording_vision_;
    std::unique_ptr<AsrClient> recording_asr_;
    std::unique_ptr<TranslationClient> recording_translate_;
    std::unique_ptr<EmbeddingProvider> recording_embeddings_;

    ChatClient* chat_ = nullptr;
    ChatClient* vision_ = nullptr;
    AsrClient* asr_ = nullptr;
    TranslationClient* translate_ = nullptr;
    EmbeddingProvider* embeddings_ = nullptr;
};

struct AblationCell {
    FusionMethod method;
    std::vector<ComponentKind> drops;
    AggregationPolicy policy;
    MetricReport report;
    std::vector<RankingArtifact> rankings;
};

std::string drop_label(std::span<const ComponentKind> drops);
std::string policy_label(const AggregationPolicy& policy);

// Cartesian sweep over the grid axes. Each cell reuses the cached score
// matrices for its policy, then re-fuses and re-evaluates.
std::vector<AblationCell> run_ablation(Pipeline& pipeline, const AblationGrid& grid);

std::string ablation_to_tsv(std::span<const AblationCell> cells);
std::string ablation_to_json_string(std::span<const AblationCell> cells);

}  // namespace evr
