#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "evr/similarity.hpp"
#include "evr/types.hpp"

namespace evr {

enum class Aggregate { Max, Mean, MeanTopK };

const char* aggregate_name(Aggregate a);
Aggregate aggregate_from_name(const std::string& name);

struct AggregationRule {
    Aggregate kind = Aggregate::Max;
    std::size_t top_k = 3;  // only used by MeanTopK; fewer items -> average all

    bool operator==(const AggregationRule&) const = default;
};

// How event scores are pooled: inner aggregation over captions per event,
// outer aggregation over events. Default is the global max on both axes.
struct AggregationPolicy {
    AggregationRule over_events;
    AggregationRule over_captions;

    bool operator==(const AggregationPolicy&) const = default;
};

double aggregate_values(const AggregationRule& rule, std::vector<double> values);

// max_c Sim_t(query, description_c) over the flattened description list.
double score_query_vs_descriptions(const QueryRecord& query, const DescriptionSet& descs,
                                   EmbeddingProvider& provider);
double score_query_vs_descriptions(const TokenEmbeddingSequence& query_tokens,
                                   const std::vector<TokenEmbeddingSequence>& desc_tokens);

// Event-side score: per event, aggregate over captions; then aggregate
// over events. Under the default policy this is the global max, which
// bounds the damage of a single hallucinated event.
double score_events_vs_descriptions(const std::vector<std::string>& events,
                                    const DescriptionSet& descs,
                                    const AggregationPolicy& policy,
                                    EmbeddingProvider& provider);
double score_events_vs_descriptions(const std::vector<TokenEmbeddingSequence>& event_tokens,
                                    const std::vector<TokenEmbeddingSequence>& desc_tokens,
                                    const AggregationPolicy& policy);

struct ScoreMatrixOptions {
    AggregationPolicy policy;
    bool use_refined_events = true;
    std::vector<ComponentKind> components{kAllComponents, kAllComponents + 5};
    std::size_t workers = 1;
};

struct VideoScoreError {
    std::string video_id;
    std::string reason;
};

struct ScoreMatrixResult {
    ScoreComponentMatrix matrix;
    std::vector<VideoScoreError> video_errors;  // videos excluded from the matrix
};

// Builds the per-query component matrix over the corpus. Videos whose
// description set is missing or empty are excluded with an error entry
// (when any description-based component is requested); failure to build a
// whole requested component is a hard error.
ScoreMatrixResult build_score_matrix(const QueryRecord& query,
                                     const EventDecomposition& decomposition,
                                     const std::vector<VideoRecord>& videos,
                                     const std::vector<DescriptionSet>& descriptions,
                                     EmbeddingProvider& provider,
                                     const ScoreMatrixOptions& options = {});

// Matrix persistence: component-major float64 little-endian binary plus a
// JSON index, and a TSV rendering for inspection.
void save_score_matrices(const std::filesystem::path& bin_path,
                         const std::filesystem::path& index_path,
                         std::span<const ScoreComponentMatrix> matrices);
std::vector<ScoreComponentMatrix> load_score_matrices(
    const std::filesystem::path& bin_path, const std::filesystem::path& index_path);
std::string matrix_to_tsv(const ScoreComponentMatrix& matrix);

}  // namespace evr
