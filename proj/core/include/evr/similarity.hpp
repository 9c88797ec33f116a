#pragma once

#include <span>
#include <string>
#include <vector>

#include "evr/types.hpp"

namespace evr {

// Cosine similarity, clamped to [-1, 1] against rounding.
// Throws InvalidInputError on dimension mismatch or a zero vector.
double cosine(std::span<const double> u, std::span<const double> v);

// Coordinate-wise arithmetic mean. Not re-normalized: a degenerate zero
// pool surfaces as an explicit cosine error instead of NaN downstream.
Vec mean_pool(const std::vector<Vec>& frames);

// 100 x cosine(query, mean of the video's frame embeddings); range
// [-100, 100] so it is comparable with the other score components.
double query_video_score(std::span<const double> query_embedding, const VideoRecord& video);

// Token-level representation of a text, one unit vector per token.
struct TokenEmbeddingSequence {
    std::vector<Vec> tokens;
    std::string source_text;

    bool operator==(const TokenEmbeddingSequence&) const = default;
};

// Late-interaction similarity: per query token, the maximum cosine
// against all document tokens, averaged over query tokens. The mean (not
// sum) keeps scores in [-1, 1] and comparable across query lengths.
double late_interaction_sim(const TokenEmbeddingSequence& query,
                            const TokenEmbeddingSequence& doc);

// Text embedding backend. Frame embeddings arrive precomputed via the
// corpus; this only covers text. Implementations declare whether they may
// be called from multiple threads; the orchestrator serializes otherwise.
class EmbeddingProvider {
  public:
    virtual ~EmbeddingProvider() = default;

    virtual TokenEmbeddingSequence embed_text(const std::string& text) = 0;
    virtual Vec embed_query_sentence(const std::string& text) = 0;
    virtual bool thread_safe() const = 0;
};

}  // namespace evr
