#include "evr/similarity.hpp"

#include <algorithm>
#include <cmath>

#include "evr/errors.hpp"

namespace evr {

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) {
        throw InvalidInputError("cosine: dimension mismatch (" + std::to_string(u.size()) +
                                " vs " + std::to_string(v.size()) + ")");
    }
    if (u.empty()) throw InvalidInputError("cosine: empty vectors");

    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if (nu == 0.0 || nv == 0.0) throw InvalidInputError("cosine: zero vector");

    double value = dot / (std::sqrt(nu) * std::sqrt(nv));
    return std::clamp(value, -1.0, 1.0);
}

Vec mean_pool(const std::vector<Vec>& frames) {
    if (frames.empty()) throw InvalidInputError("mean_pool: empty frame list");
    const std::size_t dim = frames.front().size();
    Vec out(dim, 0.0);
    for (const Vec& f : frames) {
        if (f.size() != dim) throw InvalidInputError("mean_pool: dimension mismatch");
        for (std::size_t i = 0; i < dim; ++i) out[i] += f[i];
    }
    const double inv = 1.0 / static_cast<double>(frames.size());
    for (double& x : out) x *= inv;
    return out;
}

double query_video_score(std::span<const double> query_embedding, const VideoRecord& video) {
    Vec pooled = mean_pool(video.frame_embeddings);
    return 100.0 * cosine(query_embedding, pooled);
}

double late_interaction_sim(const TokenEmbeddingSequence& query,
                            const TokenEmbeddingSequence& doc) {
    if (query.tokens.empty() || doc.tokens.empty()) {
        throw InvalidInputError("late_interaction_sim: empty token sequence");
    }
    double sum = 0.0;
    for (const Vec& q : query.tokens) {
        double best = -1.0;
        for (const Vec& d : doc.tokens) {
            best = std::max(best, cosine(q, d));
        }
        sum += best;
    }
    return sum / static_cast<double>(query.tokens.size());
}

}  // namespace evr
