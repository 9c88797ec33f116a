#include "evr/fusion.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evr/errors.hpp"

namespace evr {

namespace {

constexpr double kEntropyFloor = 1e-12;

void check_aligned(std::span<const ComponentDistribution> dists,
                   const std::vector<std::string>& video_order) {
    if (dists.empty()) throw InvalidInputError("fuse: no distributions");
    for (const auto& d : dists) {
        if (d.probs.size() != video_order.size()) {
            throw InvalidInputError("fuse: distribution length " +
                                    std::to_string(d.probs.size()) +
                                    " does not match video count " +
                                    std::to_string(video_order.size()));
        }
    }
}

FusedRanking make_ranking(std::vector<double> scores,
                          const std::vector<std::string>& video_order,
                          const std::string& query_id) {
    FusedRanking out;
    out.query_id = query_id;
    out.ranking = rank_descending(scores, video_order);
    out.scores = std::move(scores);
    return out;
}

}  // namespace

ComponentDistribution softmax_over_videos(std::span<const double> scores) {
    if (scores.empty()) throw InvalidInputError("softmax: empty score vector");
    for (double s : scores) {
        if (!std::isfinite(s)) throw InvalidInputError("softmax: non-finite score");
    }

    const double max_score = *std::max_element(scores.begin(), scores.end());
    ComponentDistribution out;
    out.probs.resize(scores.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        out.probs[i] = std::exp(scores[i] - max_score);
        sum += out.probs[i];
    }
    for (double& p : out.probs) p /= sum;

    double h = 0.0;
    for (double p : out.probs) {
        if (p > 0.0) h -= p * std::log(p);
    }
    out.entropy = h;
    return out;
}

const char* fusion_method_name(FusionMethod method) {
    switch (method) {
        case FusionMethod::InvEntropy: return "inv_entropy";
        case FusionMethod::Mean: return "mean";
        case FusionMethod::Max: return "max";
        case FusionMethod::Rrf: return "rrf";
        case FusionMethod::NegExpEntropy: return "neg_exp_entropy";
    }
    return "unknown";
}

FusionMethod fusion_method_from_name(const std::string& name) {
    for (FusionMethod m : all_fusion_methods()) {
        if (name == fusion_method_name(m)) return m;
    }
    throw InvalidInputError("unknown fusion method: " + name);
}

std::vector<FusionMethod> all_fusion_methods() {
    return {FusionMethod::InvEntropy, FusionMethod::Mean, FusionMethod::Max,
            FusionMethod::Rrf, FusionMethod::NegExpEntropy};
}

std::vector<std::size_t> rank_descending(std::span<const double> scores,
                                         const std::vector<std::string>& video_order) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return video_order[a] < video_order[b];
    });
    return idx;
}

FusedRanking fuse_inverse_entropy(std::span<const ComponentDistribution> dists,
                                  const std::vector<std::string>& video_order,
                                  const std::string& query_id) {
    check_aligned(dists, video_order);
    std::vector<double> scores(video_order.size(), 0.0);
    for (const auto& d : dists) {
        const double weight = 1.0 / std::max(d.entropy, kEntropyFloor);
        for (std::size_t v = 0; v < scores.size(); ++v) scores[v] += weight * d.probs[v];
    }
    return make_ranking(std::move(scores), video_order, query_id);
}

FusedRanking fuse_mean(std::span<const ComponentDistribution> dists,
                       const std::vector<std::string>& video_order,
                       const std::string& query_id) {
    check_aligned(dists, video_order);
    std::vector<double> scores(video_order.size(), 0.0);
    for (const auto& d : dists) {
        for (std::size_t v = 0; v < scores.size(); ++v) scores[v] += d.probs[v];
    }
    const double inv = 1.0 / static_cast<double>(dists.size());
    for (double& s : scores) s *= inv;
    return make_ranking(std::move(scores), video_order, query_id);
}

FusedRanking fuse_max(std::span<const ComponentDistribution> dists,
                      const std::vector<std::string>& video_order,
                      const std::string& query_id) {
    check_aligned(dists, video_order);
    std::vector<double> scores(video_order.size(), -1.0);
    for (const auto& d : dists) {
        for (std::size_t v = 0; v < scores.size(); ++v) {
            scores[v] = std::max(scores[v], d.probs[v]);
        }
    }
    return make_ranking(std::move(scores), video_order, query_id);
}

FusedRanking fuse_rrf(std::span<const ComponentDistribution> dists,
                      const std::vector<std::string>& video_order,
                      const std::string& query_id, double rank_constant) {
    check_aligned(dists, video_order);
    std::vector<double> scores(video_order.size(), 0.0);
    for (const auto& d : dists) {
        std::vector<std::size_t> order = rank_descending(d.probs, video_order);
        for (std::size_t pos = 0; pos < order.size(); ++pos) {
            scores[order[pos]] += 1.0 / (rank_constant + static_cast<double>(pos + 1));
        }
    }
    return make_ranking(std::move(scores), video_order, query_id);
}

FusedRanking fuse_neg_exp_entropy(std::span<const ComponentDistribution> dists,
                                  const std::vector<std::string>& video_order,
                                  const std::string& query_id) {
    check_aligned(dists, video_order);
    std::vector<double> scores(video_order.size(), 0.0);
    for (const auto& d : dists) {
        const double weight = std::exp(-d.entropy);
        for (std::size_t v = 0; v < scores.size(); ++v) scores[v] += weight * d.probs[v];
    }
    return make_ranking(std::move(scores), video_order, query_id);
}

FusedRanking fuse(FusionMethod method, std::span<const ComponentDistribution> dists,
                  const std::vector<std::string>& video_order, const std::string& query_id,
                  double rrf_rank_constant) {
    switch (method) {
        case FusionMethod::InvEntropy: return fuse_inverse_entropy(dists, video_order, query_id);
        case FusionMethod::Mean: return fuse_mean(dists, video_order, query_id);
        case FusionMethod::Max: return fuse_max(dists, video_order, query_id);
        case FusionMethod::Rrf: return fuse_rrf(dists, video_order, query_id, rrf_rank_constant);
        case FusionMethod::NegExpEntropy:
            return fuse_neg_exp_entropy(dists, video_order, query_id);
    }
    throw InvalidInputError("fuse: unknown method");
}

}  // namespace evr
