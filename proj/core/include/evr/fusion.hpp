#pragma once

#include <span>
#include <string>
#include <vector>

#include "evr/types.hpp"

namespace evr {

// One component's scores turned into a probability distribution over the
// corpus, together with its Shannon entropy (natural log, 0*ln 0 := 0).
struct ComponentDistribution {
    std::vector<double> probs;
    double entropy = 0.0;

    bool operator==(const ComponentDistribution&) const = default;
};

// Numerically stable softmax over one component's per-video scores.
// Throws InvalidInputError on empty or non-finite input.
ComponentDistribution softmax_over_videos(std::span<const double> scores);

enum class FusionMethod { InvEntropy, Mean, Max, Rrf, NegExpEntropy };

const char* fusion_method_name(FusionMethod method);
FusionMethod fusion_method_from_name(const std::string& name);
std::vector<FusionMethod> all_fusion_methods();

// All rules take one distribution per component, every vector aligned
// with video_order, and produce fused scores plus the derived ordering
// (descending score, ties broken by ascending video id).

// S_v = sum_i P_i,v / max(H(P_i), eps): confident (low-entropy) components
// dominate. eps = 1e-12 guards numerically one-hot distributions.
FusedRanking fuse_inverse_entropy(std::span<const ComponentDistribution> dists,
                                  const std::vector<std::string>& video_order,
                                  const std::string& query_id);

// S_v = (1/n) sum_i P_i,v.
FusedRanking fuse_mean(std::span<const ComponentDistribution> dists,
                       const std::vector<std::string>& video_order,
                       const std::string& query_id);

// S_v = max_i P_i,v.
FusedRanking fuse_max(std::span<const ComponentDistribution> dists,
                      const std::vector<std::string>& video_order,
                      const std::string& query_id);

// S_v = sum_i 1 / (rank_constant + Rank_i(v)) with 1-based per-component
// ranks. rank_constant = 0 is the plain reciprocal-rank form; a positive
// constant gives the common smoothed variant for comparison runs.
FusedRanking fuse_rrf(std::span<const ComponentDistribution> dists,
                      const std::vector<std::string>& video_order,
                      const std::string& query_id, double rank_constant = 0.0);

// S_v = sum_i exp(-H(P_i)) * P_i,v.
FusedRanking fuse_neg_exp_entropy(std::span<const ComponentDistribution> dists,
                                  const std::vector<std::string>& video_order,
                                  const std::string& query_id);

FusedRanking fuse(FusionMethod method, std::span<const ComponentDistribution> dists,
                  const std::vector<std::string>& video_order, const std::string& query_id,
                  double rrf_rank_constant = 0.0);

// Ordering shared by every rule: indices sorted by descending score, ties
// by ascending video id.
std::vector<std::size_t> rank_descending(std::span<const double> scores,
                                         const std::vector<std::string>& video_order);

}  // namespace evr
