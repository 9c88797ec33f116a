#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "evr/types.hpp"

namespace evr {

// A query ranking materialized as video ids, best first.
struct RankedList {
    std::string query_id;
    std::vector<std::string> video_ids;
};

RankedList to_ranked_list(const FusedRanking& fused, const std::vector<std::string>& video_order);

// Per-query metrics. k larger than the corpus is clamped to the corpus
// size (the run report records the clamping).
double recall_at_k(const std::vector<std::string>& ranking,
                   const std::set<std::string>& relevant, std::size_t k);
double precision_at_k(const std::vector<std::string>& ranking,
                      const std::set<std::string>& relevant, std::size_t k);
double mrr(const std::vector<std::string>& ranking, const std::set<std::string>& relevant);

// Binary gains, discount 1/log2(rank + 1), ideal DCG over min(k, |relevant|).
double ndcg_at_k(const std::vector<std::string>& ranking,
                 const std::set<std::string>& relevant, std::size_t k);

double average_precision(const std::vector<std::string>& ranking,
                         const std::set<std::string>& relevant);

// 1-based rank of the first relevant item; the basis of MnR/MdR under the
// default first-hit convention.
std::size_t first_relevant_rank(const std::vector<std::string>& ranking,
                                const std::set<std::string>& relevant);

// Alternative MnR/MdR basis: mean rank over all relevant items.
double mean_rank_over_relevant(const std::vector<std::string>& ranking,
                               const std::set<std::string>& relevant);

enum class RankAggregation { FirstRelevant, MeanOverRelevant };
enum class GroupBy { None, Language, Category };

GroupBy group_by_from_name(const std::string& name);

struct EvalOptions {
    std::vector<std::size_t> ks = {1, 5, 10};
    // NDCG is reported over the full ranking by default; set ndcg_k for a
    // cutoff variant (reported alongside as NDCG@k).
    std::optional<std::size_t> ndcg_k;
    GroupBy group_by = GroupBy::None;
    RankAggregation rank_aggregation = RankAggregation::FirstRelevant;
};

struct MetricReport {
    // Metric name -> macro-averaged value over judged queries. Values are
    // unscaled fractions; rendering multiplies the rate metrics by 100.
    std::map<std::string, double> values;
    std::vector<std::string> metric_order;
    std::vector<std::size_t> ks;
    std::size_t judged_queries = 0;
    std::size_t unjudged_queries = 0;
    std::vector<std::size_t> clamped_ks;  // requested ks beyond corpus size
    std::map<std::string, MetricReport> groups;
};

// Macro-averaged metrics over all judged queries, with optional per-group
// sub-reports. Unjudged queries are excluded and counted. Throws
// InvalidInputError when no query is judged.
MetricReport evaluate_run(const std::vector<RankedList>& rankings,
                          const RelevanceJudgments& judgments, const EvalOptions& options = {});

// Rendering. Rate metrics (R, P, NDCG, MAP) are scaled x100 with two
// decimals; MRR, MnR, MdR stay in natural units.
std::string report_to_json_string(const MetricReport& report);
std::string report_to_tsv(const MetricReport& report);

}  // namespace evr
