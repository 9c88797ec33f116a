#include "evr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "evr/errors.hpp"
#include "nlohmann/json.hpp"

namespace evr {

namespace {

std::size_t effective_k(std::size_t k, std::size_t corpus_size) {
    return std::min(k, corpus_size);
}

std::size_t hits_in_top_k(const std::vector<std::string>& ranking,
                          const std::set<std::string>& relevant, std::size_t k) {
    std::size_t hits = 0;
    for (std::size_t i = 0; i < k; ++i) {
        if (relevant.count(ranking[i])) ++hits;
    }
    return hits;
}

void check_inputs(const std::vector<std::string>& ranking,
                  const std::set<std::string>& relevant, std::size_t k) {
    if (k < 1) throw InvalidInputError("metric: k must be >= 1");
    if (relevant.empty()) throw InvalidInputError("metric: empty relevant set");
    if (ranking.empty()) throw InvalidInputError("metric: empty ranking");
}

double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    if (n % 2 == 1) return xs[n / 2];
    return 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

std::string fmt_fixed(double value, int decimals) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals, value);
    return buf;
}

}  // namespace

RankedList to_ranked_list(const FusedRanking& fused,
                          const std::vector<std::string>& video_order) {
    RankedList out;
    out.query_id = fused.query_id;
    out.video_ids.reserve(fused.ranking.size());
    for (std::size_t idx : fused.ranking) out.video_ids.push_back(video_order[idx]);
    return out;
}

double recall_at_k(const std::vector<std::string>& ranking,
                   const std::set<std::string>& relevant, std::size_t k) {
    check_inputs(ranking, relevant, k);
    const std::size_t ke = effective_k(k, ranking.size());
    return static_cast<double>(hits_in_top_k(ranking, relevant, ke)) /
           static_cast<double>(relevant.size());
}

double precision_at_k(const std::vector<std::string>& ranking,
                      const std::set<std::string>& relevant, std::size_t k) {
    check_inputs(ranking, relevant, k);
    const std::size_t ke = effective_k(k, ranking.size());
    return static_cast<double>(hits_in_top_k(ranking, relevant, ke)) /
           static_cast<double>(ke);
}

std::size_t first_relevant_rank(const std::vector<std::string>& ranking,
                                const std::set<std::string>& relevant) {
    check_inputs(ranking, relevant, 1);
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (relevant.count(ranking[i])) return i + 1;
    }
    throw InvalidInputError("first_relevant_rank: no relevant item in ranking");
}

double mean_rank_over_relevant(const std::vector<std::string>& ranking,
                               const std::set<std::string>& relevant) {
    check_inputs(ranking, relevant, 1);
    double sum = 0.0;
    std::size_t found = 0;
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (relevant.count(ranking[i])) {
            sum += static_cast<double>(i + 1);
            ++found;
        }
    }
    if (found == 0) throw InvalidInputError("mean_rank_over_relevant: no relevant item");
    return sum / static_cast<double>(found);
}

double mrr(const std::vector<std::string>& ranking, const std::set<std::string>& relevant) {
    return 1.0 / static_cast<double>(first_relevant_rank(ranking, relevant));
}

double ndcg_at_k(const std::vector<std::string>& ranking,
                 const std::set<std::string>& relevant, std::size_t k) {
    check_inputs(ranking, relevant, k);
    const std::size_t ke = effective_k(k, ranking.size());
    double dcg = 0.0;
    for (std::size_t i = 0; i < ke; ++i) {
        if (relevant.count(ranking[i])) dcg += 1.0 / std::log2(static_cast<double>(i + 2));
    }
    const std::size_t ideal = std::min(ke, relevant.size());
    double idcg = 0.0;
    for (std::size_t i = 0; i < ideal; ++i) {
        idcg += 1.0 / std::log2(static_cast<double>(i + 2));
    }
    return dcg / idcg;
}

double average_precision(const std::vector<std::string>& ranking,
                         const std::set<std::string>& relevant) {
    check_inputs(ranking, relevant, 1);
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t i = 0; i < ranking.size(); ++i) {
        if (relevant.count(ranking[i])) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(relevant.size());
}

GroupBy group_by_from_name(const std::string& name) {
    if (name == "none" || name.empty()) return GroupBy::None;
    if (name == "language") return GroupBy::Language;
    if (name == "category") return GroupBy::Category;
    throw InvalidInputError("unknown group_by: " + name);
}

namespace {

struct PerQueryValues {
    std::map<std::string, double> values;
};

PerQueryValues compute_query_metrics(const std::vector<std::string>& ranking,
                                     const std::set<std::string>& relevant,
                                     const EvalOptions& options) {
    PerQueryValues out;
    for (std::size_t k : options.ks) {
        out.values["R@" + std::to_string(k)] = recall_at_k(ranking, relevant, k);
        out.values["P@" + std::to_string(k)] = precision_at_k(ranking, relevant, k);
    }
    out.values["MRR"] = mrr(ranking, relevant);
    out.values["NDCG"] = ndcg_at_k(ranking, relevant, ranking.size());
    if (options.ndcg_k) {
        out.values["NDCG@" + std::to_string(*options.ndcg_k)] =
            ndcg_at_k(ranking, relevant, *options.ndcg_k);
    }
    out.values["MAP"] = average_precision(ranking, relevant);
    double rank = options.rank_aggregation == RankAggregation::FirstRelevant
                      ? static_cast<double>(first_relevant_rank(ranking, relevant))
                      : mean_rank_over_relevant(ranking, relevant);
    out.values["rank"] = rank;
    return out;
}

std::vector<std::string> metric_order_for(const EvalOptions& options) {
    std::vector<std::string> order;
    for (std::size_t k : options.ks) order.push_back("R@" + std::to_string(k));
    for (std::size_t k : options.ks) order.push_back("P@" + std::to_string(k));
    order.push_back("MRR");
    order.push_back("NDCG");
    if (options.ndcg_k) order.push_back("NDCG@" + std::to_string(*options.ndcg_k));
    order.push_back("MAP");
    order.push_back("MnR");
    order.push_back("MdR");
    return order;
}

MetricReport aggregate(const std::vector<PerQueryValues>& rows, const EvalOptions& options) {
    MetricReport report;
    report.ks = options.ks;
    report.metric_order = metric_order_for(options);
    report.judged_queries = rows.size();
    if (rows.empty()) return report;

    std::vector<double> ranks;
    ranks.reserve(rows.size());
    for (const auto& row : rows) ranks.push_back(row.values.at("rank"));

    for (const auto& name : report.metric_order) {
        if (name == "MnR") {
            double sum = 0.0;
            for (double r : ranks) sum += r;
            report.values["MnR"] = sum / static_cast<double>(ranks.size());
        } else if (name == "MdR") {
            report.values["MdR"] = median(ranks);
        } else {
            double sum = 0.0;
            for (const auto& row : rows) sum += row.values.at(name);
            report.values[name] = sum / static_cast<double>(rows.size());
        }
    }
    return report;
}

}  // namespace

MetricReport evaluate_run(const std::vector<RankedList>& rankings,
                          const RelevanceJudgments& judgments, const EvalOptions& options) {
    std::vector<PerQueryValues> all_rows;
    std::map<std::string, std::vector<PerQueryValues>> group_rows;
    std::size_t unjudged = 0;
    std::set<std::size_t> clamped;
    for (const auto& ranked : rankings) {
        auto it = judgments.relevant.find(ranked.query_id);
        if (it == judgments.relevant.end()) {
            ++unjudged;
            continue;
        }
        PerQueryValues row = compute_query_metrics(ranked.video_ids, it->second, options);
        for (std::size_t k : options.ks) {
            if (k > ranked.video_ids.size()) clamped.insert(k);
        }
        if (options.group_by != GroupBy::None) {
            std::string group = "(none)";
            auto lit = judgments.labels.find(ranked.query_id);
            if (lit != judgments.labels.end()) {
                const auto& label = options.group_by == GroupBy::Language
                                        ? lit->second.language
                                        : lit->second.category;
                if (label) group = *label;
            }
            group_rows[group].push_back(row);
        }
        all_rows.push_back(std::move(row));
    }

    if (all_rows.empty()) {
        throw InvalidInputError("evaluate_run: no judged queries in the run");
    }

    MetricReport report = aggregate(all_rows, options);
    report.unjudged_queries = unjudged;
    report.clamped_ks.assign(clamped.begin(), clamped.end());
    for (const auto& [group, rows] : group_rows) {
        report.groups[group] = aggregate(rows, options);
    }
    return report;
}

namespace {

bool rendered_as_rate(const std::string& name) {
    return name.rfind("R@", 0) == 0 || name.rfind("P@", 0) == 0 ||
           name.rfind("NDCG", 0) == 0 || name == "MAP";
}

nlohmann::json report_values_json(const MetricReport& report) {
    nlohmann::json values = nlohmann::json::object();
    for (const auto& [name, value] : report.values) values[name] = value;
    return values;
}

}  // namespace

std::string report_to_json_string(const MetricReport& report) {
    nlohmann::json j;
    j["judged_queries"] = report.judged_queries;
    j["unjudged_queries"] = report.unjudged_queries;
    j["ks"] = report.ks;
    j["clamped_ks"] = report.clamped_ks;
    j["metric_order"] = report.metric_order;
    j["values"] = report_values_json(report);
    if (!report.groups.empty()) {
        nlohmann::json groups = nlohmann::json::object();
        for (const auto& [name, sub] : report.groups) {
            nlohmann::json g;
            g["judged_queries"] = sub.judged_queries;
            g["values"] = report_values_json(sub);
            groups[name] = g;
        }
        j["groups"] = groups;
    }
    return j.dump(2) + "\n";
}

std::string report_to_tsv(const MetricReport& report) {
    std::vector<std::vector<std::string>> table;
    std::vector<std::string> header;
    header.push_back("group");
    for (const auto& name : report.metric_order) header.push_back(name);
    table.push_back(header);

    auto render_row = [&](const std::string& label, const MetricReport& r) {
        std::vector<std::string> row;
        row.push_back(label);
        for (const auto& name : r.metric_order) {
            double value = r.values.at(name);
            if (rendered_as_rate(name)) {
                row.push_back(fmt_fixed(value * 100.0, 2));
            } else {
                row.push_back(fmt_fixed(value, 2));
            }
        }
        return row;
    };

    table.push_back(render_row("all", report));
    for (const auto& [name, sub] : report.groups) table.push_back(render_row(name, sub));

    std::vector<std::size_t> widths(header.size(), 0);
    for (const auto& row : table) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            widths[c] = std::max(widths[c], row[c].size());
        }
    }
    std::string out;
    for (const auto& row : table) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            std::string cell = row[c];
            cell.resize(widths[c], ' ');
            out += cell;
            if (c + 1 < row.size()) out += '\t';
        }
        out += '\n';
    }
    return out;
}

}  // namespace evr
