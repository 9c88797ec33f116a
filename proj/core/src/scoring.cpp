#include "evr/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <thread>

#include "evr/corpus_io.hpp"
#include "evr/errors.hpp"
#include "evr/parallel.hpp"
#include "nlohmann/json.hpp"

namespace evr {

void parallel_for(std::size_t n, std::size_t workers,
                  const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    workers = std::min(workers, n);
    if (workers <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::mutex mu;
    std::exception_ptr first_error;
    std::vector<std::thread> threads;
    threads.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        threads.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += workers) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(mu);
                    if (!first_error) first_error = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : threads) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

const char* aggregate_name(Aggregate a) {
    switch (a) {
        case Aggregate::Max: return "max";
        case Aggregate::Mean: return "mean";
        case Aggregate::MeanTopK: return "mean_top_k";
    }
    return "unknown";
}

Aggregate aggregate_from_name(const std::string& name) {
    if (name == "max") return Aggregate::Max;
    if (name == "mean") return Aggregate::Mean;
    if (name == "mean_top_k") return Aggregate::MeanTopK;
    throw InvalidInputError("unknown aggregation: " + name);
}

double aggregate_values(const AggregationRule& rule, std::vector<double> values) {
    if (values.empty()) throw InvalidInputError("aggregate: empty value list");
    switch (rule.kind) {
        case Aggregate::Max:
            return *std::max_element(values.begin(), values.end());
        case Aggregate::Mean: {
            double sum = 0.0;
            for (double v : values) sum += v;
            return sum / static_cast<double>(values.size());
        }
        case Aggregate::MeanTopK: {
            if (rule.top_k < 1) throw InvalidInputError("aggregate: top_k must be >= 1");
            std::sort(values.begin(), values.end(), std::greater<>());
            const std::size_t take = std::min(rule.top_k, values.size());
            double sum = 0.0;
            for (std::size_t i = 0; i < take; ++i) sum += values[i];
            return sum / static_cast<double>(take);
        }
    }
    throw InvalidInputError("aggregate: unknown rule");
}

double score_query_vs_descriptions(const TokenEmbeddingSequence& query_tokens,
                                   const std::vector<TokenEmbeddingSequence>& desc_tokens) {
    if (desc_tokens.empty()) {
        throw InvalidInputError("score_query_vs_descriptions: empty description set");
    }
    double best = -1.0;
    for (const auto& d : desc_tokens) {
        best = std::max(best, late_interaction_sim(query_tokens, d));
    }
    return best;
}

double score_query_vs_descriptions(const QueryRecord& query, const DescriptionSet& descs,
                                   EmbeddingProvider& provider) {
    const auto flattened = descs.flattened();
    if (flattened.empty()) {
        throw InvalidInputError("score_query_vs_descriptions: empty description set");
    }
    TokenEmbeddingSequence q = provider.embed_text(query.text);
    std::vector<TokenEmbeddingSequence> ds;
    ds.reserve(flattened.size());
    for (const auto& text : flattened) ds.push_back(provider.embed_text(text));
    return score_query_vs_descriptions(q, ds);
}

double score_events_vs_descriptions(const std::vector<TokenEmbeddingSequence>& event_tokens,
                                    const std::vector<TokenEmbeddingSequence>& desc_tokens,
                                    const AggregationPolicy& policy) {
    if (event_tokens.empty()) {
        throw InvalidInputError("score_events_vs_descriptions: empty event list");
    }
    if (desc_tokens.empty()) {
        throw InvalidInputError("score_events_vs_descriptions: empty description set");
    }
    std::vector<double> per_event;
    per_event.reserve(event_tokens.size());
    for (const auto& e : event_tokens) {
        std::vector<double> per_caption;
        per_caption.reserve(desc_tokens.size());
        for (const auto& d : desc_tokens) {
            per_caption.push_back(late_interaction_sim(e, d));
        }
        per_event.push_back(aggregate_values(policy.over_captions, std::move(per_caption)));
    }
    return aggregate_values(policy.over_events, std::move(per_event));
}

double score_events_vs_descriptions(const std::vector<std::string>& events,
                                    const DescriptionSet& descs,
                                    const AggregationPolicy& policy,
                                    EmbeddingProvider& provider) {
    if (events.empty()) {
        throw InvalidInputError("score_events_vs_descriptions: empty event list");
    }
    const auto flattened = descs.flattened();
    if (flattened.empty()) {
        throw InvalidInputError("score_events_vs_descriptions: empty description set");
    }
    std::vector<TokenEmbeddingSequence> es, ds;
    es.reserve(events.size());
    for (const auto& e : events) es.push_back(provider.embed_text(e));
    ds.reserve(flattened.size());
    for (const auto& d : flattened) ds.push_back(provider.embed_text(d));
    return score_events_vs_descriptions(es, ds, policy);
}

namespace {

bool is_description_component(ComponentKind kind) {
    return kind != ComponentKind::QueryVideo;
}

struct VideoCell {
    std::map<ComponentKind, double> values;
    std::optional<std::string> error;
};

}  // namespace

ScoreMatrixResult build_score_matrix(const QueryRecord& query,
                                     const EventDecomposition& decomposition,
                                     const std::vector<VideoRecord>& videos,
                                     const std::vector<DescriptionSet>& descriptions,
                                     EmbeddingProvider& provider,
                                     const ScoreMatrixOptions& options) {
    if (options.components.empty()) {
        throw InvalidInputError("build_score_matrix: no components requested");
    }
    if (videos.empty()) throw InvalidInputError("build_score_matrix: no videos");

    bool needs_descriptions = false;
    for (ComponentKind kind : options.components) {
        if (is_description_component(kind)) needs_descriptions = true;
    }

    auto events_for = [&](EventKind kind) -> const std::vector<std::string>& {
        return options.use_refined_events ? decomposition.refined(kind)
                                          : decomposition.events(kind);
    };
    auto requested = [&](ComponentKind kind) {
        return std::find(options.components.begin(), options.components.end(), kind) !=
               options.components.end();
    };

    // A requested event component without events cannot produce a vector.
    for (auto [component, event_kind] :
         {std::pair{ComponentKind::PrequelDesc, EventKind::Prequel},
          std::pair{ComponentKind::CurrentDesc, EventKind::Current},
          std::pair{ComponentKind::SequelDesc, EventKind::Sequel}}) {
        if (requested(component) && events_for(event_kind).empty()) {
            throw InvalidInputError(std::string("build_score_matrix: component ") +
                                    component_kind_name(component) +
                                    " requested but query " + query.id + " has no " +
                                    event_kind_name(event_kind) + " events");
        }
    }

    // Query-side embeddings are computed once per matrix.
    std::optional<Vec> query_sentence;
    std::optional<TokenEmbeddingSequence> query_tokens;
    std::map<ComponentKind, std::vector<TokenEmbeddingSequence>> event_tokens;
    if (requested(ComponentKind::QueryVideo)) {
        query_sentence = provider.embed_query_sentence(query.text);
    }
    if (requested(ComponentKind::QueryDesc)) {
        query_tokens = provider.embed_text(query.text);
    }
    for (auto [component, event_kind] :
         {std::pair{ComponentKind::PrequelDesc, EventKind::Prequel},
          std::pair{ComponentKind::CurrentDesc, EventKind::Current},
          std::pair{ComponentKind::SequelDesc, EventKind::Sequel}}) {
        if (!requested(component)) continue;
        std::vector<TokenEmbeddingSequence> toks;
        for (const auto& text : events_for(event_kind)) {
            toks.push_back(provider.embed_text(text));
        }
        event_tokens[component] = std::move(toks);
    }

    std::map<std::string, const DescriptionSet*> desc_by_video;
    for (const auto& d : descriptions) desc_by_video[d.video_id] = &d;

    std::vector<VideoCell> cells(videos.size());
    const std::size_t workers =
        provider.thread_safe() ? std::max<std::size_t>(options.workers, 1) : 1;

    parallel_for(videos.size(), workers, [&](std::size_t i) {
        const VideoRecord& video = videos[i];
        VideoCell& cell = cells[i];
        try {
            std::vector<TokenEmbeddingSequence> desc_tokens;
            if (needs_descriptions) {
                auto it = desc_by_video.find(video.id);
                if (it == desc_by_video.end()) {
                    cell.error = "no description set";
                    return;
                }
                const auto flattened = it->second->flattened();
                if (flattened.empty()) {
                    cell.error = "empty description set";
                    return;
                }
                desc_tokens.reserve(flattened.size());
                for (const auto& text : flattened) {
                    desc_tokens.push_back(provider.embed_text(text));
                }
            }
            for (ComponentKind kind : options.components) {
                double value = 0.0;
                switch (kind) {
                    case ComponentKind::QueryVideo:
                        value = query_video_score(*query_sentence, video);
                        break;
                    case ComponentKind::QueryDesc:
                        value = score_query_vs_descriptions(*query_tokens, desc_tokens);
                        break;
                    case ComponentKind::PrequelDesc:
                    case ComponentKind::CurrentDesc:
                    case ComponentKind::SequelDesc:
                        value = score_events_vs_descriptions(event_tokens.at(kind),
                                                             desc_tokens, options.policy);
                        break;
                }
                if (!std::isfinite(value)) {
                    cell.error = std::string("non-finite ") + component_kind_name(kind);
                    return;
                }
                cell.values[kind] = value;
            }
        } catch (const ReplayMissError&) {
            throw;  // replay misses are never demoted to per-video errors
        } catch (const Error& e) {
            cell.error = e.what();
        }
    });

    ScoreMatrixResult result;
    result.matrix.query_id = query.id;
    for (std::size_t i = 0; i < videos.size(); ++i) {
        if (cells[i].error) {
            result.video_errors.push_back({videos[i].id, *cells[i].error});
            continue;
        }
        result.matrix.video_order.push_back(videos[i].id);
        for (ComponentKind kind : options.components) {
            result.matrix.components[kind].push_back(cells[i].values.at(kind));
        }
    }

    for (ComponentKind kind : options.components) {
        auto it = result.matrix.components.find(kind);
        if (it == result.matrix.components.end() || it->second.empty()) {
            throw InvalidInputError(std::string("build_score_matrix: component ") +
                                    component_kind_name(kind) +
                                    " could not be computed for any video");
        }
    }
    return result;
}

namespace {

void append_f64_le(std::string& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof(bits));
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
    }
}

double read_f64_le(const unsigned char* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t(p[i]) << (8 * i);
    double d;
    std::memcpy(&d, &bits, sizeof(d));
    return d;
}

}  // namespace

void save_score_matrices(const std::filesystem::path& bin_path,
                         const std::filesystem::path& index_path,
                         std::span<const ScoreComponentMatrix> matrices) {
    std::string blob;
    nlohmann::json index = nlohmann::json::array();
    for (const auto& m : matrices) {
        nlohmann::json entry;
        entry["query_id"] = m.query_id;
        entry["video_order"] = m.video_order;
        entry["offset"] = blob.size();
        std::vector<std::string> names;
        for (const auto& [kind, values] : m.components) {
            names.emplace_back(component_kind_name(kind));
            for (double v : values) append_f64_le(blob, v);
        }
        entry["components"] = names;
        index.push_back(std::move(entry));
    }
    write_text_file(bin_path, blob);
    write_text_file(index_path, index.dump(2) + "\n");
}

std::vector<ScoreComponentMatrix> load_score_matrices(
    const std::filesystem::path& bin_path, const std::filesystem::path& index_path) {
    const std::string blob = read_text_file(bin_path);
    nlohmann::json index = nlohmann::json::parse(read_text_file(index_path));
    std::vector<ScoreComponentMatrix> out;
    for (const auto& entry : index) {
        ScoreComponentMatrix m;
        m.query_id = entry.at("query_id").get<std::string>();
        for (const auto& v : entry.at("video_order")) {
            m.video_order.push_back(v.get<std::string>());
        }
        std::size_t offset = entry.at("offset").get<std::size_t>();
        const std::size_t v_count = m.video_order.size();
        for (const auto& name : entry.at("components")) {
            ComponentKind kind = component_kind_from_name(name.get<std::string>());
            if (offset + v_count * 8 > blob.size()) {
                throw ParseError("score matrix blob too short for query " + m.query_id);
            }
            std::vector<double> values(v_count);
            const auto* p = reinterpret_cast<const unsigned char*>(blob.data()) + offset;
            for (std::size_t i = 0; i < v_count; ++i) {
                values[i] = read_f64_le(p);
                p += 8;
            }
            offset += v_count * 8;
            m.components[kind] = std::move(values);
        }
        out.push_back(std::move(m));
    }
    return out;
}

std::string matrix_to_tsv(const ScoreComponentMatrix& matrix) {
    std::string out = "video_id";
    for (const auto& [kind, values] : matrix.components) {
        out += '\t';
        out += component_kind_name(kind);
    }
    out += '\n';
    char buf[64];
    for (std::size_t v = 0; v < matrix.video_order.size(); ++v) {
        out += matrix.video_order[v];
        for (const auto& [kind, values] : matrix.components) {
            std::snprintf(buf, sizeof(buf), "%.17g", values[v]);
            out += '\t';
            out += buf;
        }
        out += '\n';
    }
    return out;
}

}  // namespace evr
