#include "evr/types.hpp"

#include <algorithm>
#include <cmath>

#include "evr/errors.hpp"

namespace evr {

const char* event_kind_name(EventKind kind) {
    switch (kind) {
        case EventKind::Prequel: return "prequel";
        case EventKind::Current: return "current";
        case EventKind::Sequel: return "sequel";
    }
    return "unknown";
}

const std::vector<std::string>& EventDecomposition::events(EventKind kind) const {
    switch (kind) {
        case EventKind::Prequel: return prequel;
        case EventKind::Current: return current;
        case EventKind::Sequel: return sequel;
    }
    return current;
}

const std::vector<std::string>& EventDecomposition::refined(EventKind kind) const {
    switch (kind) {
        case EventKind::Prequel: return refined_prequel;
        case EventKind::Current: return refined_current;
        case EventKind::Sequel: return refined_sequel;
    }
    return refined_current;
}

std::vector<std::string> DescriptionSet::flattened() const {
    std::vector<std::string> out = frame_captions;
    if (video_caption) out.push_back(*video_caption);
    if (transcript) out.push_back(*transcript);
    return out;
}

const char* component_kind_name(ComponentKind kind) {
    switch (kind) {
        case ComponentKind::QueryVideo: return "QueryVideo";
        case ComponentKind::QueryDesc: return "QueryDesc";
        case ComponentKind::PrequelDesc: return "PrequelDesc";
        case ComponentKind::CurrentDesc: return "CurrentDesc";
        case ComponentKind::SequelDesc: return "SequelDesc";
    }
    return "unknown";
}

ComponentKind component_kind_from_name(const std::string& name) {
    for (ComponentKind kind : kAllComponents) {
        if (name == component_kind_name(kind)) return kind;
    }
    throw InvalidInputError("unknown component kind: " + name);
}

const VideoRecord* Corpus::find_video(const std::string& id) const {
    for (const auto& v : videos) {
        if (v.id == id) return &v;
    }
    return nullptr;
}

namespace {

constexpr double kNormTolerance = 1e-6;

void check_embeddings(const VideoRecord& video, std::size_t dim,
                      std::vector<Violation>& out) {
    for (std::size_t i = 0; i < video.frame_embeddings.size(); ++i) {
        const Vec& e = video.frame_embeddings[i];
        if (e.size() != dim) {
            out.push_back({"embedding-dim-mismatch", video.id,
                           "frame " + std::to_string(i) + " has dimension " +
                               std::to_string(e.size()) + ", corpus declares " +
                               std::to_string(dim)});
            continue;
        }
        double sq = 0.0;
        bool finite = true;
        for (double x : e) {
            if (!std::isfinite(x)) finite = false;
            sq += x * x;
        }
        if (!finite) {
            out.push_back({"embedding-not-finite", video.id,
                           "frame " + std::to_string(i) + " contains a non-finite value"});
            continue;
        }
        double norm = std::sqrt(sq);
        if (std::abs(norm - 1.0) > kNormTolerance) {
            out.push_back({"embedding-norm", video.id,
                           "frame " + std::to_string(i) + " has norm " +
                               std::to_string(norm) + ", expected 1 within 1e-6"});
        }
    }
}

}  // namespace

std::vector<Violation> validate_corpus(const Corpus& corpus) {
    std::vector<Violation> out;

    std::set<std::string> query_ids;
    for (const auto& q : corpus.queries) {
        if (q.text.empty()) {
            out.push_back({"empty-query-text", q.id, "query text must be non-empty"});
        }
        if (!query_ids.insert(q.id).second) {
            out.push_back({"duplicate-query-id", q.id, "query id appears more than once"});
        }
    }

    std::set<std::string> video_ids;
    for (const auto& v : corpus.videos) {
        if (!video_ids.insert(v.id).second) {
            out.push_back({"duplicate-video-id", v.id, "video id appears more than once"});
        }
        if (corpus.embedding_dim == 0 && !v.frame_embeddings.empty()) {
            out.push_back({"embedding-dim-undeclared", v.id,
                           "corpus declares no embedding dimension but video has embeddings"});
        } else {
            check_embeddings(v, corpus.embedding_dim, out);
        }
    }

    std::set<std::string> described;
    for (const auto& d : corpus.descriptions) {
        if (!video_ids.count(d.video_id)) {
            out.push_back({"dangling-video-id", d.video_id,
                           "description set references unknown video"});
        }
        if (!described.insert(d.video_id).second) {
            out.push_back({"duplicate-description-set", d.video_id,
                           "video has more than one description set"});
        }
        if (d.flattened().empty()) {
            out.push_back({"empty-description-set", d.video_id,
                           "flattened description list is empty"});
        }
    }

    for (const auto& [query_id, videos] : corpus.judgments.relevant) {
        if (!query_ids.count(query_id)) {
            out.push_back({"dangling-query-id", query_id,
                           "judgment references unknown query"});
        }
        if (videos.empty()) {
            out.push_back({"empty-judgment", query_id,
                           "judged query has no relevant videos"});
        }
        for (const auto& vid : videos) {
            if (!video_ids.count(vid)) {
                out.push_back({"dangling-video-id", vid,
                               "judgment for query " + query_id +
                                   " references unknown video"});
            }
        }
    }

    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace evr
