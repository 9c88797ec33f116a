#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace evr {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// Query side
// ---------------------------------------------------------------------------

struct QueryRecord {
    std::string id;
    std::string text;  // raw user query
    std::optional<std::string> language;
    std::optional<std::string> category;

    bool operator==(const QueryRecord&) const = default;
};

enum class EventKind { Prequel, Current, Sequel };

const char* event_kind_name(EventKind kind);

// Query expansion into enabling / co-occurring / resulting sub-events,
// plus the facet data used to refine each event into a natural query.
// Each kind holds 1..5 events after a successful decomposition; refined
// lists are index-aligned with their raw counterparts.
struct EventDecomposition {
    std::vector<std::string> prequel;
    std::vector<std::string> current;
    std::vector<std::string> sequel;

    std::optional<std::string> primary_event;
    std::optional<std::string> place;
    std::optional<std::string> time;

    std::vector<std::string> refined_prequel;
    std::vector<std::string> refined_current;
    std::vector<std::string> refined_sequel;

    const std::vector<std::string>& events(EventKind kind) const;
    const std::vector<std::string>& refined(EventKind kind) const;

    bool operator==(const EventDecomposition&) const = default;
};

// ---------------------------------------------------------------------------
// Video side
// ---------------------------------------------------------------------------

struct VideoRecord {
    std::string id;
    std::vector<Vec> frame_embeddings;  // unit vectors, one shared dimension
    std::int64_t frame_count = 0;       // total frames in the source video
    bool has_audio = false;

    bool operator==(const VideoRecord&) const = default;
};

// Per-video text pool: frame captions in temporal order, then the whole
// video summary, then the refined transcript. The flattening order is
// fixed so description indices are stable across runs.
struct DescriptionSet {
    std::string video_id;
    std::vector<std::string> frame_captions;
    std::optional<std::string> video_caption;
    std::optional<std::string> transcript;

    std::vector<std::string> flattened() const;

    bool operator==(const DescriptionSet&) const = default;
};

// ---------------------------------------------------------------------------
// Scores and rankings
// ---------------------------------------------------------------------------

enum class ComponentKind {
    QueryVideo,
    QueryDesc,
    PrequelDesc,
    CurrentDesc,
    SequelDesc,
};

inline constexpr ComponentKind kAllComponents[] = {
    ComponentKind::QueryVideo, ComponentKind::QueryDesc, ComponentKind::PrequelDesc,
    ComponentKind::CurrentDesc, ComponentKind::SequelDesc};

const char* component_kind_name(ComponentKind kind);
ComponentKind component_kind_from_name(const std::string& name);

// Per-query component scores over the corpus: one vector per component
// kind, every vector aligned with video_order.
struct ScoreComponentMatrix {
    std::string query_id;
    std::vector<std::string> video_order;
    std::map<ComponentKind, std::vector<double>> components;

    bool operator==(const ScoreComponentMatrix&) const = default;
};

// Final fused scores and the derived ordering. `ranking[j]` is the index
// into video_order of the j-th ranked video; scores are in video_order.
struct FusedRanking {
    std::string query_id;
    std::vector<double> scores;
    std::vector<std::size_t> ranking;

    bool operator==(const FusedRanking&) const = default;
};

// ---------------------------------------------------------------------------
// Judgments
// ---------------------------------------------------------------------------

struct QueryLabels {
    std::optional<std::string> language;
    std::optional<std::string> category;

    bool operator==(const QueryLabels&) const = default;
};

// Ground truth: each judged query maps to a non-empty set of relevant
// video ids. Single-relevant and multi-relevant datasets share this shape.
struct RelevanceJudgments {
    std::map<std::string, std::set<std::string>> relevant;
    std::map<std::string, QueryLabels> labels;

    bool operator==(const RelevanceJudgments&) const = default;
};

// ---------------------------------------------------------------------------
// Corpus and validation
// ---------------------------------------------------------------------------

struct Corpus {
    std::size_t embedding_dim = 0;
    std::vector<QueryRecord> queries;
    std::vector<VideoRecord> videos;
    std::vector<DescriptionSet> descriptions;
    RelevanceJudgments judgments;

    const VideoRecord* find_video(const std::string& id) const;

    bool operator==(const Corpus&) const = default;
};

struct Violation {
    std::string code;     // stable identifier, e.g. "dangling-video-id"
    std::string subject;  // offending id
    std::string detail;

    bool operator==(const Violation&) const = default;
    auto operator<=>(const Violation&) const = default;
};

// Consistency check over a whole corpus. Violations are data, not
// failures: the result is empty iff the corpus is consistent. Output is
// sorted, so the check is idempotent and order-independent over input
// records.
std::vector<Violation> validate_corpus(const Corpus& corpus);

}  // namespace evr
