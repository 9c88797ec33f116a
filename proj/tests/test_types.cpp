#include "doctest.h"
#include "evr/types.hpp"
#include "support/rng.hpp"

#include <algorithm>

using namespace evr;

namespace {

Corpus consistent_fixture() {
    Corpus corpus;
    corpus.embedding_dim = 3;
    corpus.queries = {{"q1", "storm damage", std::string("en"), std::string("disaster")},
                      {"q2", "street food", std::string("en"), std::string("social")}};
    for (const char* id : {"v1", "v2", "v3"}) {
        VideoRecord v;
        v.id = id;
        v.frame_count = 30;
        v.has_audio = true;
        v.frame_embeddings = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}};
        corpus.videos.push_back(v);
    }
    for (const char* id : {"v1", "v2", "v3"}) {
        DescriptionSet d;
        d.video_id = id;
        d.frame_captions = {"caption one", "caption two"};
        d.video_caption = "a short summary";
        corpus.descriptions.push_back(d);
    }
    corpus.judgments.relevant["q1"] = {"v1"};
    corpus.judgments.relevant["q2"] = {"v2", "v3"};
    return corpus;
}

}  // namespace

TEST_CASE("flattening order is captions, then summary, then transcript") {
    DescriptionSet d;
    d.video_id = "v";
    d.frame_captions = {"c1", "c2"};
    d.video_caption = "summary";
    d.transcript = "transcript";
    CHECK(d.flattened() == std::vector<std::string>{"c1", "c2", "summary", "transcript"});

    d.video_caption.reset();
    CHECK(d.flattened() == std::vector<std::string>{"c1", "c2", "transcript"});

    d.frame_captions.clear();
    d.transcript.reset();
    CHECK(d.flattened().empty());
}

TEST_CASE("consistent corpus validates clean") {
    CHECK(validate_corpus(consistent_fixture()).empty());
}

TEST_CASE("judgment naming an unknown video is reported") {
    auto corpus = consistent_fixture();
    corpus.judgments.relevant["q1"].insert("vX");
    auto violations = validate_corpus(corpus);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].code == "dangling-video-id");
    CHECK(violations[0].subject == "vX");
}

TEST_CASE("norm violations are per frame") {
    auto corpus = consistent_fixture();
    corpus.videos[1].frame_embeddings[0] = {0.5, 0.0, 0.0};
    auto violations = validate_corpus(corpus);
    REQUIRE(violations.size() == 1);
    CHECK(violations[0].code == "embedding-norm");
    CHECK(violations[0].subject == "v2");
}

TEST_CASE("dimension mismatch, duplicates, empty sets") {
    auto corpus = consistent_fixture();
    corpus.videos[0].frame_embeddings.push_back({1.0, 0.0});  // dim 2 vs 3
    corpus.queries.push_back({"q1", "duplicate id", {}, {}});
    corpus.descriptions.push_back({"v3", {}, {}, {}});  // second set for v3, empty

    auto violations = validate_corpus(corpus);
    auto has = [&](const std::string& code) {
        return std::any_of(violations.begin(), violations.end(),
                           [&](const Violation& v) { return v.code == code; });
    };
    CHECK(has("embedding-dim-mismatch"));
    CHECK(has("duplicate-query-id"));
    CHECK(has("duplicate-description-set"));
    CHECK(has("empty-description-set"));
}

TEST_CASE("empty judgment and query text violations") {
    auto corpus = consistent_fixture();
    corpus.judgments.relevant["q2"].clear();
    corpus.queries[0].text.clear();
    auto violations = validate_corpus(corpus);
    auto has = [&](const std::string& code) {
        return std::any_of(violations.begin(), violations.end(),
                           [&](const Violation& v) { return v.code == code; });
    };
    CHECK(has("empty-judgment"));
    CHECK(has("empty-query-text"));
}

TEST_CASE("validation is idempotent and order-independent") {
    testsupport::Rng rng(17);
    auto corpus = consistent_fixture();
    corpus.judgments.relevant["q1"].insert("vX");
    corpus.videos[2].frame_embeddings[1] = {2.0, 0.0, 0.0};

    const auto baseline = validate_corpus(corpus);
    CHECK(validate_corpus(corpus) == baseline);

    for (int trial = 0; trial < 10; ++trial) {
        auto shuffled = corpus;
        rng.shuffle(shuffled.queries);
        rng.shuffle(shuffled.videos);
        rng.shuffle(shuffled.descriptions);
        CHECK(validate_corpus(shuffled) == baseline);
    }
}

TEST_CASE("component kind names round-trip") {
    for (ComponentKind kind : kAllComponents) {
        CHECK(component_kind_from_name(component_kind_name(kind)) == kind);
    }
    CHECK_THROWS(component_kind_from_name("NotAKind"));
}

TEST_CASE("event kind accessors") {
    EventDecomposition d;
    d.prequel = {"a"};
    d.current = {"b"};
    d.sequel = {"c"};
    d.refined_prequel = {"ra"};
    d.refined_current = {"rb"};
    d.refined_sequel = {"rc"};
    CHECK(d.events(EventKind::Prequel) == std::vector<std::string>{"a"});
    CHECK(d.refined(EventKind::Sequel) == std::vector<std::string>{"rc"});
}
