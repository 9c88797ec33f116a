#pragma once

// The mini corpus behind tests/fixtures/minicorpus: two queries, three
// videos, with scripted model behavior for every pipeline stage. The
// fixture generator records these through the real pipeline into replay
// stores; unit tests reuse the same tables to assert against fixture
// contents.

#include <string>
#include <vector>

#include "support/scripted_clients.hpp"

namespace testsupport::fixture {

struct QuerySpec {
    std::string id;
    std::string text;
    std::string language;
    std::string category;
    std::vector<std::string> relevant;
    std::vector<std::string> prequel;
    std::vector<std::string> current;
    std::vector<std::string> sequel;
    std::string primary_event;  // empty = NOT AVAILABLE
    std::string place;
    std::string time;
    std::string refine_suffix;  // refined = event + suffix
};

struct VideoSpec {
    std::string id;
    std::int64_t total_frames;
    bool has_audio;
    std::string bias_query;  // sentence embedding this video's frames lean toward
    std::vector<std::pair<std::size_t, std::string>> captions;  // frame index -> text
    std::string summary;
    // audio chain (ignored when has_audio is false)
    std::string asr_original;
    std::string asr_english;
    std::string translator_english;
    std::string refined_transcript;  // empty = refiner says Not Available
};

inline const std::vector<QuerySpec>& queries() {
    static const std::vector<QuerySpec> specs = {
        {"q1",
         "2018 Anchorage earthquake damage",
         "en",
         "disaster",
         {"v1"},
         {"seismic tremors shaking buildings", "ground cracking along roads"},
         {"buildings collapsing in anchorage", "people evacuating office buildings",
          "debris falling onto streets"},
         {"rescue teams searching rubble", "cracked highways closed to traffic"},
         "Earthquake",
         "Anchorage, USA",
         "2018",
         " in Anchorage, USA, 2018"},
        {"q2",
         "street food market stalls at night",
         "ko",
         "social",
         {"v2", "v3"},
         {"vendors setting up food stalls"},
         {"crowds walking between market stalls", "vendors cooking street food"},
         {"vendors packing up at night"},
         "Night market",
         "",
         "night",
         " at a night market"},
    };
    return specs;
}

inline const std::vector<VideoSpec>& videos() {
    static const std::vector<VideoSpec> specs = {
        {"v1",
         40,
         true,
         "2018 Anchorage earthquake damage",
         {{0, "buildings shaking as the earthquake begins"},
          {10, "people evacuating office buildings in anchorage"},
          {20, "debris falling onto streets downtown"},
          {30, "rescue teams searching rubble after the earthquake"}},
         "an earthquake in anchorage damages buildings and rescue teams respond",
         "terremoto en anchorage dana edificios",
         "earthquake in anchorage damages buildings",
         "an earthquake in anchorage is damaging buildings",
         "a reporter describes the anchorage earthquake damaging buildings"},
        {"v2",
         32,
         true,
         "street food market stalls at night",
         {{0, "vendors setting up food stalls at the market"},
          {8, "crowds walking between market stalls at night"},
          {16, "vendors cooking street food on grills"},
          {24, "customers eating noodles at plastic tables"}},
         "a busy night market where vendors cook street food for crowds",
         "sijang eumsik sori",
         "market food sounds",
         "sounds of food at the market",
         ""},  // refiner verdict: Not Available
        {"v3",
         3,  // fewer frames than the sampling budget
         false,
         "street food market stalls at night",
         {{0, "a street vendor lighting a charcoal grill"},
          {1, "skewers of meat cooking over flames"},
          {2, "a line of customers waiting at the stall"}},
         "a street vendor cooks skewers for waiting customers",
         "",
         "",
         "",
         ""},
    };
    return specs;
}

inline constexpr std::size_t kDim = 8;
inline constexpr std::size_t kFrameCount = 4;  // sampling budget in config.json

// Scripted chat covering decomposition, facets, refinement, captions,
// summaries, and transcript merging for every query/video above.
inline ScriptedChatClient make_chat_script() {
    ScriptedChatClient chat("fixture-chat");
    for (const auto& q : queries()) {
        auto numbered = [](const std::vector<std::string>& events) {
            std::string body;
            for (std::size_t i = 0; i < events.size(); ++i) {
                body += std::to_string(i + 1) + ". " + events[i] + "\n";
            }
            return body;
        };
        chat.add({"previous events", q.text},
                 "EXPLANATION: enabling events for the query.\nEVENTS:\n" +
                     numbered(q.prequel));
        chat.add({"decompose the ongoing event", q.text},
                 "EXPLANATION: observable sub-events.\nEVENTS:\n" + numbered(q.current));
        chat.add({"outcome of this ongoing event", q.text},
                 "EXPLANATION: resulting events.\nEVENTS:\n" + numbered(q.sequel));
        chat.add({"primary event", q.text},
                 q.primary_event.empty()
                     ? "EXPLANATION: nothing concrete.\nEVENTS: NOT AVAILABLE\n"
                     : "EXPLANATION: one main event.\nEVENTS:\n1. " + q.primary_event +
                           "\n");
        chat.add({"extract any locations", q.text},
                 q.place.empty()
                     ? "EXPLANATION: no location given.\nLOCATION INFORMATION: NOT "
                       "AVAILABLE\n"
                     : "EXPLANATION: a location is named.\nLOCATION INFORMATION: " +
                           q.place + "\n");
        chat.add({"dates, times, or years", q.text},
                 q.time.empty()
                     ? "EXPLANATION: no time given.\nTEMPORAL INFORMATION: NOT AVAILABLE\n"
                     : "EXPLANATION: a time reference exists.\nTEMPORAL INFORMATION: " +
                           q.time + "\n");
        for (const auto* events : {&q.prequel, &q.current, &q.sequel}) {
            for (const auto& event : *events) {
                chat.add({"Base Query: " + event},
                         "EXPLANATION: facets merged.\nREFINED QUERY: " + event +
                             q.refine_suffix + "\n");
            }
        }
    }
    for (const auto& v : videos()) {
        for (const auto& [index, caption] : v.captions) {
            chat.add(ScriptedChatClient::Rule{
                {}, v.id + "#" + std::to_string(index), caption});
        }
        chat.add({"## Frame 1 Description\n\n" + v.captions.front().second}, v.summary);
        if (v.has_audio) {
            chat.add({"## Original Transcript:\n\n" + v.asr_original},
                     v.refined_transcript.empty() ? "Not Available"
                                                  : v.refined_transcript);
        }
    }
    return chat;
}

inline ScriptedAsrClient make_asr_script() {
    ScriptedAsrClient asr("fixture-asr");
    for (const auto& v : videos()) {
        if (v.has_audio) {
            asr.add(v.id, {v.asr_original, v.asr_english});
        } else {
            asr.add_unavailable(v.id);
        }
    }
    return asr;
}

inline ScriptedTranslationClient make_translate_script() {
    ScriptedTranslationClient mt("fixture-mt");
    for (const auto& v : videos()) {
        if (v.has_audio) mt.add(v.asr_original, v.translator_english);
    }
    return mt;
}

}  // namespace testsupport::fixture
