#include "evr/knowledge.hpp"

#include <algorithm>

#include "evr/errors.hpp"

namespace evr {

void Diagnostics::warn(std::string message) {
    std::lock_guard<std::mutex> lock(mu_);
    messages_.push_back(std::move(message));
}

std::vector<std::string> Diagnostics::sorted_snapshot() const {
    std::vector<std::string> out;
    {
        std::lock_guard<std::mutex> lock(mu_);
        out = messages_;
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

const std::vector<std::string> kDecomposeHeaders = {"EXPLANATION", "EVENTS"};
const std::vector<std::string> kLocationHeaders = {"EXPLANATION", "LOCATION INFORMATION"};
const std::vector<std::string> kTemporalHeaders = {"EXPLANATION", "TEMPORAL INFORMATION"};
const std::vector<std::string> kRefineHeaders = {"EXPLANATION", "REFINED QUERY"};

void warn(Diagnostics* diag, const std::string& message) {
    if (diag) diag->warn(message);
}

const char* decompose_template_name(EventKind kind) {
    switch (kind) {
        case EventKind::Prequel: return "decompose_prequel";
        case EventKind::Current: return "decompose_current";
        case EventKind::Sequel: return "decompose_sequel";
    }
    return "decompose_current";
}

std::string first_line(const std::string& body) {
    auto pos = body.find('\n');
    return trim(pos == std::string::npos ? body : body.substr(0, pos));
}

}  // namespace

std::vector<std::string> decompose_events(const std::string& query_text, EventKind kind,
                                          const PromptLibrary& prompts, ChatClient& chat,
                                          Diagnostics* diag) {
    if (query_text.empty()) throw InvalidInputError("decompose_events: empty query text");

    const PromptTemplate& tpl = prompts.get(decompose_template_name(kind));
    ChatCall call;
    call.prompt = render_template(tpl, {{"query", query_text}});
    call.template_sha = tpl.sha;

    const int attempts = 1 + std::max(0, chat.retry_budget());
    std::string last_failure = "no attempt made";
    for (int attempt = 0; attempt < attempts; ++attempt) {
        std::string response = chat.complete(call);
        try {
            auto sections = SectionedResponse::parse(response, kDecomposeHeaders);
            const std::string* body = sections.find("EVENTS");
            if (!body) {
                last_failure = "response has no EVENTS section";
                continue;
            }
            std::vector<std::string> events = parse_numbered_list(*body);
            if (events.empty()) {
                last_failure = "EVENTS section has no parseable items";
                continue;
            }
            if (events.size() > kMaxEventsPerKind) {
                events.resize(kMaxEventsPerKind);
            }
            return events;
        } catch (const ParseError& e) {
            last_failure = e.what();
        }
    }
    throw DecompositionError(std::string("decompose_events(") + event_kind_name(kind) +
                             "): " + last_failure);
}

Facets extract_facets(const std::string& query_text, const PromptLibrary& prompts,
                      ChatClient& chat, Diagnostics* diag) {
    Facets out;

    auto run = [&](const char* template_name, const std::vector<std::string>& headers,
                   const std::string& section) -> std::optional<std::string> {
        const PromptTemplate& tpl = prompts.get(template_name);
        ChatCall call;
        call.prompt = render_template(tpl, {{"query", query_text}});
        call.template_sha = tpl.sha;
        try {
            std::string response = chat.complete(call);
            auto sections = SectionedResponse::parse(response, headers);
            const std::string* body = sections.find(section);
            if (!body || body->empty() || is_not_available(*body)) return std::nullopt;
            return *body;
        } catch (const ReplayMissError&) {
            throw;
        } catch (const Error& e) {
            warn(diag, std::string("extract_facets: ") + template_name + ": " + e.what());
            return std::nullopt;
        }
    };

    if (auto body = run("extract_primary_event", kDecomposeHeaders, "EVENTS")) {
        // The body may be a numbered list of events; join it to one facet.
        auto items = parse_numbered_list(*body);
        if (items.empty()) {
            out.primary_event = first_line(*body);
        } else {
            std::string joined;
            for (const auto& item : items) {
                if (!joined.empty()) joined += ", ";
                joined += item;
            }
            out.primary_event = joined;
        }
    }
    if (auto body = run("extract_location", kLocationHeaders, "LOCATION INFORMATION")) {
        out.place = first_line(*body);
    }
    if (auto body = run("extract_temporal", kTemporalHeaders, "TEMPORAL INFORMATION")) {
        out.time = first_line(*body);
    }
    return out;
}

std::string refine_event(const std::string& base, const Facets& facets,
                         const PromptLibrary& prompts, ChatClient& chat, Diagnostics* diag) {
    const PromptTemplate& tpl = prompts.get("refine_query");
    ChatCall call;
    call.prompt = render_template(tpl, {{"base_query", base},
                                        {"event", facets.primary_event.value_or("")},
                                        {"place", facets.place.value_or("")},
                                        {"time", facets.time.value_or("")}});
    call.template_sha = tpl.sha;

    try {
        std::string response = chat.complete(call);
        auto sections = SectionedResponse::parse(response, kRefineHeaders);
        const std::string* body = sections.find("REFINED QUERY");
        if (!body || body->empty()) {
            warn(diag, "refine_event: response has no REFINED QUERY section, keeping base");
            return base;
        }
        return first_line(*body);
    } catch (const ReplayMissError&) {
        throw;
    } catch (const Error& e) {
        warn(diag, std::string("refine_event: ") + e.what() + ", keeping base");
        return base;
    }
}

std::optional<std::string> caption_frame(const std::string& frame_ref,
                                         const std::optional<std::string>& prev_caption,
                                         const std::optional<std::string>& asr_context,
                                         const PromptLibrary& prompts, ChatClient& vision,
                                         Diagnostics* diag) {
    const PromptTemplate& tpl =
        prompts.get(asr_context ? "frame_caption_asr" : "frame_caption");
    std::map<std::string, std::string> vars = {{"prev_caption", prev_caption.value_or("")},
                                               {"frame", frame_ref}};
    if (asr_context) vars["asr"] = *asr_context;

    ChatCall call;
    call.prompt = render_template(tpl, vars);
    call.image_ref = frame_ref;
    call.template_sha = tpl.sha;

    try {
        return trim(vision.complete(call));
    } catch (const ReplayMissError&) {
        throw;
    } catch (const EndpointError& e) {
        warn(diag, "caption_frame: " + frame_ref + ": " + e.what());
        return std::nullopt;
    }
}

std::string summarize_video(const std::vector<std::string>& frame_captions,
                            const std::optional<std::string>& asr_context,
                            const PromptLibrary& prompts, ChatClient& chat,
                            Diagnostics* diag) {
    if (frame_captions.empty()) {
        throw InvalidInputError("summarize_video: no frame captions");
    }
    // Numbered blocks preserve the temporal order of the captions.
    std::string blocks;
    for (std::size_t i = 0; i < frame_captions.size(); ++i) {
        blocks += "## Frame " + std::to_string(i + 1) + " Description\n\n";
        blocks += frame_captions[i];
        blocks += "\n\n";
    }

    const PromptTemplate& tpl =
        prompts.get(asr_context ? "video_summary_asr" : "video_summary");
    std::map<std::string, std::string> vars = {{"frame_captions", trim(blocks)}};
    if (asr_context) vars["asr"] = *asr_context;

    ChatCall call;
    call.prompt = render_template(tpl, vars);
    call.template_sha = tpl.sha;
    return trim(chat.complete(call));
}

std::optional<std::string> transcribe_and_refine(const std::string& audio_ref,
                                                 AsrClient& asr,
                                                 TranslationClient* translator,
                                                 ChatClient* refiner,
                                                 const PromptLibrary& prompts,
                                                 const TranscribeOptions& options,
                                                 Diagnostics* diag) {
    std::optional<AsrResult> result = asr.transcribe(audio_ref);
    if (!result) {
        warn(diag, "transcribe_and_refine: " + audio_ref + ": ASR unavailable");
        return std::nullopt;
    }
    return refine_transcript(*result, translator, refiner, prompts, options, diag);
}

std::optional<std::string> refine_transcript(const AsrResult& transcript,
                                             TranslationClient* translator,
                                             ChatClient* refiner,
                                             const PromptLibrary& prompts,
                                             const TranscribeOptions& options,
                                             Diagnostics* diag) {
    const AsrResult* result = &transcript;
    std::string asr_translation =
        options.use_asr_translation ? result->english_text : std::string();
    std::string translator_translation;
    if (options.use_translator && translator) {
        try {
            translator_translation = translator->translate(result->original_text);
        } catch (const ReplayMissError&) {
            throw;
        } catch (const Error& e) {
            warn(diag, std::string("refine_transcript: translator failed (") + e.what() +
                           "), continuing without it");
        }
    }

    if (!options.use_refiner || !refiner) {
        if (!asr_translation.empty()) return asr_translation;
        if (!translator_translation.empty()) return translator_translation;
        return std::nullopt;
    }

    const PromptTemplate& tpl = prompts.get("transcript_refine");
    ChatCall call;
    call.prompt = render_template(tpl, {{"original_transcript", result->original_text},
                                        {"translation_1", asr_translation},
                                        {"translation_2", translator_translation}});
    call.template_sha = tpl.sha;

    std::string refined;
    try {
        refined = trim(refiner->complete(call));
    } catch (const ReplayMissError&) {
        throw;
    } catch (const Error& e) {
        warn(diag, "transcribe_and_refine: refiner failed (" + std::string(e.what()) +
                       "), using best available translation");
        if (!asr_translation.empty()) return asr_translation;
        if (!translator_translation.empty()) return translator_translation;
        return std::nullopt;
    }
    if (refined.empty() || is_not_available(refined)) return std::nullopt;
    return refined;
}

}  // namespace evr
