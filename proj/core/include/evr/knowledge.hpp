#pragma once

#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "evr/audio_clients.hpp"
#include "evr/chat_client.hpp"
#include "evr/prompts.hpp"
#include "evr/types.hpp"

namespace evr {

// Collects non-fatal degradations (fallbacks, absent facets, failed
// captions) so runs can report what was skipped.
class Diagnostics {
  public:
    void warn(std::string message);
    std::vector<std::string> sorted_snapshot() const;

  private:
    mutable std::mutex mu_;
    std::vector<std::string> messages_;
};

// Event lists are capped at five entries per kind.
inline constexpr std::size_t kMaxEventsPerKind = 5;

// Asks the model for prequel/current/sequel sub-events and parses the
// EVENTS section into a list of 1..5 strings. Parse failures are retried
// up to the client's budget; a still-missing EVENTS list raises
// DecompositionError (callers fall back to raw-query-only scoring).
std::vector<std::string> decompose_events(const std::string& query_text, EventKind kind,
                                          const PromptLibrary& prompts, ChatClient& chat,
                                          Diagnostics* diag = nullptr);

struct Facets {
    std::optional<std::string> primary_event;
    std::optional<std::string> place;
    std::optional<std::string> time;

    bool operator==(const Facets&) const = default;
};

// Primary-event / location / time extraction. "NOT AVAILABLE" bodies and
// malformed responses both yield an absent facet (the latter with a
// warning).
Facets extract_facets(const std::string& query_text, const PromptLibrary& prompts,
                      ChatClient& chat, Diagnostics* diag = nullptr);

// Rewrites one event string into a natural query using the facets. On any
// failure the base string is returned unchanged and a warning recorded.
std::string refine_event(const std::string& base, const Facets& facets,
                         const PromptLibrary& prompts, ChatClient& chat,
                         Diagnostics* diag = nullptr);

// Captions one frame, threading the immediately preceding sampled frame's
// caption and, in the ASR variant, the original audio transcript. Endpoint
// failure degrades to nullopt (caption recorded as missing).
std::optional<std::string> caption_frame(const std::string& frame_ref,
                                         const std::optional<std::string>& prev_caption,
                                         const std::optional<std::string>& asr_context,
                                         const PromptLibrary& prompts, ChatClient& vision,
                                         Diagnostics* diag = nullptr);

// Summarizes ordered frame captions into one whole-video caption.
std::string summarize_video(const std::vector<std::string>& frame_captions,
                            const std::optional<std::string>& asr_context,
                            const PromptLibrary& prompts, ChatClient& chat,
                            Diagnostics* diag = nullptr);

// Which stages of the three-agent transcript chain are active. Disabling
// the refiner falls back to the best available English candidate.
struct TranscribeOptions {
    bool use_asr_translation = true;  // ASR's own English translation
    bool use_translator = true;       // dedicated translation model
    bool use_refiner = true;          // merge step

    bool operator==(const TranscribeOptions&) const = default;
};

// ASR -> translate -> refine. Absent on ASR failure, on a refiner
// "Not Available" verdict, or when no English candidate exists.
std::optional<std::string> transcribe_and_refine(const std::string& audio_ref,
                                                 AsrClient& asr,
                                                 TranslationClient* translator,
                                                 ChatClient* refiner,
                                                 const PromptLibrary& prompts,
                                                 const TranscribeOptions& options = {},
                                                 Diagnostics* diag = nullptr);

// Translation + merge over an already-obtained ASR result.
std::optional<std::string> refine_transcript(const AsrResult& transcript,
                                             TranslationClient* translator,
                                             ChatClient* refiner,
                                             const PromptLibrary& prompts,
                                             const TranscribeOptions& options = {},
                                             Diagnostics* diag = nullptr);

}  // namespace evr
