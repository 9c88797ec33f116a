#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>

#include "evr/chat_client.hpp"

namespace evr {

// Multilingual ASR output: the original-language transcript plus the
// model's own English translation.
struct AsrResult {
    std::string original_text;
    std::string english_text;

    bool operator==(const AsrResult&) const = default;
};

class AsrClient {
  public:
    virtual ~AsrClient() = default;

    // nullopt = transcription unavailable for this audio (the video is
    // scored from visual descriptions only). Hard faults still throw.
    virtual std::optional<AsrResult> transcribe(const std::string& audio_ref) = 0;
    virtual const std::string& model() const = 0;
};

class TranslationClient {
  public:
    virtual ~TranslationClient() = default;

    virtual std::string translate(const std::string& text) = 0;
    virtual const std::string& model() const = 0;
};

std::string asr_cache_key(const std::string& audio_ref, const std::string& model);
std::string translate_cache_key(const std::string& text, const std::string& model);

// Replay stores: JSONL {key_hash, original_text, english_text, available}
// for ASR and {key_hash, output} for translation.
class ReplayAsrClient : public AsrClient {
  public:
    ReplayAsrClient(const std::filesystem::path& store, std::string model);
    std::optional<AsrResult> transcribe(const std::string& audio_ref) override;
    const std::string& model() const override { return model_; }

  private:
    struct Entry {
        bool available = false;
        AsrResult result;
    };
    std::map<std::string, Entry> entries_;
    std::string model_;
    std::filesystem::path store_path_;
};

class HttpAsrClient : public AsrClient {
  public:
    HttpAsrClient(std::string base_url, std::string model, int max_retries = 3);
    std::optional<AsrResult> transcribe(const std::string& audio_ref) override;
    const std::string& model() const override { return model_; }

  private:
    std::string base_url_;
    std::string model_;
    int max_retries_;
};

class RecordingAsrClient : public AsrClient {
  public:
    RecordingAsrClient(AsrClient& inner, const std::filesystem::path& store);
    std::optional<AsrResult> transcribe(const std::string& audio_ref) override;
    const std::string& model() const override { return inner_.model(); }

  private:
    AsrClient& inner_;
    std::filesystem::path store_;
    std::mutex mu_;
    std::set<std::string> written_;
};

class ReplayTranslationClient : public TranslationClient {
  public:
    ReplayTranslationClient(const std::filesystem::path& store, std::string model);
    std::string translate(const std::string& text) override;
    const std::string& model() const override { return model_; }

  private:
    std::map<std::string, std::string> outputs_;
    std::string model_;
    std::filesystem::path store_path_;
};

class HttpTranslationClient : public TranslationClient {
  public:
    HttpTranslationClient(std::string base_url, std::string model, int max_retries = 3);
    std::string translate(const std::string& text) override;
    const std::string& model() const override { return model_; }

  private:
    std::string base_url_;
    std::string model_;
    int max_retries_;
};

class RecordingTranslationClient : public TranslationClient {
  public:
    RecordingTranslationClient(TranslationClient& inner, const std::filesystem::path& store);
    std::string translate(const std::string& text) override;
    const std::string& model() const override { return inner_.model(); }

  private:
    TranslationClient& inner_;
    std::filesystem::path store_;
    std::mutex mu_;
    std::set<std::string> written_;
};

}  // namespace evr
