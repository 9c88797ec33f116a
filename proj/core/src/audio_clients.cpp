#include "evr/audio_clients.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include "evr/corpus_io.hpp"
#include "evr/errors.hpp"
#include "evr/sha256.hpp"
#include "httplib.h"
#include "nlohmann/json.hpp"

namespace evr {

namespace {
constexpr char kSep = '\x1f';
}

std::string asr_cache_key(const std::string& audio_ref, const std::string& model) {
    return sha256_hex(audio_ref + kSep + model);
}

std::string translate_cache_key(const std::string& text, const std::string& model) {
    return sha256_hex(text + kSep + model);
}

ReplayAsrClient::ReplayAsrClient(const std::filesystem::path& store, std::string model)
    : model_(std::move(model)), store_path_(store) {
    std::istringstream in(read_text_file(store));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ParseError("bad ASR replay record in " + store.string());
        Entry e;
        e.available = j.at("available").get<bool>();
        if (e.available) {
            e.result.original_text = j.at("original_text").get<std::string>();
            e.result.english_text = j.at("english_text").get<std::string>();
        }
        entries_[j.at("key_hash").get<std::string>()] = std::move(e);
    }
}

std::optional<AsrResult> ReplayAsrClient::transcribe(const std::string& audio_ref) {
    auto it = entries_.find(asr_cache_key(audio_ref, model_));
    if (it == entries_.end()) {
        throw ReplayMissError("ASR replay miss in " + store_path_.string() + " for audio " +
                              audio_ref + " (model " + model_ + ")");
    }
    if (!it->second.available) return std::nullopt;
    return it->second.result;
}

HttpAsrClient::HttpAsrClient(std::string base_url, std::string model, int max_retries)
    : base_url_(std::move(base_url)), model_(std::move(model)), max_retries_(max_retries) {
    if (base_url_.empty()) throw ConfigError("ASR endpoint has no base_url");
}

std::optional<AsrResult> HttpAsrClient::transcribe(const std::string& audio_ref) {
    nlohmann::json body = {{"model", model_}, {"audio_ref", audio_ref}};
    const std::string payload = body.dump();
    const int attempts = std::max(1, max_retries_);
    std::chrono::milliseconds backoff{100};
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        httplib::Client client(base_url_);
        auto res = client.Post("/transcribe", payload, "application/json");
        if (!res || res->status != 200) continue;
        auto j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded()) continue;
        if (j.contains("available") && !j.at("available").get<bool>()) return std::nullopt;
        AsrResult result;
        result.original_text = j.at("original_text").get<std::string>();
        result.english_text = j.at("english_text").get<std::string>();
        return result;
    }
    // Transcription failure degrades to an absent transcript.
    return std::nullopt;
}

RecordingAsrClient::RecordingAsrClient(AsrClient& inner, const std::filesystem::path& store)
    : inner_(inner), store_(store) {
    if (store_.has_parent_path()) std::filesystem::create_directories(store_.parent_path());
}

std::optional<AsrResult> RecordingAsrClient::transcribe(const std::string& audio_ref) {
    auto result = inner_.transcribe(audio_ref);
    const std::string key = asr_cache_key(audio_ref, inner_.model());
    std::lock_guard<std::mutex> lock(mu_);
    if (written_.insert(key).second) {
        nlohmann::json j;
        j["key_hash"] = key;
        j["available"] = result.has_value();
        if (result) {
            j["original_text"] = result->original_text;
            j["english_text"] = result->english_text;
        }
        std::ofstream out(store_, std::ios::app | std::ios::binary);
        if (!out) throw IoError("cannot append to replay store " + store_.string());
        out << j.dump() << '\n';
    }
    return result;
}

ReplayTranslationClient::ReplayTranslationClient(const std::filesystem::path& store,
                                                 std::string model)
    : model_(std::move(model)), store_path_(store) {
    std::istringstream in(read_text_file(store));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw ParseError("bad translation replay record in " + store.string());
        }
        outputs_[j.at("key_hash").get<std::string>()] = j.at("output").get<std::string>();
    }
}

std::string ReplayTranslationClient::translate(const std::string& text) {
    auto it = outputs_.find(translate_cache_key(text, model_));
    if (it == outputs_.end()) {
        throw ReplayMissError("translation replay miss in " + store_path_.string() +
                              " (model " + model_ + ")");
    }
    return it->second;
}

HttpTranslationClient::HttpTranslationClient(std::string base_url, std::string model,
                                             int max_retries)
    : base_url_(std::move(base_url)), model_(std::move(model)), max_retries_(max_retries) {
    if (base_url_.empty()) throw ConfigError("translation endpoint has no base_url");
}

std::string HttpTranslationClient::translate(const std::string& text) {
    nlohmann::json body = {{"model", model_}, {"text", text}};
    const std::string payload = body.dump();
    const int attempts = std::max(1, max_retries_);
    std::chrono::milliseconds backoff{100};
    std::string last_error;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        httplib::Client client(base_url_);
        auto res = client.Post("/translate", payload, "application/json");
        if (!res) {
            last_error = "transport error";
            continue;
        }
        if (res->status != 200) {
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        auto j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.contains("output")) {
            last_error = "malformed response body";
            continue;
        }
        return j.at("output").get<std::string>();
    }
    throw EndpointError("translation endpoint " + base_url_ + " failed after " +
                        std::to_string(attempts) + " attempts: " + last_error);
}

RecordingTranslationClient::RecordingTranslationClient(TranslationClient& inner,
                                                       const std::filesystem::path& store)
    : inner_(inner), store_(store) {
    if (store_.has_parent_path()) std::filesystem::create_directories(store_.parent_path());
}

std::string RecordingTranslationClient::translate(const std::string& text) {
    std::string output = inner_.translate(text);
    const std::string key = translate_cache_key(text, inner_.model());
    std::lock_guard<std::mutex> lock(mu_);
    if (written_.insert(key).second) {
        nlohmann::json j = {{"key_hash", key}, {"output", output}};
        std::ofstream out(store_, std::ios::app | std::ios::binary);
        if (!out) throw IoError("cannot append to replay store " + store_.string());
        out << j.dump() << '\n';
    }
    return output;
}

}  // namespace evr
