#include "evr/chat_client.hpp"

#include <algorithm>
#include <cstdlib>
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

// Separator byte keeps concatenated key parts unambiguous.
constexpr char kSep = '\x1f';

std::pair<std::string, int> split_base_url(const std::string& base_url) {
    // httplib wants scheme://host:port separate from the path; we accept
    // plain "http://host:port" endpoints only.
    return {base_url, 0};
}

}  // namespace

std::string chat_input_sha(const ChatCall& call) {
    std::string input = call.prompt;
    if (call.image_ref) {
        input += kSep;
        input += *call.image_ref;
    }
    return sha256_hex(input);
}

std::string chat_cache_key(const ChatCall& call, const std::string& model) {
    std::string key = call.template_sha;
    key += kSep;
    key += chat_input_sha(call);
    key += kSep;
    key += model;
    return sha256_hex(key);
}

void CallLog::append(CallLogEntry entry) {
    std::lock_guard<std::mutex> lock(mu_);
    entries_.push_back(std::move(entry));
}

std::vector<CallLogEntry> CallLog::sorted_snapshot() const {
    std::vector<CallLogEntry> out;
    {
        std::lock_guard<std::mutex> lock(mu_);
        out = entries_;
    }
    std::sort(out.begin(), out.end());
    return out;
}

void ChatClient::log_call(const ChatCall& call) const {
    if (log_) log_->append({call.template_sha, chat_input_sha(call), model()});
}

ReplayChatClient::ReplayChatClient(const std::filesystem::path& store, std::string model)
    : model_(std::move(model)), store_path_(store) {
    std::string text = read_text_file(store);
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) throw ParseError("bad replay record in " + store.string());
        outputs_[j.at("key_hash").get<std::string>()] = j.at("output").get<std::string>();
    }
}

std::string ReplayChatClient::complete(const ChatCall& call) {
    log_call(call);
    const std::string key = chat_cache_key(call, model_);
    auto it = outputs_.find(key);
    if (it == outputs_.end()) {
        throw ReplayMissError("chat replay miss in " + store_path_.string() + " for key " +
                              key + " (model " + model_ + ", template " +
                              call.template_sha.substr(0, 12) + ")");
    }
    return it->second;
}

HttpChatClient::HttpChatClient(ChatEndpointConfig config) : config_(std::move(config)) {
    if (config_.base_url.empty()) throw ConfigError("chat endpoint has no base_url");
}

std::string HttpChatClient::complete(const ChatCall& call) {
    log_call(call);

    nlohmann::json message = {{"role", "user"}, {"content", call.prompt}};
    if (call.image_ref) message["image"] = *call.image_ref;
    nlohmann::json body = {{"model", config_.model_name},
                           {"temperature", config_.temperature},
                           {"top_p", config_.top_p},
                           {"messages", nlohmann::json::array({message})}};
    const std::string payload = body.dump();

    const int attempts = std::max(1, config_.max_retries);
    std::chrono::milliseconds backoff{100};
    std::string last_error;
    for (int attempt = 0; attempt < attempts; ++attempt) {
        if (attempt > 0) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
        httplib::Client client(split_base_url(config_.base_url).first);
        client.set_read_timeout(std::chrono::duration_cast<std::chrono::seconds>(config_.timeout));
        if (const char* key = std::getenv("EVR_API_KEY")) {
            client.set_default_headers({{"Authorization", std::string("Bearer ") + key}});
        }
        auto res = client.Post("/chat", payload, "application/json");
        if (!res) {
            last_error = "transport error " + httplib::to_string(res.error());
            continue;
        }
        if (res->status != 200) {
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        auto j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.contains("content")) {
            last_error = "malformed response body";
            continue;
        }
        return j.at("content").get<std::string>();
    }
    throw EndpointError("chat endpoint " + config_.base_url + " failed after " +
                        std::to_string(attempts) + " attempts: " + last_error);
}

RecordingChatClient::RecordingChatClient(ChatClient& inner, const std::filesystem::path& store)
    : inner_(inner), store_(store) {
    if (store_.has_parent_path()) std::filesystem::create_directories(store_.parent_path());
}

std::string RecordingChatClient::complete(const ChatCall& call) {
    std::string output = inner_.complete(call);
    const std::string key = chat_cache_key(call, inner_.model());
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
