#include "evr/embedding_provider.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include "evr/corpus_io.hpp"
#include "evr/errors.hpp"
#include "evr/sha256.hpp"
#include "httplib.h"
#include "nlohmann/json.hpp"

namespace evr {

std::string embedding_store_key(const std::string& kind, const std::string& text) {
    return kind + ":" + sha256_hex(text);
}

ReplayEmbeddingProvider::ReplayEmbeddingProvider(const std::filesystem::path& store)
    : store_path_(store) {
    std::istringstream in(read_text_file(store));
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw ParseError("bad embedding replay record in " + store.string());
        }
        std::vector<Vec> vectors;
        for (const auto& row : j.at("vectors")) {
            Vec v;
            for (const auto& x : row) v.push_back(x.get<double>());
            vectors.push_back(std::move(v));
        }
        const std::string key =
            j.at("kind").get<std::string>() + ":" + j.at("sha256").get<std::string>();
        entries_[key] = std::move(vectors);
    }
}

const std::vector<Vec>& ReplayEmbeddingProvider::lookup(const std::string& kind,
                                                        const std::string& text) const {
    auto it = entries_.find(embedding_store_key(kind, text));
    if (it == entries_.end()) {
        throw ReplayMissError("embedding replay miss in " + store_path_.string() +
                              " for kind " + kind + ", sha256 " + sha256_hex(text));
    }
    return it->second;
}

TokenEmbeddingSequence ReplayEmbeddingProvider::embed_text(const std::string& text) {
    TokenEmbeddingSequence seq;
    seq.tokens = lookup("tokens", text);
    seq.source_text = text;
    return seq;
}

Vec ReplayEmbeddingProvider::embed_query_sentence(const std::string& text) {
    const auto& rows = lookup("sentence", text);
    if (rows.size() != 1) {
        throw ParseError("sentence replay entry must hold exactly one vector");
    }
    return rows.front();
}

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string base_url, std::string model,
                                             int max_retries)
    : base_url_(std::move(base_url)), model_(std::move(model)), max_retries_(max_retries) {
    if (base_url_.empty()) throw ConfigError("embeddings endpoint has no base_url");
}

std::vector<Vec> HttpEmbeddingProvider::request(const std::string& mode,
                                                const std::string& text) {
    nlohmann::json body = {{"model", model_},
                           {"mode", mode},
                           {"input", nlohmann::json::array({text})}};
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
        auto res = client.Post("/embed", payload, "application/json");
        if (!res) {
            last_error = "transport error";
            continue;
        }
        if (res->status != 200) {
            last_error = "status " + std::to_string(res->status);
            continue;
        }
        auto j = nlohmann::json::parse(res->body, nullptr, false);
        if (j.is_discarded() || !j.contains("vectors") || j.at("vectors").empty()) {
            last_error = "malformed response body";
            continue;
        }
        const auto& first = j.at("vectors").at(0);
        std::vector<Vec> out;
        if (mode == "sentence") {
            Vec v;
            for (const auto& x : first) v.push_back(x.get<double>());
            out.push_back(std::move(v));
        } else {
            for (const auto& row : first) {
                Vec v;
                for (const auto& x : row) v.push_back(x.get<double>());
                out.push_back(std::move(v));
            }
        }
        return out;
    }
    throw EndpointError("embeddings endpoint " + base_url_ + " failed after " +
                        std::to_string(attempts) + " attempts: " + last_error);
}

TokenEmbeddingSequence HttpEmbeddingProvider::embed_text(const std::string& text) {
    TokenEmbeddingSequence seq;
    seq.tokens = request("tokens", text);
    seq.source_text = text;
    return seq;
}

Vec HttpEmbeddingProvider::embed_query_sentence(const std::string& text) {
    auto rows = request("sentence", text);
    return rows.front();
}

RecordingEmbeddingProvider::RecordingEmbeddingProvider(EmbeddingProvider& inner,
                                                       const std::filesystem::path& store)
    : inner_(inner), store_(store) {
    if (store_.has_parent_path()) std::filesystem::create_directories(store_.parent_path());
}

void RecordingEmbeddingProvider::record(const std::string& kind, const std::string& text,
                                        const std::vector<Vec>& vectors) {
    const std::string key = embedding_store_key(kind, text);
    std::lock_guard<std::mutex> lock(mu_);
    if (!written_.insert(key).second) return;
    nlohmann::json j;
    j["sha256"] = sha256_hex(text);
    j["kind"] = kind;
    j["vectors"] = vectors;
    std::ofstream out(store_, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot append to replay store " + store_.string());
    out << j.dump() << '\n';
}

TokenEmbeddingSequence RecordingEmbeddingProvider::embed_text(const std::string& text) {
    TokenEmbeddingSequence seq = inner_.embed_text(text);
    record("tokens", text, seq.tokens);
    return seq;
}

Vec RecordingEmbeddingProvider::embed_query_sentence(const std::string& text) {
    Vec v = inner_.embed_query_sentence(text);
    record("sentence", text, {v});
    return v;
}

}  // namespace evr
