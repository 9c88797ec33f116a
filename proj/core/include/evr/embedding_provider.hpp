#pragma once

#include <filesystem>
#include <map>
#include <mutex>
#include <set>
#include <string>

#include "evr/similarity.hpp"

namespace evr {

// Replay-store keys: embeddings are keyed by the sha256 of the exact
// input string, with a kind discriminator ("tokens" / "sentence") since
// the same text can be embedded both ways.
std::string embedding_store_key(const std::string& kind, const std::string& text);

// JSONL records {sha256, kind, vectors}; sentence entries store a single
// row. A miss is a hard error.
class ReplayEmbeddingProvider : public EmbeddingProvider {
  public:
    explicit ReplayEmbeddingProvider(const std::filesystem::path& store);

    TokenEmbeddingSequence embed_text(const std::string& text) override;
    Vec embed_query_sentence(const std::string& text) override;
    bool thread_safe() const override { return true; }

  private:
    const std::vector<Vec>& lookup(const std::string& kind, const std::string& text) const;
    std::map<std::string, std::vector<Vec>> entries_;
    std::filesystem::path store_path_;
};

// Generic embeddings endpoint: POST {model, mode, input: [text...]} ->
// {vectors: [...]}: one matrix per input in tokens mode, one vector per
// input in sentence mode.
class HttpEmbeddingProvider : public EmbeddingProvider {
  public:
    HttpEmbeddingProvider(std::string base_url, std::string model, int max_retries = 3);

    TokenEmbeddingSequence embed_text(const std::string& text) override;
    Vec embed_query_sentence(const std::string& text) override;
    bool thread_safe() const override { return false; }

  private:
    std::vector<Vec> request(const std::string& mode, const std::string& text);
    std::string base_url_;
    std::string model_;
    int max_retries_;
};

// Decorator that captures every embedding into a replay store.
class RecordingEmbeddingProvider : public EmbeddingProvider {
  public:
    RecordingEmbeddingProvider(EmbeddingProvider& inner, const std::filesystem::path& store);

    TokenEmbeddingSequence embed_text(const std::string& text) override;
    Vec embed_query_sentence(const std::string& text) override;
    bool thread_safe() const override { return inner_.thread_safe(); }

  private:
    void record(const std::string& kind, const std::string& text,
                const std::vector<Vec>& vectors);
    EmbeddingProvider& inner_;
    std::filesystem::path store_;
    std::mutex mu_;
    std::set<std::string> written_;
};

}  // namespace evr
