#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace evr {

struct ChatEndpointConfig {
    std::string base_url;
    std::string model_name;
    double temperature = 0.8;  // sampling defaults shared by decomposition and captioning
    double top_p = 0.95;
    int max_retries = 3;
    std::chrono::milliseconds timeout{30000};
};

// One completion request. The template hash ties cached outputs to the
// exact prompt text that produced them.
struct ChatCall {
    std::string prompt;
    std::optional<std::string> image_ref;  // set for vision calls
    std::string template_sha;
};

// cache key = sha256(template_sha, input_sha, model); input covers the
// rendered prompt and, for vision calls, the frame reference.
std::string chat_input_sha(const ChatCall& call);
std::string chat_cache_key(const ChatCall& call, const std::string& model);

struct CallLogEntry {
    std::string prompt_sha;
    std::string input_sha;
    std::string model;

    auto operator<=>(const CallLogEntry&) const = default;
};

// Thread-safe adapter call log. Snapshots are sorted so persisted logs do
// not depend on worker scheduling.
class CallLog {
  public:
    void append(CallLogEntry entry);
    std::vector<CallLogEntry> sorted_snapshot() const;

  private:
    mutable std::mutex mu_;
    std::vector<CallLogEntry> entries_;
};

class ChatClient {
  public:
    virtual ~ChatClient() = default;

    virtual std::string complete(const ChatCall& call) = 0;
    virtual const std::string& model() const = 0;

    // Extra attempts the knowledge layer may spend when a response fails
    // to parse. Replay backends return 0: the stored output never changes.
    virtual int retry_budget() const = 0;
    virtual bool thread_safe() const = 0;

    void set_call_log(std::shared_ptr<CallLog> log) { log_ = std::move(log); }

  protected:
    void log_call(const ChatCall& call) const;
    std::shared_ptr<CallLog> log_;
};

// File-backed deterministic replay: JSONL records {key_hash, output}.
// Never performs network I/O; a miss is a hard, attributed error.
class ReplayChatClient : public ChatClient {
  public:
    ReplayChatClient(const std::filesystem::path& store, std::string model);

    std::string complete(const ChatCall& call) override;
    const std::string& model() const override { return model_; }
    int retry_budget() const override { return 0; }
    bool thread_safe() const override { return true; }

  private:
    std::map<std::string, std::string> outputs_;
    std::string model_;
    std::filesystem::path store_path_;
};

// Live chat-completion endpoint (vision-capable: image_ref is forwarded).
// Transport failures are retried with exponential backoff before an
// EndpointError is raised.
class HttpChatClient : public ChatClient {
  public:
    explicit HttpChatClient(ChatEndpointConfig config);

    std::string complete(const ChatCall& call) override;
    const std::string& model() const override { return config_.model_name; }
    int retry_budget() const override { return config_.max_retries; }
    bool thread_safe() const override { return false; }

  private:
    ChatEndpointConfig config_;
};

// Decorator that appends {key_hash, output} records to a replay store as
// calls complete. Identical keys are written once (first completion wins;
// outputs for identical keys are identical in replay mode by construction).
class RecordingChatClient : public ChatClient {
  public:
    RecordingChatClient(ChatClient& inner, const std::filesystem::path& store);

    std::string complete(const ChatCall& call) override;
    const std::string& model() const override { return inner_.model(); }
    int retry_budget() const override { return inner_.retry_budget(); }
    bool thread_safe() const override { return inner_.thread_safe(); }

  private:
    ChatClient& inner_;
    std::filesystem::path store_;
    std::mutex mu_;
    std::set<std::string> written_;
};

}  // namespace evr
