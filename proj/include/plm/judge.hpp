#pragma once

#include <atomic>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <unordered_map>
#include <vector>

#include "plm/metrics.hpp"

namespace plm::judge {

struct EndpointConfig {
    std::string base_url;
    std::string model_name;
    std::string api_key_env;
    double timeout_s = 60.0;
    int max_in_flight = 4;
    int max_retries = 3;
    double temperature = 0.0;
    int max_tokens = 256;
    int backoff_base_ms = 500;

    // Throws ConfigError when invariants do not hold.
    void validate() const;
};

struct ChatMessage {
    std::string role;
    std::string content;
};

struct ChatRequest {
    std::string template_id;
    std::vector<ChatMessage> messages;
    // Extra request fields (e.g. the video reference for model queries).
    std::map<std::string, std::string> metadata;
};

/// Sends one serialized chat-completions request and returns the assistant
/// text. Implementations throw TransportError on any failure.
class ChatTransport {
public:
    virtual ~ChatTransport() = default;
    virtual std::string complete(const std::string& request_json) = 0;
};

/// POST {base_url}/chat/completions with a bearer token read from the
/// configured environment variable.
std::shared_ptr<ChatTransport> make_http_transport(const EndpointConfig& cfg);

/// Append-only JSONL store of raw responses keyed by request hash. Loaded once
/// at construction; appends are serialized and flushed line by line.
class ResponseCache {
public:
    ResponseCache() = default; // in-memory only
    explicit ResponseCache(std::string path);

    std::optional<std::string> get(const std::string& key) const;
    void put(const std::string& key, const std::string& raw);
    std::size_t size() const;

private:
    std::string path_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, std::string> entries_;
};

struct ClientStats {
    std::uint64_t requests_sent = 0; // transport attempts, including retries
    std::uint64_t cache_hits = 0;
    std::uint64_t failures = 0;      // requests that exhausted their retries
    int peak_in_flight = 0;
};

struct Outcome {
    bool ok = false;
    std::string raw;
    std::string error;
};

/// Cached, retrying, concurrency-bounded chat client.
class ChatClient {
public:
    ChatClient(EndpointConfig cfg, std::shared_ptr<ChatTransport> transport,
               std::shared_ptr<ResponseCache> cache = std::make_shared<ResponseCache>());

    const EndpointConfig& config() const { return cfg_; }

    std::string request_json(const ChatRequest& req) const;
    std::string cache_key(const ChatRequest& req) const;

    /// Returns the raw response text; throws TransportError once retries are
    /// exhausted.
    std::string ask(const ChatRequest& req);

    /// Runs the requests with at most max_in_flight outstanding. Identical
    /// requests are sent once. Results keep the input order.
    std::vector<Outcome> ask_many(const std::vector<ChatRequest>& reqs);

    ClientStats stats() const;

    // Called with the current in-flight count after each change.
    void set_in_flight_hook(std::function<void(int)> hook) { hook_ = std::move(hook); }

private:
    EndpointConfig cfg_;
    std::shared_ptr<ChatTransport> transport_;
    std::shared_ptr<ResponseCache> cache_;
    std::counting_semaphore<1024> slots_;
    std::atomic<int> in_flight_{0};
    std::atomic<int> peak_{0};
    std::atomic<std::uint64_t> sent_{0};
    std::atomic<std::uint64_t> hits_{0};
    std::atomic<std::uint64_t> failures_{0};
    std::function<void(int)> hook_;
};

/// Token-level F1 after lowercasing, punctuation stripping and whitespace
/// tokenization. Both empty gives 1, exactly one empty gives 0.
double fallback_lexical_similarity(std::string_view a, std::string_view b);

/// First brace-delimited object carrying `pred` and `score`; score clamped
/// to [0, max_score]. Unparseable input yields a flagged (no, 0) verdict.
metrics::JudgeVerdict parse_qa_verdict(std::string_view raw, double max_score = 5.0);

struct CaptionScore {
    double score = 0; // [0,10]
    bool parse_failure = false;
    std::string raw;
};

/// First number in the response, clamped to [0,10].
CaptionScore parse_caption_score(std::string_view raw);

/// LLM-judge front end. Without a client every call uses the deterministic
/// lexical fallback.
class Judge {
public:
    Judge() = default;
    explicit Judge(std::shared_ptr<ChatClient> client) : client_(std::move(client)) {}

    bool is_fallback() const { return client_ == nullptr; }
    std::string model_name() const;
    ChatClient* client() const { return client_.get(); }

    static ChatRequest qa_request(const std::string& question, const std::string& target,
                                  const std::string& candidate);
    static ChatRequest caption_request(const std::string& gt_caption, const std::string& pred_caption);

    metrics::JudgeVerdict judge_qa(const std::string& question, const std::string& target,
                                   const std::string& candidate);
    CaptionScore judge_caption_pair(const std::string& gt_caption, const std::string& pred_caption);

    struct QaItem {
        std::string question;
        std::string target;
        std::string candidate;
    };
    struct CaptionPair {
        std::string gt;
        std::string pred;
    };

    // Batch forms; transport exhaustion on any item throws TransportError.
    std::vector<metrics::JudgeVerdict> judge_qa_many(const std::vector<QaItem>& items);
    std::vector<CaptionScore> judge_caption_many(const std::vector<CaptionPair>& pairs);

    /// s[i][j] = judge(gt_j, pred_i) / 10, one request per distinct pair.
    metrics::SimilarityMatrix pairwise_similarity(const std::vector<std::string>& preds,
                                                  const std::vector<std::string>& gts);

private:
    std::shared_ptr<ChatClient> client_;
};

} // namespace plm::judge
