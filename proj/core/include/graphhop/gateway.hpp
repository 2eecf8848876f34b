#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "graphhop/errors.hpp"

namespace graphhop {

enum class backend_kind { openai_compatible, scripted };
enum class wire_format { completions, chat_completions };

struct backend_descriptor {
    backend_kind kind = backend_kind::scripted;
    // Base URL ("http://host:port[/prefix]") for openai_compatible, script
    // file path for scripted.
    std::string endpoint;
    std::string model;
    wire_format wire = wire_format::chat_completions;
    int timeout_ms = 30000;
    int max_retries = 2;
    int retry_backoff_ms = 250;  // doubled per attempt
    int max_parallel = 4;        // in-flight request cap
    std::string api_key;         // bearer token; resolved from the environment
};

struct generation_request {
    std::string prompt;
    double temperature = 0.0;  // [0, 2]
    int max_tokens = 256;
    std::vector<std::string> stop;
    bool logprobs = false;
};

struct generation_response {
    std::string text;
    // One probability in (0, 1] per generated token; absent when the backend
    // does not report logprobs.
    std::optional<std::vector<double>> token_probs;
    std::string finish_reason;
};

class llm_backend {
public:
    virtual ~llm_backend() = default;
    // Safe for concurrent calls. Throws timeout_error, http_error,
    // malformed_reply_error, script_exhausted_error.
    virtual generation_response generate(const generation_request & request) = 0;
};

// Deterministic replay backend: serves queued records in order. A record's
// optional expect string must occur in the prompt or the call fails with
// script_mismatch_error.
struct script_record {
    std::string text;
    std::optional<std::vector<double>> probs;
    std::string expect;  // optional prompt-substring guard
};

class scripted_backend final : public llm_backend {
public:
    explicit scripted_backend(std::vector<script_record> records);
    // JSONL, one record per line: {"text": "...", "probs": [...], "expect": "..."}
    static std::unique_ptr<scripted_backend> from_file(const std::string & path);

    generation_response generate(const generation_request & request) override;

    struct logged_call {
        std::string prompt;
        double temperature;
    };
    std::vector<logged_call> calls() const;
    size_t remaining() const;

private:
    mutable std::mutex mutex_;
    std::vector<script_record> records_;
    size_t next_ = 0;
    std::vector<logged_call> calls_;
};

std::unique_ptr<llm_backend> make_backend(const backend_descriptor & descriptor);

enum class confidence_aggregation { min, mean, geo_mean };

confidence_aggregation parse_confidence_aggregation(std::string_view name);
std::string_view to_string(confidence_aggregation aggregation);

// Aggregates per-token probabilities into [0, 1]. Throws no_logprobs_error
// when the response carries no probabilities.
double confidence(const generation_response & response,
                  confidence_aggregation aggregation = confidence_aggregation::min);

}  // namespace graphhop
