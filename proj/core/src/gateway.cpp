#include "graphhop/gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <semaphore>
#include <thread>

#include "httplib.h"
#include "json.hpp"

#include "graphhop/log.hpp"

using json = nlohmann::json;

namespace graphhop {

namespace {

void validate_request(const generation_request & request) {
    if (request.temperature < 0.0 || request.temperature > 2.0) {
        throw error("generation_request: temperature out of [0, 2]");
    }
    if (request.max_tokens < 1 && request.stop.empty()) {
        throw error("generation_request: need max_tokens or stop sequences");
    }
}

// Splits "http://host:port/prefix" into the client origin and a path prefix.
std::pair<std::string, std::string> split_endpoint(const std::string & endpoint) {
    auto scheme_end = endpoint.find("://");
    size_t authority_begin = scheme_end == std::string::npos ? 0 : scheme_end + 3;
    auto path_begin = endpoint.find('/', authority_begin);
    if (path_begin == std::string::npos) return {endpoint, ""};
    std::string prefix = endpoint.substr(path_begin);
    while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
    return {endpoint.substr(0, path_begin), prefix};
}

double logprob_to_prob(double logprob) {
    double p = std::exp(logprob);
    if (p > 1.0) p = 1.0;
    if (p <= 0.0) p = std::numeric_limits<double>::min();
    return p;
}

// Drops trailing probabilities belonging to tokens past the end of the
// returned text (stop-sequence tokens some backends report logprobs for).
std::vector<double> trim_to_text(const std::vector<std::string> & tokens,
                                 const std::vector<double> & probs, const std::string & text) {
    std::vector<double> out;
    size_t consumed = 0;
    for (size_t i = 0; i < probs.size(); ++i) {
        if (i < tokens.size()) {
            if (consumed >= text.size()) break;
            consumed += tokens[i].size();
        }
        out.push_back(probs[i]);
    }
    return out;
}

class openai_backend final : public llm_backend {
public:
    explicit openai_backend(backend_descriptor descriptor)
        : descriptor_(std::move(descriptor)),
          in_flight_(std::max(1, descriptor_.max_parallel)) {
        auto [origin, prefix] = split_endpoint(descriptor_.endpoint);
        origin_ = origin;
        path_ = prefix + (descriptor_.wire == wire_format::chat_completions
                              ? "/v1/chat/completions"
                              : "/v1/completions");
    }

    generation_response generate(const generation_request & request) override {
        validate_request(request);
        in_flight_.acquire();
        struct releaser {
            std::counting_semaphore<> & sem;
            ~releaser() { sem.release(); }
        } release{in_flight_};
        return generate_with_retries(request);
    }

private:
    generation_response generate_with_retries(const generation_request & request) {
        const std::string body = build_body(request).dump();
        std::string last_transport_error = "connection failed";

        for (int attempt = 0;; ++attempt) {
            httplib::Client client(origin_);
            client.set_connection_timeout(0, descriptor_.timeout_ms * 1000LL);
            client.set_read_timeout(descriptor_.timeout_ms / 1000,
                                    (descriptor_.timeout_ms % 1000) * 1000);
            client.set_write_timeout(descriptor_.timeout_ms / 1000,
                                     (descriptor_.timeout_ms % 1000) * 1000);
            if (!descriptor_.api_key.empty()) {
                client.set_bearer_token_auth(descriptor_.api_key);
            }

            auto result = client.Post(path_, body, "application/json");
            if (result) {
                int status = result->status;
                if (status == 200) return parse_reply(result->body);
                if (status < 500) {
                    // 4xx is non-transient; never re-send.
                    throw http_error(status, "backend returned status " + std::to_string(status) +
                                                 ": " + result->body.substr(0, 200));
                }
                if (attempt >= descriptor_.max_retries) {
                    throw http_error(status,
                                     "backend returned status " + std::to_string(status) +
                                         " after " + std::to_string(attempt + 1) + " attempts");
                }
                log_warn("transient status " + std::to_string(status) + ", retrying");
            } else {
                last_transport_error = httplib::to_string(result.error());
                if (attempt >= descriptor_.max_retries) {
                    throw timeout_error("backend unreachable after " +
                                        std::to_string(attempt + 1) +
                                        " attempts: " + last_transport_error);
                }
                log_warn("transport error (" + last_transport_error + "), retrying");
            }
            std::this_thread::sleep_for(
                std::chrono::milliseconds(descriptor_.retry_backoff_ms << attempt));
        }
    }

    json build_body(const generation_request & request) const {
        json body;
        body["model"] = descriptor_.model;
        body["temperature"] = request.temperature;
        body["max_tokens"] = request.max_tokens;
        if (!request.stop.empty()) body["stop"] = request.stop;
        if (descriptor_.wire == wire_format::chat_completions) {
            body["messages"] = json::array({{{"role", "user"}, {"content", request.prompt}}});
            if (request.logprobs) body["logprobs"] = true;
        } else {
            body["prompt"] = request.prompt;
            if (request.logprobs) body["logprobs"] = 1;
        }
        return body;
    }

    generation_response parse_reply(const std::string & body) const {
        json reply;
        try {
            reply = json::parse(body);
        } catch (const json::parse_error & e) {
            throw malformed_reply_error(std::string("reply is not JSON: ") + e.what());
        }
        try {
            if (!reply.contains("choices") || reply["choices"].empty()) {
                throw malformed_reply_error("reply has no choices");
            }
            const json & choice = reply["choices"][0];
            generation_response response;
            response.finish_reason = choice.value("finish_reason", "");

            if (descriptor_.wire == wire_format::chat_completions) {
                response.text = choice.at("message").at("content").get<std::string>();
                if (choice.contains("logprobs") && !choice["logprobs"].is_null()) {
                    std::vector<std::string> tokens;
                    std::vector<double> probs;
                    for (const auto & entry : choice["logprobs"].at("content")) {
                        tokens.push_back(entry.value("token", ""));
                        probs.push_back(logprob_to_prob(entry.at("logprob").get<double>()));
                    }
                    response.token_probs = trim_to_text(tokens, probs, response.text);
                }
            } else {
                response.text = choice.at("text").get<std::string>();
                if (choice.contains("logprobs") && !choice["logprobs"].is_null()) {
                    const json & lp = choice["logprobs"];
                    std::vector<double> probs;
                    for (const auto & v : lp.at("token_logprobs")) {
                        if (v.is_null()) continue;
                        probs.push_back(logprob_to_prob(v.get<double>()));
                    }
                    std::vector<std::string> tokens;
                    if (lp.contains("tokens")) {
                        for (const auto & t : lp["tokens"]) tokens.push_back(t.get<std::string>());
                    }
                    response.token_probs = trim_to_text(tokens, probs, response.text);
                }
            }
            return response;
        } catch (const json::exception & e) {
            throw malformed_reply_error(std::string("unexpected reply shape: ") + e.what());
        }
    }

    backend_descriptor descriptor_;
    std::string origin_;
    std::string path_;
    std::counting_semaphore<> in_flight_;
};

}  // namespace

scripted_backend::scripted_backend(std::vector<script_record> records)
    : records_(std::move(records)) {}

std::unique_ptr<scripted_backend> scripted_backend::from_file(const std::string & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open script file: " + path);
    std::vector<script_record> records;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error & e) {
            throw config_error(path + ":" + std::to_string(line_no) +
                               ": invalid script record: " + e.what());
        }
        script_record r;
        r.text = record.value("text", "");
        r.expect = record.value("expect", "");
        if (record.contains("probs")) {
            r.probs = record["probs"].get<std::vector<double>>();
        }
        records.push_back(std::move(r));
    }
    return std::make_unique<scripted_backend>(std::move(records));
}

generation_response scripted_backend::generate(const generation_request & request) {
    validate_request(request);
    std::lock_guard lock(mutex_);
    calls_.push_back({request.prompt, request.temperature});
    if (next_ >= records_.size()) {
        throw script_exhausted_error("scripted backend ran out of replies after " +
                                     std::to_string(records_.size()) + " calls");
    }
    const script_record & record = records_[next_];
    if (!record.expect.empty() && request.prompt.find(record.expect) == std::string::npos) {
        throw script_mismatch_error("script record " + std::to_string(next_ + 1) +
                                    " expected prompt containing \"" + record.expect + "\"");
    }
    ++next_;
    generation_response response;
    response.text = record.text;
    response.token_probs = record.probs;
    response.finish_reason = "stop";
    return response;
}

std::vector<scripted_backend::logged_call> scripted_backend::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

size_t scripted_backend::remaining() const {
    std::lock_guard lock(mutex_);
    return records_.size() - next_;
}

std::unique_ptr<llm_backend> make_backend(const backend_descriptor & descriptor) {
    if (descriptor.timeout_ms <= 0) throw config_error("backend timeout must be positive");
    if (descriptor.max_retries < 0) throw config_error("backend retries must be >= 0");
    switch (descriptor.kind) {
        case backend_kind::scripted: return scripted_backend::from_file(descriptor.endpoint);
        case backend_kind::openai_compatible:
            return std::make_unique<openai_backend>(descriptor);
    }
    throw config_error("unknown backend kind");
}

confidence_aggregation parse_confidence_aggregation(std::string_view name) {
    if (name == "min") return confidence_aggregation::min;
    if (name == "mean") return confidence_aggregation::mean;
    if (name == "geomean" || name == "geo_mean") return confidence_aggregation::geo_mean;
    throw config_error("unknown confidence aggregation: " + std::string(name));
}

std::string_view to_string(confidence_aggregation aggregation) {
    switch (aggregation) {
        case confidence_aggregation::min: return "min";
        case confidence_aggregation::mean: return "mean";
        case confidence_aggregation::geo_mean: return "geomean";
    }
    return "unknown";
}

double confidence(const generation_response & response, confidence_aggregation aggregation) {
    if (!response.token_probs.has_value() || response.token_probs->empty()) {
        throw no_logprobs_error("response carries no token probabilities");
    }
    const std::vector<double> & probs = *response.token_probs;
    double value = 0.0;
    switch (aggregation) {
        case confidence_aggregation::min:
            value = *std::min_element(probs.begin(), probs.end());
            break;
        case confidence_aggregation::mean:
            value = std::accumulate(probs.begin(), probs.end(), 0.0) / double(probs.size());
            break;
        case confidence_aggregation::geo_mean: {
            double log_sum = 0.0;
            for (double p : probs) log_sum += std::log(p);
            value = std::exp(log_sum / double(probs.size()));
            break;
        }
    }
    return std::clamp(value, 0.0, 1.0);
}

}  // namespace graphhop
