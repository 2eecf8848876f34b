#pragma once

#include <stdexcept>
#include <string>

namespace graphhop {

struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// graph
struct already_bound_error : error {
    using error::error;
};
struct unknown_variable_error : error {
    using error::error;
};

// prompts
struct empty_exemplars_error : error {
    using error::error;
};
struct empty_triplets_error : error {
    using error::error;
};

// gateway
struct gateway_error : error {
    using error::error;
};
struct timeout_error : gateway_error {
    using gateway_error::gateway_error;
};
struct http_error : gateway_error {
    int status;
    http_error(int status, const std::string & msg) : gateway_error(msg), status(status) {}
};
struct malformed_reply_error : gateway_error {
    using gateway_error::gateway_error;
};
struct script_exhausted_error : gateway_error {
    using gateway_error::gateway_error;
};
struct script_mismatch_error : gateway_error {
    using gateway_error::gateway_error;
};
struct no_logprobs_error : error {
    using error::error;
};

// retrieval
struct duplicate_doc_id_error : error {
    using error::error;
};
struct empty_corpus_error : error {
    using error::error;
};

// evaluation / config
struct dataset_format_error : error {
    size_t line;
    dataset_format_error(size_t line, const std::string & msg) : error(msg), line(line) {}
};
struct config_error : error {
    using error::error;
};

}  // namespace graphhop
