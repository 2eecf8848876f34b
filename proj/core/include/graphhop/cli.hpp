#pragma once

#include <cstdint>
#include <string>

#include "graphhop/config.hpp"

namespace graphhop {

// Command implementations behind the CLI binary. Each returns a process exit
// status: 0 exactly when the command achieved its post-condition. Results go
// to stdout, diagnostics to stderr.

struct index_args {
    std::string corpus_path;
    std::string out_path;
    double k1 = 1.2;
    double b = 0.75;
};
int cmd_index(const index_args & args);

struct ask_args {
    std::string question;
    bool no_retrieval = false;
    std::string trace_path;  // optional: persist the trace here
    std::string mode;        // optional override: graph | cot | one_retrieval
};
int cmd_ask(const app_config & config, const ask_args & args);

struct eval_args {
    std::string dataset_path;
    std::string adapter;
    size_t sample = 0;  // 0 = whole dataset
    bool sample_given = false;
    uint64_t seed = 0;
    std::string out_dir;
    bool no_retrieval = false;
};
int cmd_eval(const app_config & config, const eval_args & args);

struct trace_args {
    std::string trace_path;
    int step = 0;  // 0 = all steps
};
int cmd_trace(const trace_args & args);

}  // namespace graphhop
