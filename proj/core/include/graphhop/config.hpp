#pragma once

#include <string>

#include "graphhop/gateway.hpp"
#include "graphhop/pipeline.hpp"

namespace graphhop {

struct retrieval_settings {
    std::string kind = "bm25";  // "bm25" | "prefetched" | "none"
    std::string index_path;
    std::string prefetched_dir;
};

// Merged runtime configuration. Precedence: CLI flag > environment > config
// file > built-in default. The environment carries only the API key (named
// by api_key_env); everything else lives in the config file or on the
// command line.
struct app_config {
    backend_descriptor backend;
    pipeline_config pipeline;
    retrieval_settings retrieval;
    std::string exemplar_graph_path;
    std::string exemplar_subquestion_path;
    std::string exemplar_answer_path;
    std::string run_dir = "runs";
    std::string log_level = "info";
    size_t eval_workers = 4;
    // Answer-chain exemplar count enforced for evaluation runs; 0 disables.
    int answer_exemplar_count = 6;
    std::string api_key_env = "OPENAI_API_KEY";
};

// Loads the JSON config file (relative paths resolve against the file's
// directory), applies environment secrets, and validates that every
// referenced path exists. An empty path yields the defaults, with exemplar
// paths picked up from data/exemplars/ when present.
app_config load_app_config(const std::string & path);

nlohmann::json config_snapshot(const app_config & config);

exemplar_library load_exemplar_library(const app_config & config);

}  // namespace graphhop
