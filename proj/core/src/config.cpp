#include "graphhop/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace graphhop {

namespace {

std::string resolve_path(const fs::path & base, const std::string & path) {
    if (path.empty()) return path;
    fs::path p(path);
    if (p.is_absolute() || base.empty()) return p.string();
    return (base / p).lexically_normal().string();
}

void require_exists(const std::string & path, const char * what) {
    if (path.empty()) return;
    if (!fs::exists(path)) {
        throw config_error(std::string(what) + " path does not exist: " + path);
    }
}

backend_kind parse_backend_kind(const std::string & name) {
    if (name == "scripted") return backend_kind::scripted;
    if (name == "openai" || name == "openai_compatible") return backend_kind::openai_compatible;
    throw config_error("unknown backend kind: " + name + " (valid: scripted, openai)");
}

wire_format parse_wire(const std::string & name) {
    if (name == "chat" || name == "chat_completions") return wire_format::chat_completions;
    if (name == "completions") return wire_format::completions;
    throw config_error("unknown wire format: " + name + " (valid: chat, completions)");
}

sampling_policy parse_sampling(const std::string & name) {
    if (name == "in_order") return sampling_policy::in_order;
    if (name == "seeded_random") return sampling_policy::seeded_random;
    throw config_error("unknown sampling policy: " + name +
                       " (valid: in_order, seeded_random)");
}

}  // namespace

app_config load_app_config(const std::string & path) {
    app_config config;
    fs::path base;

    if (!path.empty()) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw config_error("cannot open config file: " + path);
        std::ostringstream buffer;
        buffer << in.rdbuf();
        json j;
        try {
            j = json::parse(buffer.str(), nullptr, true, /*ignore_comments=*/true);
        } catch (const json::parse_error & e) {
            throw config_error("config file " + path + ": " + e.what());
        }
        base = fs::path(path).parent_path();

        if (j.contains("backend")) {
            const json & b = j["backend"];
            if (b.contains("kind")) config.backend.kind = parse_backend_kind(b["kind"]);
            if (b.contains("endpoint")) config.backend.endpoint = b["endpoint"];
            if (b.contains("script")) config.backend.endpoint = b["script"];
            if (b.contains("model")) config.backend.model = b["model"];
            if (b.contains("wire")) config.backend.wire = parse_wire(b["wire"]);
            config.backend.timeout_ms = b.value("timeout_ms", config.backend.timeout_ms);
            config.backend.max_retries = b.value("max_retries", config.backend.max_retries);
            config.backend.retry_backoff_ms =
                b.value("retry_backoff_ms", config.backend.retry_backoff_ms);
            config.backend.max_parallel = b.value("max_parallel", config.backend.max_parallel);
            config.api_key_env = b.value("api_key_env", config.api_key_env);
            if (config.backend.kind == backend_kind::scripted) {
                config.backend.endpoint = resolve_path(base, config.backend.endpoint);
            }
        }
        if (j.contains("pipeline")) {
            const json & p = j["pipeline"];
            config.pipeline.k1 = p.value("k1", config.pipeline.k1);
            config.pipeline.k2 = p.value("k2", config.pipeline.k2);
            config.pipeline.max_iterations =
                p.value("max_iterations", config.pipeline.max_iterations);
            config.pipeline.sub_answer_temperature =
                p.value("sub_answer_temperature", config.pipeline.sub_answer_temperature);
            if (p.contains("confidence")) {
                config.pipeline.aggregation =
                    parse_confidence_aggregation(p["confidence"].get<std::string>());
            }
            if (p.contains("sampling")) {
                config.pipeline.sampling = parse_sampling(p["sampling"]);
            }
            config.pipeline.sampling_seed = p.value("sampling_seed", config.pipeline.sampling_seed);
            config.pipeline.retrieval_enabled =
                p.value("retrieval_enabled", config.pipeline.retrieval_enabled);
            config.pipeline.attempt_cap = p.value("attempt_cap", config.pipeline.attempt_cap);
            config.pipeline.assume_confident =
                p.value("assume_confident", config.pipeline.assume_confident);
            config.pipeline.typeless_variables =
                p.value("typeless_variables", config.pipeline.typeless_variables);
            config.pipeline.max_tokens = p.value("max_tokens", config.pipeline.max_tokens);
            if (p.contains("mode")) {
                config.pipeline.mode = parse_pipeline_mode(p["mode"].get<std::string>());
            }
        }
        if (j.contains("retrieval")) {
            const json & r = j["retrieval"];
            config.retrieval.kind = r.value("kind", config.retrieval.kind);
            config.retrieval.index_path = resolve_path(base, r.value("index", ""));
            config.retrieval.prefetched_dir = resolve_path(base, r.value("prefetched_dir", ""));
            config.pipeline.retrieval_top_k =
                r.value("top_k", config.pipeline.retrieval_top_k);
        }
        if (j.contains("exemplars")) {
            const json & e = j["exemplars"];
            config.exemplar_graph_path = resolve_path(base, e.value("graph_construction", ""));
            config.exemplar_subquestion_path = resolve_path(base, e.value("subquestion", ""));
            config.exemplar_answer_path = resolve_path(base, e.value("answer_chain", ""));
        }
        if (j.contains("run_dir")) config.run_dir = resolve_path(base, j["run_dir"]);
        config.log_level = j.value("log_level", config.log_level);
        config.eval_workers = j.value("eval_workers", config.eval_workers);
        config.answer_exemplar_count =
            j.value("answer_exemplar_count", config.answer_exemplar_count);
    }

    // Default exemplar files, when shipped alongside the working directory.
    if (config.exemplar_graph_path.empty() &&
        fs::exists("data/exemplars/graph_construction.txt")) {
        config.exemplar_graph_path = "data/exemplars/graph_construction.txt";
    }
    if (config.exemplar_subquestion_path.empty() &&
        fs::exists("data/exemplars/subquestion.txt")) {
        config.exemplar_subquestion_path = "data/exemplars/subquestion.txt";
    }
    if (config.exemplar_answer_path.empty() && fs::exists("data/exemplars/answer_chain.txt")) {
        config.exemplar_answer_path = "data/exemplars/answer_chain.txt";
    }

    if (config.backend.kind == backend_kind::openai_compatible) {
        if (const char * key = std::getenv(config.api_key_env.c_str())) {
            config.backend.api_key = key;
        }
    }

    require_exists(config.exemplar_graph_path, "exemplar");
    require_exists(config.exemplar_subquestion_path, "exemplar");
    require_exists(config.exemplar_answer_path, "exemplar");
    require_exists(config.retrieval.index_path, "index");
    require_exists(config.retrieval.prefetched_dir, "prefetched results");
    if (config.backend.kind == backend_kind::scripted) {
        require_exists(config.backend.endpoint, "script");
    }
    config.pipeline.validate();
    return config;
}

json config_snapshot(const app_config & config) {
    json j;
    j["backend"] = {
        {"kind", config.backend.kind == backend_kind::scripted ? "scripted" : "openai"},
        {"endpoint", config.backend.endpoint},
        {"model", config.backend.model},
        {"wire",
         config.backend.wire == wire_format::chat_completions ? "chat" : "completions"}};
    j["pipeline"] = {{"k1", config.pipeline.k1},
                     {"k2", config.pipeline.k2},
                     {"max_iterations", config.pipeline.max_iterations},
                     {"retrieval_top_k", config.pipeline.retrieval_top_k},
                     {"sub_answer_temperature", config.pipeline.sub_answer_temperature},
                     {"confidence", std::string(to_string(config.pipeline.aggregation))},
                     {"sampling", config.pipeline.sampling == sampling_policy::in_order
                                      ? "in_order"
                                      : "seeded_random"},
                     {"sampling_seed", config.pipeline.sampling_seed},
                     {"retrieval_enabled", config.pipeline.retrieval_enabled},
                     {"attempt_cap", config.pipeline.attempt_cap},
                     {"assume_confident", config.pipeline.assume_confident},
                     {"typeless_variables", config.pipeline.typeless_variables},
                     {"max_tokens", config.pipeline.max_tokens},
                     {"mode", std::string(to_string(config.pipeline.mode))}};
    j["retrieval"] = {{"kind", config.retrieval.kind},
                      {"index", config.retrieval.index_path},
                      {"prefetched_dir", config.retrieval.prefetched_dir}};
    j["exemplars"] = {{"graph_construction", config.exemplar_graph_path},
                      {"subquestion", config.exemplar_subquestion_path},
                      {"answer_chain", config.exemplar_answer_path}};
    return j;
}

exemplar_library load_exemplar_library(const app_config & config) {
    if (config.exemplar_graph_path.empty() || config.exemplar_subquestion_path.empty() ||
        config.exemplar_answer_path.empty()) {
        throw config_error(
            "exemplar files not configured; set exemplars.graph_construction, "
            "exemplars.subquestion and exemplars.answer_chain (or run from a directory "
            "containing data/exemplars/)");
    }
    exemplar_library library;
    library.graph_construction =
        load_exemplar_file(config.exemplar_graph_path, exemplar_role::graph_construction);
    library.subquestion =
        load_exemplar_file(config.exemplar_subquestion_path, exemplar_role::triplet_to_subquestion);
    library.answer_chain =
        load_exemplar_file(config.exemplar_answer_path, exemplar_role::answer_chain);
    return library;
}

}  // namespace graphhop
