#include <string>

#include "CLI11.hpp"

#include "graphhop/cli.hpp"
#include "graphhop/log.hpp"

using namespace graphhop;

namespace {

// "--backend scripted:<path>" or "--backend openai:<url>"
void apply_backend_override(app_config & config, const std::string & spec) {
    auto colon = spec.find(':');
    if (colon == std::string::npos) {
        throw config_error("--backend expects kind:endpoint, e.g. scripted:replies.jsonl");
    }
    std::string kind = spec.substr(0, colon);
    std::string endpoint = spec.substr(colon + 1);
    if (kind == "scripted") {
        config.backend.kind = backend_kind::scripted;
    } else if (kind == "openai") {
        config.backend.kind = backend_kind::openai_compatible;
    } else {
        throw config_error("unknown backend kind in --backend: " + kind);
    }
    config.backend.endpoint = endpoint;
}

}  // namespace

int main(int argc, char ** argv) {
    CLI::App app{"graphhop: graph-guided multi-hop question answering"};
    app.require_subcommand(1);

    std::string config_path;
    std::string backend_override;
    std::string log_level;
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--backend", backend_override, "backend override, kind:endpoint");
    app.add_option("--log-level", log_level, "error|warn|info|debug");

    index_args index;
    auto * cmd_index_app = app.add_subcommand("index", "build a BM25 index from a corpus");
    cmd_index_app->add_option("--corpus", index.corpus_path, "corpus JSONL file")->required();
    cmd_index_app->add_option("--out", index.out_path, "index output path")->required();
    cmd_index_app->add_option("--k1", index.k1, "BM25 k1 (default 1.2)");
    cmd_index_app->add_option("--b", index.b, "BM25 b (default 0.75)");

    ask_args ask;
    auto * cmd_ask_app = app.add_subcommand("ask", "answer a single question");
    cmd_ask_app->add_option("--question", ask.question, "the question to answer")->required();
    cmd_ask_app->add_flag("--no-retrieval", ask.no_retrieval, "closed-book mode");
    cmd_ask_app->add_option("--trace", ask.trace_path, "write the reasoning trace here");
    cmd_ask_app->add_option("--mode", ask.mode, "graph|cot|one_retrieval");

    eval_args eval;
    auto * cmd_eval_app = app.add_subcommand("eval", "run batch evaluation");
    cmd_eval_app->add_option("--dataset", eval.dataset_path, "dataset file")->required();
    cmd_eval_app->add_option("--adapter", eval.adapter, "dataset adapter")->required();
    auto * sample_opt = cmd_eval_app->add_option("--sample", eval.sample,
                                                 "subsample size (default: whole dataset)");
    cmd_eval_app->add_option("--seed", eval.seed, "subsample seed");
    cmd_eval_app->add_option("--out", eval.out_dir, "output directory");
    cmd_eval_app->add_flag("--no-retrieval", eval.no_retrieval, "closed-book mode");

    trace_args trace;
    auto * cmd_trace_app = app.add_subcommand("trace", "pretty-print a persisted trace");
    cmd_trace_app->add_option("file", trace.trace_path, "trace JSON file")->required();
    cmd_trace_app->add_option("--step", trace.step, "print only this step (1-based)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!log_level.empty()) set_log_level(parse_log_level(log_level));

        if (cmd_trace_app->parsed()) return cmd_trace(trace);
        if (cmd_index_app->parsed()) return cmd_index(index);

        app_config config = load_app_config(config_path);
        if (!log_level.empty()) {
            config.log_level = log_level;
        }
        set_log_level(parse_log_level(config.log_level));
        if (!backend_override.empty()) apply_backend_override(config, backend_override);

        if (cmd_ask_app->parsed()) return cmd_ask(config, ask);
        if (cmd_eval_app->parsed()) {
            eval.sample_given = sample_opt->count() > 0;
            return cmd_eval(config, eval);
        }
    } catch (const error & e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
