#include "graphhop/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <sstream>

#include "graphhop/eval.hpp"
#include "graphhop/log.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace graphhop {

namespace {

std::unique_ptr<retriever> build_retriever(const app_config & config) {
    if (config.retrieval.kind == "none") return nullptr;
    if (config.retrieval.kind == "prefetched") {
        if (config.retrieval.prefetched_dir.empty()) return nullptr;
        return std::make_unique<prefetched_retriever>(config.retrieval.prefetched_dir);
    }
    if (config.retrieval.kind == "bm25") {
        if (config.retrieval.index_path.empty()) return nullptr;
        return std::make_unique<bm25_retriever>(bm25_index::load(config.retrieval.index_path));
    }
    throw config_error("unknown retriever kind: " + config.retrieval.kind +
                       " (valid: bm25, prefetched, none)");
}

void write_trace_file(const reasoning_trace & trace, const std::string & path) {
    fs::path p(path);
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    if (!out) throw error("cannot write trace file: " + path);
    out << trace_to_json(trace).dump(2) << "\n";
}

void print_step(const reasoning_step & step) {
    std::printf("step %d\n", step.iteration);
    std::printf("  triplet:      %s\n", step.triplet_text.c_str());
    std::printf("  sub-question: %s\n", step.sub_question.c_str());
    if (step.pre_retrieval_answer.has_value()) {
        std::printf("  first answer: %s\n", step.pre_retrieval_answer->c_str());
    }
    std::printf("  sub-answer:   %s\n", step.sub_answer.c_str());
    std::printf("  confidence:   %.4f", step.confidence_before);
    if (step.confidence_after.has_value()) {
        std::printf(" -> %.4f after retrieval", *step.confidence_after);
    }
    std::printf("\n");
    if (step.retrieval.has_value()) {
        const refined_knowledge & rk = *step.retrieval;
        std::string ids;
        for (const auto & id : rk.doc_ids) {
            if (!ids.empty()) ids += ", ";
            ids += id;
        }
        std::printf("  retrieval:    query=\"%s\" docs=[%s]\n", rk.query.c_str(), ids.c_str());
        std::printf("  extracted:    %zu triplets, retained %zu\n", rk.extracted.size(),
                    rk.retained.size());
        for (const auto & t : rk.retained) std::printf("    %s\n", render_triplet(t).c_str());
    }
    std::printf("  verdict:      %s\n", std::string(to_string(step.verdict)).c_str());
    if (step.assigned_variable.has_value()) {
        std::printf("  assigned:     %s = %s\n", step.assigned_variable->c_str(),
                    step.assigned_value.value_or("").c_str());
    }
}

}  // namespace

int cmd_index(const index_args & args) {
    try {
        auto corpus = load_corpus_jsonl(args.corpus_path);
        bm25_params params;
        params.k1 = args.k1;
        params.b = args.b;
        bm25_index index = bm25_index::build(corpus, params);
        fs::path out(args.out_path);
        if (out.has_parent_path()) fs::create_directories(out.parent_path());
        index.save(args.out_path);
        std::printf("indexed %zu documents to %s\n", index.document_count(),
                    args.out_path.c_str());
        return 0;
    } catch (const error & e) {
        std::fprintf(stderr, "index failed: %s\n", e.what());
        return 1;
    }
}

int cmd_ask(const app_config & config, const ask_args & args) {
    try {
        app_config effective = config;
        if (args.no_retrieval) effective.pipeline.retrieval_enabled = false;
        if (!args.mode.empty()) effective.pipeline.mode = parse_pipeline_mode(args.mode);

        exemplar_library exemplars = load_exemplar_library(effective);
        std::unique_ptr<llm_backend> backend = make_backend(effective.backend);
        std::unique_ptr<retriever> ret;
        if (effective.pipeline.retrieval_enabled) ret = build_retriever(effective);

        reasoning_trace trace = run_question(effective.pipeline, *backend, ret.get(), exemplars,
                                             args.question);
        if (!args.trace_path.empty()) write_trace_file(trace, args.trace_path);
        if (trace.failed) {
            std::fprintf(stderr, "ask failed: %s\n", trace.failure.c_str());
            return 1;
        }
        std::printf("%s\n", trace.final_answer.c_str());
        return 0;
    } catch (const error & e) {
        std::fprintf(stderr, "ask failed: %s\n", e.what());
        return 1;
    }
}

int cmd_eval(const app_config & config, const eval_args & args) {
    try {
        app_config effective = config;
        if (args.no_retrieval) effective.pipeline.retrieval_enabled = false;

        auto examples = load_dataset(args.dataset_path, args.adapter);
        exemplar_library exemplars = load_exemplar_library(effective);
        if (effective.answer_exemplar_count > 0 &&
            int(exemplars.answer_chain.items.size()) != effective.answer_exemplar_count) {
            throw config_error("evaluation expects " +
                               std::to_string(effective.answer_exemplar_count) +
                               " answer-chain exemplars, file has " +
                               std::to_string(exemplars.answer_chain.items.size()) +
                               " (set answer_exemplar_count to override)");
        }

        std::unique_ptr<llm_backend> backend = make_backend(effective.backend);
        std::unique_ptr<retriever> ret;
        if (effective.pipeline.retrieval_enabled) ret = build_retriever(effective);

        eval_options options;
        options.sample_size = args.sample_given ? args.sample : 0;
        if (args.sample_given && !adapter_subsamples_by_default(args.adapter)) {
            log_warn(args.adapter + " conventionally runs unsampled; honoring --sample anyway");
        }
        options.seed = args.seed;
        options.workers = effective.eval_workers;
        if (effective.backend.kind == backend_kind::scripted) {
            // Scripted replay consumes records in call order; one worker
            // keeps that order reproducible.
            options.workers = 1;
        }
        options.out_dir =
            args.out_dir.empty() ? (fs::path(effective.run_dir) / "eval").string() : args.out_dir;
        options.config_snapshot = config_snapshot(effective);

        eval_report report = run_eval(effective.pipeline, *backend, ret.get(), exemplars,
                                      examples, options);

        size_t failures = 0;
        for (const auto & r : report.examples) failures += r.failed ? 1 : 0;
        std::printf("examples  %zu\n", report.examples.size());
        std::printf("EM        %.2f\n", report.aggregate_em);
        std::printf("F1        %.2f\n", report.aggregate_f1);
        std::printf("failed    %zu\n", failures);
        std::printf("report    %s\n", (fs::path(options.out_dir) / "report.json").c_str());
        if (failures > 0) {
            for (const auto & r : report.examples) {
                if (r.failed) std::fprintf(stderr, "failed example: %s\n", r.id.c_str());
            }
        }
        return 0;
    } catch (const error & e) {
        std::fprintf(stderr, "eval failed: %s\n", e.what());
        return 1;
    }
}

int cmd_trace(const trace_args & args) {
    try {
        std::ifstream in(args.trace_path, std::ios::binary);
        if (!in) {
            std::fprintf(stderr, "trace failed: cannot open %s\n", args.trace_path.c_str());
            return 1;
        }
        json j;
        try {
            in >> j;
        } catch (const json::parse_error & e) {
            std::fprintf(stderr, "trace failed: %s: parse error at byte %zu: %s\n",
                         args.trace_path.c_str(), size_t(e.byte), e.what());
            return 1;
        }
        reasoning_trace trace = trace_from_json(j);

        if (args.step > 0) {
            if (size_t(args.step) > trace.steps.size()) {
                std::fprintf(stderr, "trace failed: step %d out of range (%zu steps)\n",
                             args.step, trace.steps.size());
                return 1;
            }
            print_step(trace.steps[size_t(args.step) - 1]);
            return 0;
        }

        std::printf("question: %s\n", trace.question.c_str());
        std::printf("mode:     %s\n", std::string(to_string(trace.mode)).c_str());
        std::printf("graph:\n");
        for (const auto & record : trace.graph) {
            std::printf("  (%s; %s; %s)", record.head.c_str(), record.relation.c_str(),
                        record.tail.c_str());
            if (record.resolved_head != record.head || record.resolved_tail != record.tail) {
                std::printf("  ->  (%s; %s; %s)", record.resolved_head.c_str(),
                            record.relation.c_str(), record.resolved_tail.c_str());
            }
            std::printf("\n");
        }
        for (const auto & reject : trace.graph_rejects) {
            std::printf("  rejected: %s\n", reject.c_str());
        }
        if (!trace.bindings.empty()) {
            std::printf("bindings:\n");
            for (const auto & [var, value] : trace.bindings) {
                std::printf("  %s = %s\n", var.c_str(), value.c_str());
            }
        }
        for (const auto & step : trace.steps) print_step(step);
        std::printf("termination: %s\n", std::string(to_string(trace.reason)).c_str());
        if (trace.failed) std::printf("failed: %s\n", trace.failure.c_str());
        std::printf("final answer: %s\n", trace.final_answer.c_str());
        return 0;
    } catch (const error & e) {
        std::fprintf(stderr, "trace failed: %s\n", e.what());
        return 1;
    }
}

}  // namespace graphhop
