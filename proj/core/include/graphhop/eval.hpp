#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "graphhop/pipeline.hpp"

namespace graphhop {

struct qa_example {
    std::string id;
    std::string question;
    std::vector<std::string> golds;  // answer plus aliases, all non-empty
    std::vector<std::string> gold_paragraph_ids;
};

// Standard extractive-QA normalization: lowercase, strip punctuation, drop
// the articles a/an/the, collapse whitespace.
std::string normalize_answer(std::string_view text);

// 1 iff the normalized prediction equals any normalized gold.
int exact_match(std::string_view prediction, const std::vector<std::string> & golds);

// Token-multiset F1, maximized over golds. Both sides empty after
// normalization scores 1, exactly one empty scores 0.
double token_f1(std::string_view prediction, const std::vector<std::string> & golds);

// Dataset adapters. Each maps a native file format onto qa_example records;
// throws dataset_format_error with the offending line.
std::vector<std::string> adapter_names();
std::vector<qa_example> load_dataset(const std::string & path, const std::string & adapter);
// Bamboogle runs whole by convention; used by the CLI to pick a default.
bool adapter_subsamples_by_default(const std::string & adapter);

struct example_result {
    std::string id;
    std::string prediction;
    int em = 0;
    double f1 = 0.0;
    std::string trace_path;
    bool failed = false;
};

struct eval_report {
    std::vector<example_result> examples;  // ordered by example id
    double aggregate_em = 0.0;             // mean * 100
    double aggregate_f1 = 0.0;             // mean * 100
    uint64_t seed = 0;
    size_t sample_size = 0;                // 0 = whole dataset
    nlohmann::json config_snapshot;
};

struct eval_options {
    size_t sample_size = 0;  // 0 = all examples, file order; else shuffle by seed, take first n
    uint64_t seed = 0;
    size_t workers = 4;
    std::string out_dir;  // empty = nothing persisted
    nlohmann::json config_snapshot;
};

// Runs the pipeline over a (sub)sample of examples and scores predictions.
// Per-example pipeline failures score zero and are flagged; they never abort
// the run. When out_dir is set, traces land in out_dir/traces/ and the
// report in out_dir/report.json.
eval_report run_eval(const pipeline_config & config, llm_backend & backend, retriever * retriever,
                     const exemplar_library & exemplars, const std::vector<qa_example> & examples,
                     const eval_options & options);

nlohmann::json report_to_json(const eval_report & report);

}  // namespace graphhop
