#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "graphhop/gateway.hpp"
#include "graphhop/graph.hpp"
#include "graphhop/prompts.hpp"
#include "graphhop/retrieval.hpp"

namespace graphhop {

enum class sampling_policy { in_order, seeded_random };
enum class pipeline_mode { graph_guided, cot, one_retrieval };

struct pipeline_config {
    // Confidence thresholds: below k1 triggers retrieval-augmented
    // regeneration, below k2 discards the step. Requires k2 <= k1.
    double k1 = 0.8;
    double k2 = 0.5;
    int max_iterations = 10;
    size_t retrieval_top_k = 2;
    double sub_answer_temperature = 0.6;
    confidence_aggregation aggregation = confidence_aggregation::min;
    sampling_policy sampling = sampling_policy::in_order;
    uint64_t sampling_seed = 0;
    bool retrieval_enabled = true;
    // A triplet that keeps producing discarded steps is deprioritized after
    // this many attempts so sampling rotates to other candidates.
    int attempt_cap = 3;
    // Treat responses without logprobs as fully confident instead of
    // confidence zero.
    bool assume_confident = false;
    bool typeless_variables = false;
    int max_tokens = 256;
    pipeline_mode mode = pipeline_mode::graph_guided;

    void validate() const;
};

enum class step_verdict { accepted, discarded };
enum class termination_reason { graph_complete, iteration_limit, no_constructible_graph };

std::string_view to_string(step_verdict verdict);
std::string_view to_string(termination_reason reason);
std::string_view to_string(pipeline_mode mode);
pipeline_mode parse_pipeline_mode(std::string_view name);

struct reasoning_step {
    int iteration = 0;               // 1-based
    std::string triplet_text;        // sampled triplet, effective form
    std::string sub_question;
    std::string sub_answer;          // final (post-retrieval when retrieval ran)
    std::optional<std::string> pre_retrieval_answer;
    double confidence_before = 0.0;
    std::optional<refined_knowledge> retrieval;
    std::optional<double> confidence_after;
    step_verdict verdict = step_verdict::discarded;
    std::optional<std::string> assigned_variable;  // rendered, e.g. "name: #1"
    std::optional<std::string> assigned_value;

    double final_confidence() const {
        return confidence_after.has_value() ? *confidence_after : confidence_before;
    }
};

struct graph_trace_record {
    std::string head;
    std::string relation;
    std::string tail;
    std::string head_kind;  // "literal" | "variable"
    std::string tail_kind;
    std::string resolved_head;  // final bindings applied
    std::string resolved_tail;
};

struct reasoning_trace {
    std::string question;
    pipeline_mode mode = pipeline_mode::graph_guided;
    std::vector<graph_trace_record> graph;
    std::vector<std::string> graph_rejects;
    std::vector<std::pair<std::string, std::string>> bindings;  // variable -> value
    std::vector<reasoning_step> steps;
    termination_reason reason = termination_reason::no_constructible_graph;
    std::string final_answer;
    std::string raw_final_generation;
    // Set by the one_retrieval baseline: the single question-as-query pass.
    std::optional<refined_knowledge> baseline_retrieval;
    bool failed = false;
    std::string failure;
    long long duration_ms = 0;  // serialized under "meta", outside trace content
};

struct exemplar_library {
    exemplar_set graph_construction;
    exemplar_set subquestion;
    exemplar_set answer_chain;
};

struct graph_construction_result {
    question_graph graph;
    std::vector<std::string> rejects;
};

// Prompts the backend for the question's triplets and assembles the graph
// (invalid triplets filtered, duplicates removed).
graph_construction_result construct_graph(llm_backend & backend, const exemplar_set & exemplars,
                                          std::string_view question,
                                          const parse_options & options = {});

// Runs the full iterate-and-assign loop for one question and returns the
// trace. Backend failures do not throw: the trace comes back flagged failed.
// retriever may be null when retrieval is disabled.
reasoning_trace run_question(const pipeline_config & config, llm_backend & backend,
                             retriever * retriever, const exemplar_library & exemplars,
                             std::string_view question);

// Pulls the entity span out of a sub-answer: the text after the last
// "Answer:" marker, else the whole text; trailing punctuation stripped.
std::string extract_answer_value(std::string_view sub_answer_text);

// The substring after the last "So the answer is", trimmed of whitespace and
// a trailing period; the whole trimmed text when the cue is absent.
std::string extract_final_answer(std::string_view text);

nlohmann::json trace_to_json(const reasoning_trace & trace);
reasoning_trace trace_from_json(const nlohmann::json & j);

}  // namespace graphhop
