#include "graphhop/pipeline.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <map>
#include <random>

#include "graphhop/log.hpp"

using json = nlohmann::json;

namespace graphhop {

namespace {

std::string trim_copy(std::string_view s) {
    size_t begin = 0;
    size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return std::string(s.substr(begin, end - begin));
}

constexpr std::string_view k_answer_marker = "Answer:";

generation_request make_request(std::string prompt, double temperature, int max_tokens,
                                std::vector<std::string> stop, bool logprobs) {
    generation_request request;
    request.prompt = std::move(prompt);
    request.temperature = temperature;
    request.max_tokens = max_tokens;
    request.stop = std::move(stop);
    request.logprobs = logprobs;
    return request;
}

double response_confidence(const generation_response & response, const pipeline_config & config) {
    if (trim_copy(response.text).empty()) return 0.0;  // nothing usable to accept
    try {
        return confidence(response, config.aggregation);
    } catch (const no_logprobs_error &) {
        return config.assume_confident ? 1.0 : 0.0;
    }
}

// The one unresolved variable of an effective candidate triplet.
variable_id unresolved_variable(const triplet & effective) {
    if (effective.head.is_variable()) return effective.head.var;
    return effective.tail.var;
}

size_t pick_candidate(const std::vector<size_t> & candidates,
                      const std::map<size_t, int> & attempts, const pipeline_config & config,
                      std::mt19937_64 & rng) {
    std::vector<size_t> eligible;
    for (size_t idx : candidates) {
        auto it = attempts.find(idx);
        if (it == attempts.end() || it->second < config.attempt_cap) eligible.push_back(idx);
    }
    // When every candidate is capped we keep sampling anyway; the cap only
    // rotates priority, the iteration limit is the real stop.
    const std::vector<size_t> & pool = eligible.empty() ? candidates : eligible;
    if (config.sampling == sampling_policy::seeded_random) {
        return pool[size_t(rng() % pool.size())];
    }
    if (!eligible.empty()) return eligible.front();
    size_t best = pool.front();
    int best_attempts = attempts.count(best) ? attempts.at(best) : 0;
    for (size_t idx : pool) {
        int a = attempts.count(idx) ? attempts.at(idx) : 0;
        if (a < best_attempts) {
            best = idx;
            best_attempts = a;
        }
    }
    return best;
}

std::vector<corpus_document> retrieve_documents(retriever & r, std::string_view query, size_t k) {
    std::vector<corpus_document> docs;
    for (auto & scored : r.retrieve(query, k)) docs.push_back(std::move(scored.doc));
    return docs;
}

void fill_graph_records(reasoning_trace & trace, const question_graph & graph) {
    trace.graph.clear();
    for (const auto & t : graph.triplets()) {
        graph_trace_record record;
        record.head = render_entity(t.head, {});
        record.relation = t.relation;
        record.tail = render_entity(t.tail, {});
        record.head_kind = t.head.is_variable() ? "variable" : "literal";
        record.tail_kind = t.tail.is_variable() ? "variable" : "literal";
        record.resolved_head = render_entity(t.head, graph.bindings());
        record.resolved_tail = render_entity(t.tail, graph.bindings());
        trace.graph.push_back(std::move(record));
    }
    trace.bindings.clear();
    for (const auto & [var, value] : graph.bindings()) {
        trace.bindings.emplace_back(var.to_string(), value);
    }
}

json refined_to_json(const refined_knowledge & rk) {
    json extracted = json::array();
    for (const auto & t : rk.extracted) extracted.push_back(render_triplet(t));
    json retained = json::array();
    for (const auto & t : rk.retained) retained.push_back(render_triplet(t));
    return {{"query", rk.query},
            {"doc_ids", rk.doc_ids},
            {"extracted", std::move(extracted)},
            {"retained", std::move(retained)}};
}

refined_knowledge refined_from_json(const json & j) {
    refined_knowledge rk;
    rk.query = j.value("query", "");
    rk.doc_ids = j.value("doc_ids", std::vector<std::string>{});
    for (const auto & s : j.value("extracted", std::vector<std::string>{})) {
        auto parsed = parse_triplets(s, triplet_origin::knowledge);
        if (!parsed.triplets.empty()) rk.extracted.push_back(parsed.triplets.front());
    }
    for (const auto & s : j.value("retained", std::vector<std::string>{})) {
        auto parsed = parse_triplets(s, triplet_origin::knowledge);
        if (!parsed.triplets.empty()) rk.retained.push_back(parsed.triplets.front());
    }
    return rk;
}

}  // namespace

void pipeline_config::validate() const {
    if (k1 < 0.0 || k1 > 1.0 || k2 < 0.0 || k2 > 1.0) {
        throw config_error("thresholds k1, k2 must lie in [0, 1]");
    }
    if (k2 > k1) throw config_error("k2 must be <= k1");
    if (max_iterations < 1) throw config_error("max_iterations must be >= 1");
    if (retrieval_top_k < 1) throw config_error("retrieval_top_k must be >= 1");
    if (sub_answer_temperature < 0.0 || sub_answer_temperature > 2.0) {
        throw config_error("sub_answer_temperature must lie in [0, 2]");
    }
    if (attempt_cap < 1) throw config_error("attempt_cap must be >= 1");
    if (max_tokens < 1) throw config_error("max_tokens must be >= 1");
}

std::string_view to_string(step_verdict verdict) {
    return verdict == step_verdict::accepted ? "accepted" : "discarded";
}

std::string_view to_string(termination_reason reason) {
    switch (reason) {
        case termination_reason::graph_complete: return "graph_complete";
        case termination_reason::iteration_limit: return "iteration_limit";
        case termination_reason::no_constructible_graph: return "no_constructible_graph";
    }
    return "unknown";
}

std::string_view to_string(pipeline_mode mode) {
    switch (mode) {
        case pipeline_mode::graph_guided: return "graph_guided";
        case pipeline_mode::cot: return "cot";
        case pipeline_mode::one_retrieval: return "one_retrieval";
    }
    return "unknown";
}

pipeline_mode parse_pipeline_mode(std::string_view name) {
    if (name == "graph_guided" || name == "graph") return pipeline_mode::graph_guided;
    if (name == "cot") return pipeline_mode::cot;
    if (name == "one_retrieval") return pipeline_mode::one_retrieval;
    throw config_error("unknown pipeline mode: " + std::string(name));
}

graph_construction_result construct_graph(llm_backend & backend, const exemplar_set & exemplars,
                                          std::string_view question,
                                          const parse_options & options) {
    if (trim_copy(question).empty()) throw error("construct_graph: question is empty");
    generation_request request =
        make_request(render_graph_construction(exemplars, question), 0.0, 512,
                     {"\nSentence:", "\n\nGiven a sentence"}, false);
    generation_response response = backend.generate(request);
    parse_result parsed = parse_triplets(response.text, triplet_origin::question, options);
    graph_construction_result result;
    result.graph = question_graph(std::move(parsed.triplets));
    result.rejects = std::move(parsed.rejected);
    return result;
}

std::string extract_answer_value(std::string_view sub_answer_text) {
    std::string_view span = sub_answer_text;
    auto pos = sub_answer_text.rfind(k_answer_marker);
    bool marked = pos != std::string_view::npos;
    if (marked) {
        span = sub_answer_text.substr(pos + k_answer_marker.size());
        auto newline = span.find('\n');
        if (newline != std::string_view::npos) span = span.substr(0, newline);
    }
    std::string value = trim_copy(span);
    if (marked) {
        while (!value.empty() && std::strchr(".,;:!?", value.back()) != nullptr) value.pop_back();
    } else {
        while (!value.empty() && value.back() == '.') value.pop_back();
    }
    return trim_copy(value);
}

std::string extract_final_answer(std::string_view text) {
    std::string_view span = text;
    auto pos = text.rfind(final_answer_cue);
    if (pos != std::string_view::npos) span = text.substr(pos + final_answer_cue.size());
    std::string answer = trim_copy(span);
    while (!answer.empty() && answer.back() == '.') answer.pop_back();
    return trim_copy(answer);
}

reasoning_trace run_question(const pipeline_config & config, llm_backend & backend,
                             retriever * retriever, const exemplar_library & exemplars,
                             std::string_view question) {
    config.validate();
    const auto started = std::chrono::steady_clock::now();

    reasoning_trace trace;
    trace.question = std::string(question);
    trace.mode = config.mode;

    const bool retrieval_active = config.retrieval_enabled && retriever != nullptr;
    parse_options options;
    options.allow_typeless = config.typeless_variables;

    std::vector<qa_step> history;
    question_graph graph;

    try {
        if (config.mode == pipeline_mode::graph_guided) {
            auto constructed = construct_graph(backend, exemplars.graph_construction, question,
                                               options);
            graph = std::move(constructed.graph);
            trace.graph_rejects = std::move(constructed.rejects);

            if (graph.empty()) {
                trace.reason = termination_reason::no_constructible_graph;
            } else {
                std::map<size_t, int> attempts;
                std::mt19937_64 rng(config.sampling_seed);
                int steps_taken = 0;

                while (true) {
                    std::vector<size_t> candidates = graph.candidate_indices();
                    if (candidates.empty()) {
                        trace.reason = termination_reason::graph_complete;
                        break;
                    }
                    if (steps_taken >= config.max_iterations) {
                        trace.reason = termination_reason::iteration_limit;
                        break;
                    }

                    size_t idx = pick_candidate(candidates, attempts, config, rng);
                    triplet sampled = graph.effective(graph.triplets()[idx]);

                    reasoning_step step;
                    step.iteration = steps_taken + 1;
                    step.triplet_text = render_triplet(sampled);

                    generation_response subq_response = backend.generate(make_request(
                        render_subquestion(exemplars.subquestion, step.triplet_text), 0.0,
                        config.max_tokens, {"\n"}, false));
                    step.sub_question = trim_copy(subq_response.text);

                    std::vector<std::string> suba_stop = {"\n(", "\nQuestion:",
                                                          "\nSo the answer is"};
                    generation_response suba_response = backend.generate(make_request(
                        render_answer_chain(exemplars.answer_chain, question, history,
                                            step.sub_question, nullptr),
                        config.sub_answer_temperature, config.max_tokens, suba_stop, true));
                    step.sub_answer = trim_copy(suba_response.text);
                    step.confidence_before = response_confidence(suba_response, config);

                    if (step.confidence_before < config.k1 && retrieval_active) {
                        auto docs =
                            retrieve_documents(*retriever, step.sub_question,
                                               config.retrieval_top_k);
                        refined_knowledge refined = refine(backend, step.sub_question, docs);
                        std::vector<std::string> knowledge;
                        for (const auto & t : refined.retained) {
                            knowledge.push_back(render_triplet(t));
                        }
                        step.retrieval = std::move(refined);

                        generation_response regen = backend.generate(make_request(
                            render_answer_chain(exemplars.answer_chain, question, history,
                                                step.sub_question, &knowledge),
                            config.sub_answer_temperature, config.max_tokens, suba_stop, true));
                        step.pre_retrieval_answer = step.sub_answer;
                        step.sub_answer = trim_copy(regen.text);
                        step.confidence_after = response_confidence(regen, config);
                    }

                    if (step.final_confidence() < config.k2) {
                        step.verdict = step_verdict::discarded;
                        ++attempts[idx];
                    } else {
                        std::string value = extract_answer_value(step.sub_answer);
                        if (value.empty()) {
                            // Nothing extractable can bind a variable.
                            step.verdict = step_verdict::discarded;
                            ++attempts[idx];
                        } else {
                            step.verdict = step_verdict::accepted;
                            variable_id var = unresolved_variable(sampled);
                            graph.assign(var, value);
                            step.assigned_variable = var.to_string();
                            step.assigned_value = value;
                            history.push_back({step.sub_question, step.sub_answer});
                        }
                    }

                    ++steps_taken;
                    trace.steps.push_back(std::move(step));
                }
            }
        } else {
            trace.reason = termination_reason::no_constructible_graph;
            if (config.mode == pipeline_mode::one_retrieval && retrieval_active) {
                auto docs = retrieve_documents(*retriever, question, config.retrieval_top_k);
                trace.baseline_retrieval = refine(backend, question, docs);
            }
        }

        std::vector<std::string> final_knowledge;
        const std::vector<std::string> * knowledge_ptr = nullptr;
        if (trace.baseline_retrieval.has_value()) {
            for (const auto & t : trace.baseline_retrieval->retained) {
                final_knowledge.push_back(render_triplet(t));
            }
            if (!final_knowledge.empty()) knowledge_ptr = &final_knowledge;
        }

        generation_response final_response = backend.generate(make_request(
            render_final_answer(exemplars.answer_chain, question, history, knowledge_ptr), 0.0,
            config.max_tokens, {"\nQuestion:"}, false));
        trace.raw_final_generation = final_response.text;
        trace.final_answer = extract_final_answer(final_response.text);
    } catch (const gateway_error & e) {
        trace.failed = true;
        trace.failure = e.what();
        log_error(std::string("question aborted: ") + e.what());
    }

    fill_graph_records(trace, graph);
    trace.duration_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - started)
                            .count();
    return trace;
}

json trace_to_json(const reasoning_trace & trace) {
    json j;
    j["question"] = trace.question;
    j["mode"] = std::string(to_string(trace.mode));
    json graph = json::array();
    for (const auto & record : trace.graph) {
        graph.push_back({{"head", record.head},
                         {"relation", record.relation},
                         {"tail", record.tail},
                         {"head_kind", record.head_kind},
                         {"tail_kind", record.tail_kind},
                         {"resolved_head", record.resolved_head},
                         {"resolved_tail", record.resolved_tail}});
    }
    j["graph"] = std::move(graph);
    j["graph_rejects"] = trace.graph_rejects;
    json bindings = json::array();
    for (const auto & [var, value] : trace.bindings) {
        bindings.push_back({{"variable", var}, {"value", value}});
    }
    j["bindings"] = std::move(bindings);
    json steps = json::array();
    for (const auto & step : trace.steps) {
        json s;
        s["iteration"] = step.iteration;
        s["triplet"] = step.triplet_text;
        s["sub_question"] = step.sub_question;
        s["sub_answer"] = step.sub_answer;
        if (step.pre_retrieval_answer.has_value()) {
            s["pre_retrieval_answer"] = *step.pre_retrieval_answer;
        }
        s["confidence_before"] = step.confidence_before;
        if (step.confidence_after.has_value()) s["confidence_after"] = *step.confidence_after;
        if (step.retrieval.has_value()) s["retrieval"] = refined_to_json(*step.retrieval);
        s["verdict"] = std::string(to_string(step.verdict));
        if (step.assigned_variable.has_value()) s["assigned_variable"] = *step.assigned_variable;
        if (step.assigned_value.has_value()) s["assigned_value"] = *step.assigned_value;
        steps.push_back(std::move(s));
    }
    j["steps"] = std::move(steps);
    j["termination"] = std::string(to_string(trace.reason));
    j["final_answer"] = trace.final_answer;
    j["raw_final_generation"] = trace.raw_final_generation;
    if (trace.baseline_retrieval.has_value()) {
        j["baseline_retrieval"] = refined_to_json(*trace.baseline_retrieval);
    }
    j["failed"] = trace.failed;
    if (trace.failed) j["failure"] = trace.failure;
    // Timing lives under "meta" so trace content stays reproducible.
    j["meta"] = {{"duration_ms", trace.duration_ms}};
    return j;
}

reasoning_trace trace_from_json(const json & j) {
    reasoning_trace trace;
    trace.question = j.at("question").get<std::string>();
    trace.mode = parse_pipeline_mode(j.value("mode", "graph_guided"));
    for (const auto & record : j.value("graph", json::array())) {
        graph_trace_record g;
        g.head = record.value("head", "");
        g.relation = record.value("relation", "");
        g.tail = record.value("tail", "");
        g.head_kind = record.value("head_kind", "");
        g.tail_kind = record.value("tail_kind", "");
        g.resolved_head = record.value("resolved_head", "");
        g.resolved_tail = record.value("resolved_tail", "");
        trace.graph.push_back(std::move(g));
    }
    trace.graph_rejects = j.value("graph_rejects", std::vector<std::string>{});
    for (const auto & binding : j.value("bindings", json::array())) {
        trace.bindings.emplace_back(binding.value("variable", ""), binding.value("value", ""));
    }
    for (const auto & s : j.value("steps", json::array())) {
        reasoning_step step;
        step.iteration = s.value("iteration", 0);
        step.triplet_text = s.value("triplet", "");
        step.sub_question = s.value("sub_question", "");
        step.sub_answer = s.value("sub_answer", "");
        if (s.contains("pre_retrieval_answer")) {
            step.pre_retrieval_answer = s["pre_retrieval_answer"].get<std::string>();
        }
        step.confidence_before = s.value("confidence_before", 0.0);
        if (s.contains("confidence_after")) {
            step.confidence_after = s["confidence_after"].get<double>();
        }
        if (s.contains("retrieval")) step.retrieval = refined_from_json(s["retrieval"]);
        step.verdict = s.value("verdict", "discarded") == std::string("accepted")
                           ? step_verdict::accepted
                           : step_verdict::discarded;
        if (s.contains("assigned_variable")) {
            step.assigned_variable = s["assigned_variable"].get<std::string>();
        }
        if (s.contains("assigned_value")) {
            step.assigned_value = s["assigned_value"].get<std::string>();
        }
        trace.steps.push_back(std::move(step));
    }
    std::string reason = j.value("termination", "no_constructible_graph");
    if (reason == "graph_complete") {
        trace.reason = termination_reason::graph_complete;
    } else if (reason == "iteration_limit") {
        trace.reason = termination_reason::iteration_limit;
    } else {
        trace.reason = termination_reason::no_constructible_graph;
    }
    trace.final_answer = j.value("final_answer", "");
    trace.raw_final_generation = j.value("raw_final_generation", "");
    if (j.contains("baseline_retrieval")) {
        trace.baseline_retrieval = refined_from_json(j["baseline_retrieval"]);
    }
    trace.failed = j.value("failed", false);
    trace.failure = j.value("failure", "");
    if (j.contains("meta")) trace.duration_ms = j["meta"].value("duration_ms", 0LL);
    return trace;
}

}  // namespace graphhop
