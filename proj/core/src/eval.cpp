#include "graphhop/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <thread>

#include "graphhop/log.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace graphhop {

namespace {

std::vector<std::string> whitespace_tokens(const std::string & text) {
    std::vector<std::string> tokens;
    std::istringstream stream(text);
    std::string token;
    while (stream >> token) tokens.push_back(token);
    return tokens;
}

double f1_single(const std::vector<std::string> & pred, const std::vector<std::string> & gold) {
    if (pred.empty() && gold.empty()) return 1.0;
    if (pred.empty() || gold.empty()) return 0.0;
    std::map<std::string, int> gold_counts;
    for (const auto & t : gold) ++gold_counts[t];
    int overlap = 0;
    for (const auto & t : pred) {
        auto it = gold_counts.find(t);
        if (it != gold_counts.end() && it->second > 0) {
            --it->second;
            ++overlap;
        }
    }
    if (overlap == 0) return 0.0;
    double precision = double(overlap) / double(pred.size());
    double recall = double(overlap) / double(gold.size());
    return 2.0 * precision * recall / (precision + recall);
}

std::string sanitize_for_path(const std::string & id) {
    std::string out;
    for (char c : id) {
        out += std::isalnum(static_cast<unsigned char>(c)) ? c : '_';
    }
    return out.empty() ? "example" : out;
}

// --- dataset adapters ---

std::string read_file(const std::string & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("cannot open dataset file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

void require_example(qa_example & ex, size_t line, const std::string & path) {
    if (ex.question.empty()) {
        throw dataset_format_error(line, path + ":" + std::to_string(line) + ": missing question");
    }
    ex.golds.erase(std::remove_if(ex.golds.begin(), ex.golds.end(),
                                  [](const std::string & g) { return g.empty(); }),
                   ex.golds.end());
    if (ex.golds.empty()) {
        throw dataset_format_error(line,
                                   path + ":" + std::to_string(line) + ": missing gold answer");
    }
}

std::vector<qa_example> load_2wiki(const std::string & path) {
    json data;
    try {
        data = json::parse(read_file(path));
    } catch (const json::parse_error & e) {
        throw dataset_format_error(1, path + ": not a JSON array: " + e.what());
    }
    if (!data.is_array()) throw dataset_format_error(1, path + ": expected a JSON array");
    std::vector<qa_example> examples;
    size_t n = 0;
    for (const auto & record : data) {
        ++n;
        qa_example ex;
        ex.id = record.value("_id", record.value("id", ""));
        if (ex.id.empty()) ex.id = "2wiki-" + std::to_string(n);
        ex.question = record.value("question", "");
        ex.golds.push_back(record.value("answer", ""));
        if (record.contains("supporting_facts")) {
            for (const auto & fact : record["supporting_facts"]) {
                if (fact.is_array() && !fact.empty()) {
                    ex.gold_paragraph_ids.push_back(fact[0].get<std::string>());
                }
            }
        }
        require_example(ex, n, path);
        examples.push_back(std::move(ex));
    }
    return examples;
}

std::vector<qa_example> load_musique(const std::string & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("cannot open dataset file: " + path);
    std::vector<qa_example> examples;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error & e) {
            throw dataset_format_error(line_no, path + ":" + std::to_string(line_no) + ": " +
                                                    e.what());
        }
        qa_example ex;
        ex.id = record.value("id", "musique-" + std::to_string(line_no));
        ex.question = record.value("question", "");
        ex.golds.push_back(record.value("answer", ""));
        for (const auto & alias : record.value("answer_aliases", std::vector<std::string>{})) {
            ex.golds.push_back(alias);
        }
        if (record.contains("paragraphs")) {
            for (const auto & p : record["paragraphs"]) {
                if (p.value("is_supporting", false) && p.contains("idx")) {
                    ex.gold_paragraph_ids.push_back(std::to_string(p["idx"].get<int>()));
                }
            }
        }
        require_example(ex, line_no, path);
        examples.push_back(std::move(ex));
    }
    return examples;
}

// Minimal CSV with quoted-field support; Bamboogle ships as a two-column
// Question,Answer table.
std::vector<std::string> split_csv_line(const std::string & line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                current += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                current += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(std::move(current));
            current.clear();
        } else {
            current += c;
        }
    }
    fields.push_back(std::move(current));
    return fields;
}

std::vector<qa_example> load_bamboogle(const std::string & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("cannot open dataset file: " + path);
    std::string line;
    size_t line_no = 0;
    int question_col = -1;
    int answer_col = -1;
    std::vector<qa_example> examples;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (question_col < 0) {
            for (size_t i = 0; i < fields.size(); ++i) {
                if (fields[i] == "Question") question_col = int(i);
                if (fields[i] == "Answer") answer_col = int(i);
            }
            if (question_col < 0 || answer_col < 0) {
                throw dataset_format_error(line_no, path + ":" + std::to_string(line_no) +
                                                        ": header needs Question and Answer");
            }
            continue;
        }
        if (int(fields.size()) <= std::max(question_col, answer_col)) {
            throw dataset_format_error(line_no,
                                       path + ":" + std::to_string(line_no) + ": short row");
        }
        qa_example ex;
        ex.id = "bamboogle-" + std::to_string(examples.size() + 1);
        ex.question = fields[size_t(question_col)];
        ex.golds.push_back(fields[size_t(answer_col)]);
        require_example(ex, line_no, path);
        examples.push_back(std::move(ex));
    }
    return examples;
}

std::vector<qa_example> load_simple(const std::string & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("cannot open dataset file: " + path);
    std::vector<qa_example> examples;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error & e) {
            throw dataset_format_error(line_no, path + ":" + std::to_string(line_no) + ": " +
                                                    e.what());
        }
        qa_example ex;
        ex.id = record.value("id", "q" + std::to_string(line_no));
        ex.question = record.value("question", "");
        if (record.contains("answers")) {
            ex.golds = record["answers"].get<std::vector<std::string>>();
        } else if (record.contains("answer")) {
            ex.golds.push_back(record["answer"].get<std::string>());
        }
        require_example(ex, line_no, path);
        examples.push_back(std::move(ex));
    }
    return examples;
}

}  // namespace

std::string normalize_answer(std::string_view text) {
    std::string stripped;
    for (char c : text) {
        unsigned char uc = static_cast<unsigned char>(c);
        if (std::ispunct(uc)) continue;
        stripped += char(std::tolower(uc));
    }
    std::string out;
    for (const auto & token : whitespace_tokens(stripped)) {
        if (token == "a" || token == "an" || token == "the") continue;
        if (!out.empty()) out += ' ';
        out += token;
    }
    return out;
}

int exact_match(std::string_view prediction, const std::vector<std::string> & golds) {
    std::string normalized = normalize_answer(prediction);
    for (const auto & gold : golds) {
        if (normalized == normalize_answer(gold)) return 1;
    }
    return 0;
}

double token_f1(std::string_view prediction, const std::vector<std::string> & golds) {
    std::vector<std::string> pred_tokens = whitespace_tokens(normalize_answer(prediction));
    double best = 0.0;
    for (const auto & gold : golds) {
        best = std::max(best, f1_single(pred_tokens, whitespace_tokens(normalize_answer(gold))));
    }
    return best;
}

std::vector<std::string> adapter_names() {
    return {"2wikimultihopqa", "musique", "bamboogle", "simple"};
}

bool adapter_subsamples_by_default(const std::string & adapter) { return adapter != "bamboogle"; }

std::vector<qa_example> load_dataset(const std::string & path, const std::string & adapter) {
    if (adapter == "2wikimultihopqa") return load_2wiki(path);
    if (adapter == "musique") return load_musique(path);
    if (adapter == "bamboogle") return load_bamboogle(path);
    if (adapter == "simple") return load_simple(path);
    std::string names;
    for (const auto & name : adapter_names()) {
        if (!names.empty()) names += ", ";
        names += name;
    }
    throw config_error("unknown adapter '" + adapter + "' (valid: " + names + ")");
}

eval_report run_eval(const pipeline_config & config, llm_backend & backend, retriever * retriever,
                     const exemplar_library & exemplars, const std::vector<qa_example> & examples,
                     const eval_options & options) {
    // Seeded subsample without replacement: Fisher-Yates over indices, take
    // the first sample_size. Hand-rolled draw keeps selection identical
    // across standard libraries.
    std::vector<size_t> order(examples.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    size_t take = examples.size();
    if (options.sample_size > 0) {
        std::mt19937_64 rng(options.seed);
        for (size_t i = order.size(); i > 1; --i) {
            size_t j = size_t(rng() % i);
            std::swap(order[i - 1], order[j]);
        }
        take = std::min(options.sample_size, order.size());
    }
    order.resize(take);

    fs::path out_dir(options.out_dir);
    fs::path trace_dir;
    if (!options.out_dir.empty()) {
        trace_dir = out_dir / "traces";
        fs::create_directories(trace_dir);
    }

    std::vector<example_result> results(order.size());
    std::atomic<size_t> next{0};
    size_t worker_count = std::max<size_t>(1, std::min(options.workers, order.size()));

    auto worker = [&]() {
        while (true) {
            size_t slot = next.fetch_add(1);
            if (slot >= order.size()) break;
            const qa_example & example = examples[order[slot]];
            example_result result;
            result.id = example.id;

            reasoning_trace trace =
                run_question(config, backend, retriever, exemplars, example.question);
            result.failed = trace.failed;
            result.prediction = trace.failed ? "" : trace.final_answer;
            if (trace.failed) {
                result.em = 0;
                result.f1 = 0.0;
            } else {
                result.em = exact_match(result.prediction, example.golds);
                result.f1 = token_f1(result.prediction, example.golds);
            }
            if (!options.out_dir.empty()) {
                std::string trace_name = sanitize_for_path(example.id) + ".json";
                std::ofstream out(trace_dir / trace_name, std::ios::binary);
                out << trace_to_json(trace).dump(2) << "\n";
                // Stored relative to out_dir so reports are reproducible
                // across run directories.
                result.trace_path = "traces/" + trace_name;
            }
            results[slot] = std::move(result);
        }
    };

    if (worker_count == 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (size_t i = 0; i < worker_count; ++i) threads.emplace_back(worker);
        for (auto & t : threads) t.join();
    }

    eval_report report;
    report.examples = std::move(results);
    std::sort(report.examples.begin(), report.examples.end(),
              [](const example_result & a, const example_result & b) { return a.id < b.id; });
    report.seed = options.seed;
    report.sample_size = options.sample_size;
    report.config_snapshot = options.config_snapshot;

    double em_sum = 0.0;
    double f1_sum = 0.0;
    for (const auto & r : report.examples) {
        em_sum += r.em;
        f1_sum += r.f1;
    }
    if (!report.examples.empty()) {
        report.aggregate_em = em_sum / double(report.examples.size()) * 100.0;
        report.aggregate_f1 = f1_sum / double(report.examples.size()) * 100.0;
    }

    if (!options.out_dir.empty()) {
        std::ofstream out(out_dir / "report.json", std::ios::binary);
        out << report_to_json(report).dump(2) << "\n";
    }
    return report;
}

json report_to_json(const eval_report & report) {
    json examples = json::array();
    for (const auto & r : report.examples) {
        json e;
        e["id"] = r.id;
        e["prediction"] = r.prediction;
        e["em"] = r.em;
        e["f1"] = r.f1;
        e["trace"] = r.trace_path;
        e["failed"] = r.failed;
        examples.push_back(std::move(e));
    }
    return {{"seed", report.seed},
            {"sample_size", report.sample_size},
            {"config", report.config_snapshot},
            {"aggregate_em", report.aggregate_em},
            {"aggregate_f1", report.aggregate_f1},
            {"count", report.examples.size()},
            {"examples", std::move(examples)}};
}

}  // namespace graphhop
