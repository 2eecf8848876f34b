#include "graphhop/prompts.hpp"

#include <fstream>
#include <sstream>

namespace graphhop {

namespace {

constexpr std::string_view k_graph_instruction =
    "Given a sentence, and all entities within the sentence. "
    "Extract all relationships between entities which directly stated in the sentence. "
    "Every relationship stated as a triple: (E_A; Relation; E_B).";

constexpr std::string_view k_subquestion_instruction =
    "Given the triplet, generate a subquestion based on the triplet.";

constexpr std::string_view k_answer_preamble =
    "To answer this question, we answer the following subquestions:";

constexpr std::string_view k_extraction_instruction =
    "Extract triplets from the following paragraph:";

constexpr std::string_view k_extraction_exemplar_paragraph =
    "Maheen Khan is a Pakistani fashion and costume designer, also an award winner "
    "fashion designer for fashion labels, The Embroidery House, Maheen.";

constexpr std::string_view k_extraction_exemplar_triplets =
    "(Maheen Khan; nationality; Pakistan)\n"
    "(Maheen Khan; profession; fashion and costume designer)\n"
    "(Maheen Khan; award winner; The Embroidery HouseMaheen)";

constexpr std::string_view k_filter_instruction =
    "Given knowledge triplets and a question, select triplets that are relevant to the question.";

void require_role(const exemplar_set & set, exemplar_role role, const char * op) {
    if (set.role != role) {
        throw config_error(std::string(op) + ": exemplar set has role '" +
                           std::string(to_string(set.role)) + "', expected '" +
                           std::string(to_string(role)) + "'");
    }
    if (set.items.empty()) {
        throw empty_exemplars_error(std::string(op) + ": exemplar set is empty");
    }
}

std::string answer_chain_body(const exemplar_set & exemplars, std::string_view question,
                              const std::vector<qa_step> & history) {
    std::string out;
    for (const auto & ex : exemplars.items) {
        out += "Question: ";
        out += ex.input;
        out += "\n";
        out += k_answer_preamble;
        out += "\n";
        out += ex.output;
        out += "\n\n";
    }
    out += "Question: ";
    out += question;
    out += "\n";
    out += k_answer_preamble;
    out += "\n";
    for (size_t i = 0; i < history.size(); ++i) {
        out += "(" + std::to_string(i + 1) + ") " + history[i].sub_question + "\n";
        out += history[i].sub_answer + "\n";
    }
    return out;
}

}  // namespace

std::string_view to_string(exemplar_role role) {
    switch (role) {
        case exemplar_role::graph_construction: return "graph_construction";
        case exemplar_role::triplet_to_subquestion: return "triplet_to_subquestion";
        case exemplar_role::answer_chain: return "answer_chain";
    }
    return "unknown";
}

exemplar_set parse_exemplar_text(std::string_view text, exemplar_role role,
                                 const std::string & source_path) {
    exemplar_set set;
    set.role = role;
    set.source_path = source_path;

    auto flush_block = [](std::vector<std::string> & lines) {
        while (!lines.empty() && lines.front().empty()) lines.erase(lines.begin());
        while (!lines.empty() && lines.back().empty()) lines.pop_back();
        std::string out;
        for (size_t i = 0; i < lines.size(); ++i) {
            if (i > 0) out += "\n";
            out += lines[i];
        }
        lines.clear();
        return out;
    };

    enum class section { none, input, output };
    section current = section::none;
    std::vector<std::string> input_lines;
    std::vector<std::string> output_lines;
    std::string pending_input;
    bool saw_record = false;
    size_t line_no = 0;

    auto finish_record = [&]() {
        if (!saw_record) return;
        std::string output = flush_block(output_lines);
        if (current != section::output) {
            throw config_error(source_path + ": exemplar record missing OUTPUT: block");
        }
        if (pending_input.empty() || output.empty()) {
            throw config_error(source_path + ": exemplar INPUT and OUTPUT must be non-empty");
        }
        set.items.push_back({pending_input, output});
        pending_input.clear();
        current = section::none;
        saw_record = false;
    };

    std::string line;
    std::istringstream stream{std::string(text)};
    while (std::getline(stream, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line == "---") {
            finish_record();
            continue;
        }
        if (line == "INPUT:") {
            finish_record();
            current = section::input;
            saw_record = true;
            continue;
        }
        if (line == "OUTPUT:") {
            if (current != section::input) {
                throw config_error(source_path + ": OUTPUT: before INPUT: at line " +
                                   std::to_string(line_no));
            }
            pending_input = flush_block(input_lines);
            current = section::output;
            continue;
        }
        if (current == section::input) {
            input_lines.push_back(line);
        } else if (current == section::output) {
            output_lines.push_back(line);
        } else if (!line.empty()) {
            throw config_error(source_path + ": content outside INPUT/OUTPUT blocks at line " +
                               std::to_string(line_no));
        }
    }
    finish_record();

    if (set.items.empty()) {
        throw config_error(source_path + ": no exemplar records found");
    }
    return set;
}

exemplar_set load_exemplar_file(const std::string & path, exemplar_role role) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw config_error("cannot open exemplar file: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return parse_exemplar_text(buffer.str(), role, path);
}

std::string render_graph_construction(const exemplar_set & exemplars, std::string_view question) {
    require_role(exemplars, exemplar_role::graph_construction, "render_graph_construction");
    std::string out;
    for (const auto & ex : exemplars.items) {
        out += k_graph_instruction;
        out += "\nSentence: ";
        out += ex.input;
        out += "\nRelation: ";
        out += ex.output;
        out += "\n\n";
    }
    out += k_graph_instruction;
    out += "\nSentence: ";
    out += question;
    out += "\nTriplets:";
    return out;
}

std::string render_subquestion(const exemplar_set & exemplars, std::string_view triplet_text) {
    require_role(exemplars, exemplar_role::triplet_to_subquestion, "render_subquestion");
    std::string out;
    for (const auto & ex : exemplars.items) {
        out += k_subquestion_instruction;
        out += "\nTriplet: ";
        out += ex.input;
        out += "\nSubquestion: ";
        out += ex.output;
        out += "\n\n";
    }
    out += k_subquestion_instruction;
    out += "\nTriplet: ";
    out += triplet_text;
    out += "\nSubquestion:";
    return out;
}

std::string render_answer_chain(const exemplar_set & exemplars, std::string_view question,
                                const std::vector<qa_step> & history, std::string_view pending_subq,
                                const std::vector<std::string> * knowledge) {
    require_role(exemplars, exemplar_role::answer_chain, "render_answer_chain");
    std::string out = answer_chain_body(exemplars, question, history);
    if (knowledge != nullptr && !knowledge->empty()) {
        out += "Knowledge:\n";
        for (const auto & t : *knowledge) {
            out += t;
            out += "\n";
        }
    }
    out += "(" + std::to_string(history.size() + 1) + ") ";
    out += pending_subq;
    out += "\n";
    return out;
}

std::string render_knowledge_extraction(std::string_view paragraph) {
    std::string out;
    out += k_extraction_instruction;
    out += "\n";
    out += k_extraction_exemplar_paragraph;
    out += "\nTriplets:\n";
    out += k_extraction_exemplar_triplets;
    out += "\n\n";
    out += k_extraction_instruction;
    out += "\n";
    out += paragraph;
    out += "\nTriplets:";
    return out;
}

std::string render_triplet_filter(const std::vector<std::string> & triplets,
                                  std::string_view question) {
    if (triplets.empty()) {
        throw empty_triplets_error("render_triplet_filter: no triplets to filter");
    }
    std::string out;
    out += k_filter_instruction;
    out += "\nTriplets:\n";
    for (const auto & t : triplets) {
        out += t;
        out += "\n";
    }
    out += "Question:\n";
    out += question;
    out += "\nFiltered triplets:";
    return out;
}

std::string render_final_answer(const exemplar_set & exemplars, std::string_view question,
                                const std::vector<qa_step> & history,
                                const std::vector<std::string> * knowledge) {
    require_role(exemplars, exemplar_role::answer_chain, "render_final_answer");
    std::string out = answer_chain_body(exemplars, question, history);
    if (knowledge != nullptr && !knowledge->empty()) {
        out += "Knowledge:\n";
        for (const auto & t : *knowledge) {
            out += t;
            out += "\n";
        }
    }
    if (!history.empty()) {
        out += final_answer_cue;
    }
    return out;
}

}  // namespace graphhop
