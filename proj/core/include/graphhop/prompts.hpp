#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "graphhop/errors.hpp"

namespace graphhop {

enum class exemplar_role { graph_construction, triplet_to_subquestion, answer_chain };

std::string_view to_string(exemplar_role role);

struct exemplar {
    std::string input;
    std::string output;
};

struct exemplar_set {
    exemplar_role role = exemplar_role::graph_construction;
    std::vector<exemplar> items;
    std::string source_path;  // empty for inline sets
};

// Exemplar file format: UTF-8 text, records separated by a line containing
// only "---"; each record is an "INPUT:" block followed by an "OUTPUT:"
// block. Throws config_error on structural problems or empty blocks.
exemplar_set load_exemplar_file(const std::string & path, exemplar_role role);
exemplar_set parse_exemplar_text(std::string_view text, exemplar_role role,
                                 const std::string & source_path = "");

// One accepted sub-question/sub-answer pair of the reasoning history.
struct qa_step {
    std::string sub_question;
    std::string sub_answer;
};

// All render_* functions are pure: identical inputs yield byte-identical
// prompts. Inserted user text is never interpreted as template structure.

std::string render_graph_construction(const exemplar_set & exemplars, std::string_view question);

std::string render_subquestion(const exemplar_set & exemplars, std::string_view triplet_text);

// Numbered "(i) sub-question\nsub-answer" blocks over the accepted history,
// then the pending sub-question as the next numbered cue. When knowledge is
// non-null and non-empty, a "Knowledge:" block with one triplet per line is
// inserted immediately before the pending sub-question.
std::string render_answer_chain(const exemplar_set & exemplars, std::string_view question,
                                const std::vector<qa_step> & history, std::string_view pending_subq,
                                const std::vector<std::string> * knowledge = nullptr);

std::string render_knowledge_extraction(std::string_view paragraph);

std::string render_triplet_filter(const std::vector<std::string> & triplets,
                                  std::string_view question);

// Like render_answer_chain but closing the full history with the final-answer
// cue "So the answer is". With an empty history the prompt ends after the
// preamble, degenerating to plain chain-of-thought over the question.
// knowledge, when non-null and non-empty, is inserted as a "Knowledge:"
// block after the history (used by the single-retrieval baseline).
std::string render_final_answer(const exemplar_set & exemplars, std::string_view question,
                                const std::vector<qa_step> & history,
                                const std::vector<std::string> * knowledge = nullptr);

// The cue the final answer is extracted after.
inline constexpr std::string_view final_answer_cue = "So the answer is";

}  // namespace graphhop
