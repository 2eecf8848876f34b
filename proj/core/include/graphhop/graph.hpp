#pragma once

#include <compare>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "graphhop/errors.hpp"

namespace graphhop {

// Identity of a variable placeholder such as "name: #1". Two spellings that
// differ only in whitespace ("name:#1", "name: # 1") compare equal.
struct variable_id {
    std::string type;  // type hint, e.g. "name", "date"; empty in typeless mode
    int index = 0;     // >= 1

    auto operator<=>(const variable_id &) const = default;
    std::string to_string() const;  // "name: #1", or "#1" when type is empty
};

enum class entity_kind { literal, variable };

struct entity {
    entity_kind kind = entity_kind::literal;
    std::string text;  // literal text; unused for variables
    variable_id var;   // variable identity; unused for literals

    static entity make_literal(std::string text);
    static entity make_variable(std::string type, int index);

    bool is_variable() const { return kind == entity_kind::variable; }
    bool operator==(const entity &) const = default;
};

enum class triplet_origin { question, knowledge };

struct triplet {
    entity head;
    std::string relation;
    entity tail;
    triplet_origin origin = triplet_origin::question;

    int variable_count() const;
    // Equality ignores origin: dedup and set semantics key on (head, relation, tail).
    bool operator==(const triplet & other) const {
        return head == other.head && relation == other.relation && tail == other.tail;
    }
};

struct parse_options {
    // Accept bare "#1" variables (no type hint). Off by default; the typed
    // form "name: #1" is always accepted.
    bool allow_typeless = false;
};

struct parse_result {
    std::vector<triplet> triplets;
    std::vector<std::string> rejected;  // raw fragments that failed the grammar or filter
};

// Extracts every "(head; relation; tail)" span from free-form model output.
// Fields split on semicolons at parenthesis depth one, so nested parentheses
// inside a field ("Hypocrite (Film)") stay intact. Question-origin spans with
// no variable entity are rejected; knowledge-origin spans are kept regardless.
// Never throws: malformed content lands in parse_result::rejected.
parse_result parse_triplets(std::string_view text, triplet_origin origin,
                            const parse_options & options = {});

using binding_map = std::map<variable_id, std::string>;

std::string render_entity(const entity & e, const binding_map & bindings);
// "(head; relation; tail)" with bindings applied; re-parsing a rendered
// triplet reproduces it.
std::string render_triplet(const triplet & t, const binding_map & bindings);
std::string render_triplet(const triplet & t);

// Ordered triplet collection plus the variable-binding table. Triplets are
// deduplicated on construction by exact (head, relation, tail) equality,
// keeping the first occurrence.
class question_graph {
public:
    question_graph() = default;
    explicit question_graph(std::vector<triplet> triplets);

    const std::vector<triplet> & triplets() const { return triplets_; }
    const binding_map & bindings() const { return bindings_; }
    bool empty() const { return triplets_.empty(); }

    bool has_variable(const variable_id & var) const;
    bool is_bound(const variable_id & var) const { return bindings_.count(var) > 0; }

    entity effective(const entity & e) const;
    triplet effective(const triplet & t) const;
    int effective_variable_count(const triplet & t) const;

    // Indices of triplets whose effective form has exactly one variable,
    // in graph order. Two-variable and fully resolved triplets are excluded.
    std::vector<size_t> candidate_indices() const;
    // Effective forms of the candidates, same order.
    std::vector<triplet> candidate_set() const;

    // Binds var to value and propagates to every triplet sharing it.
    // Throws already_bound_error / unknown_variable_error.
    void assign(const variable_id & var, const std::string & value);

private:
    std::vector<triplet> triplets_;
    binding_map bindings_;
};

}  // namespace graphhop
