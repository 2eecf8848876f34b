#include "graphhop/graph.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace graphhop {

namespace {

std::string_view trim(std::string_view s) {
    size_t begin = 0;
    size_t end = s.size();
    while (begin < end && std::isspace(static_cast<unsigned char>(s[begin]))) ++begin;
    while (end > begin && std::isspace(static_cast<unsigned char>(s[end - 1]))) --end;
    return s.substr(begin, end - begin);
}

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

// Matches "<alnum word> : '#' <digits>" with optional spaces around ':' and
// '#', or bare "# <digits>" when typeless variables are allowed. Index must
// be >= 1; anything else is a literal.
bool match_variable(std::string_view field, const parse_options & options, variable_id & out) {
    std::string_view s = trim(field);
    if (s.empty()) return false;

    size_t pos = 0;
    std::string type;
    if (s[pos] != '#') {
        while (pos < s.size() && is_word_char(s[pos])) ++pos;
        if (pos == 0) return false;
        type = std::string(s.substr(0, pos));
        while (pos < s.size() && s[pos] == ' ') ++pos;
        if (pos >= s.size() || s[pos] != ':') return false;
        ++pos;
        while (pos < s.size() && s[pos] == ' ') ++pos;
        if (pos >= s.size() || s[pos] != '#') return false;
    } else if (!options.allow_typeless) {
        return false;
    }
    ++pos;  // consume '#'
    while (pos < s.size() && s[pos] == ' ') ++pos;

    size_t digits_begin = pos;
    while (pos < s.size() && std::isdigit(static_cast<unsigned char>(s[pos]))) ++pos;
    if (pos == digits_begin || pos != s.size()) return false;

    int index = 0;
    auto [ptr, ec] = std::from_chars(s.data() + digits_begin, s.data() + pos, index);
    if (ec != std::errc() || index < 1) return false;

    out.type = std::move(type);
    out.index = index;
    return true;
}

entity classify_field(std::string_view field, const parse_options & options) {
    variable_id var;
    if (match_variable(field, options, var)) {
        entity e;
        e.kind = entity_kind::variable;
        e.var = std::move(var);
        return e;
    }
    return entity::make_literal(std::string(trim(field)));
}

}  // namespace

std::string variable_id::to_string() const {
    if (type.empty()) return "#" + std::to_string(index);
    return type + ": #" + std::to_string(index);
}

entity entity::make_literal(std::string text) {
    entity e;
    e.kind = entity_kind::literal;
    e.text = std::move(text);
    return e;
}

entity entity::make_variable(std::string type, int index) {
    entity e;
    e.kind = entity_kind::variable;
    e.var.type = std::string(trim(type));
    e.var.index = index;
    return e;
}

int triplet::variable_count() const {
    return (head.is_variable() ? 1 : 0) + (tail.is_variable() ? 1 : 0);
}

parse_result parse_triplets(std::string_view text, triplet_origin origin,
                            const parse_options & options) {
    parse_result result;

    size_t i = 0;
    const size_t n = text.size();
    while (i < n) {
        if (text[i] != '(') {
            ++i;
            continue;
        }

        // Walk to the matching close paren, splitting fields on depth-1
        // semicolons only.
        std::vector<std::string> fields;
        std::string current;
        int depth = 1;
        size_t j = i + 1;
        for (; j < n && depth > 0; ++j) {
            char c = text[j];
            if (c == '(') {
                ++depth;
                current += c;
            } else if (c == ')') {
                --depth;
                if (depth > 0) current += c;
            } else if (c == ';' && depth == 1) {
                fields.push_back(current);
                current.clear();
            } else {
                current += c;
            }
        }

        if (depth != 0) {
            // Unbalanced open paren: the rest of the text cannot form a triplet.
            result.rejected.emplace_back(trim(text.substr(i)));
            break;
        }

        fields.push_back(current);
        std::string fragment(text.substr(i, j - i));
        i = j;

        if (fields.size() != 3) {
            result.rejected.push_back(std::move(fragment));
            continue;
        }

        std::string_view relation = trim(fields[1]);
        entity head = classify_field(fields[0], options);
        entity tail = classify_field(fields[2], options);
        bool fields_ok = relation.size() > 0 &&
                         (head.is_variable() || !head.text.empty()) &&
                         (tail.is_variable() || !tail.text.empty());
        if (!fields_ok) {
            result.rejected.push_back(std::move(fragment));
            continue;
        }

        triplet t;
        t.head = std::move(head);
        t.relation = std::string(relation);
        t.tail = std::move(tail);
        t.origin = origin;

        if (origin == triplet_origin::question && t.variable_count() == 0) {
            result.rejected.push_back(std::move(fragment));
            continue;
        }
        result.triplets.push_back(std::move(t));
    }
    return result;
}

std::string render_entity(const entity & e, const binding_map & bindings) {
    if (e.is_variable()) {
        auto it = bindings.find(e.var);
        if (it != bindings.end()) return it->second;
        return e.var.to_string();
    }
    return e.text;
}

std::string render_triplet(const triplet & t, const binding_map & bindings) {
    return "(" + render_entity(t.head, bindings) + "; " + t.relation + "; " +
           render_entity(t.tail, bindings) + ")";
}

std::string render_triplet(const triplet & t) {
    static const binding_map empty;
    return render_triplet(t, empty);
}

question_graph::question_graph(std::vector<triplet> triplets) {
    for (auto & t : triplets) {
        bool duplicate = std::any_of(triplets_.begin(), triplets_.end(),
                                     [&](const triplet & kept) { return kept == t; });
        if (!duplicate) triplets_.push_back(std::move(t));
    }
}

bool question_graph::has_variable(const variable_id & var) const {
    for (const auto & t : triplets_) {
        if (t.head.is_variable() && t.head.var == var) return true;
        if (t.tail.is_variable() && t.tail.var == var) return true;
    }
    return false;
}

entity question_graph::effective(const entity & e) const {
    if (!e.is_variable()) return e;
    auto it = bindings_.find(e.var);
    if (it == bindings_.end()) return e;
    return entity::make_literal(it->second);
}

triplet question_graph::effective(const triplet & t) const {
    triplet out = t;
    out.head = effective(t.head);
    out.tail = effective(t.tail);
    return out;
}

int question_graph::effective_variable_count(const triplet & t) const {
    return effective(t).variable_count();
}

std::vector<size_t> question_graph::candidate_indices() const {
    std::vector<size_t> out;
    for (size_t i = 0; i < triplets_.size(); ++i) {
        if (effective_variable_count(triplets_[i]) == 1) out.push_back(i);
    }
    return out;
}

std::vector<triplet> question_graph::candidate_set() const {
    std::vector<triplet> out;
    for (size_t i : candidate_indices()) out.push_back(effective(triplets_[i]));
    return out;
}

void question_graph::assign(const variable_id & var, const std::string & value) {
    if (value.empty()) throw error("assign: value must be non-empty");
    if (!has_variable(var)) {
        throw unknown_variable_error("assign: variable " + var.to_string() +
                                     " does not occur in the graph");
    }
    if (bindings_.count(var) > 0) {
        throw already_bound_error("assign: variable " + var.to_string() + " is already bound");
    }
    bindings_[var] = value;
}

}  // namespace graphhop
