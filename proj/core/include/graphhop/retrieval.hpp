#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "graphhop/errors.hpp"
#include "graphhop/gateway.hpp"
#include "graphhop/graph.hpp"

namespace graphhop {

struct corpus_document {
    std::string id;
    std::string title;
    std::string text;
};

// Line-delimited JSON, one {"id", "title", "text"} record per line.
std::vector<corpus_document> load_corpus_jsonl(const std::string & path);

// Lowercase, split on non-alphanumeric, drop empty tokens.
std::vector<std::string> tokenize(std::string_view text);

struct bm25_params {
    double k1 = 1.2;
    double b = 0.75;
};

struct search_hit {
    std::string doc_id;
    double score;
};

// Inverted index scoring with the standard BM25 formula. IDF is the
// Robertson-Sparck-Jones form with +0.5 smoothing, floored at 0. Title
// tokens are prepended to body tokens at indexing time. Immutable after
// build; concurrent searches are safe.
class bm25_index {
public:
    bm25_index() = default;

    // Throws duplicate_doc_id_error / empty_corpus_error.
    static bm25_index build(const std::vector<corpus_document> & corpus, bm25_params params = {});

    // Top-k by descending score, ties broken by ascending doc id. Only
    // documents containing at least one query term are returned. Repeated
    // query terms contribute cumulatively.
    std::vector<search_hit> search(std::string_view query, size_t k) const;

    size_t document_count() const { return doc_ids_.size(); }
    double average_length() const { return avg_length_; }
    bm25_params params() const { return params_; }

    const corpus_document * find_document(const std::string & id) const;

    void save(const std::string & path) const;
    static bm25_index load(const std::string & path);

private:
    struct posting {
        uint32_t doc;
        uint32_t tf;
    };

    bm25_params params_;
    std::vector<std::string> doc_ids_;          // index -> id, build order
    std::vector<uint32_t> doc_lengths_;
    double avg_length_ = 0.0;
    std::map<std::string, std::vector<posting>> postings_;  // postings sorted by doc index
    std::vector<corpus_document> documents_;    // stored alongside for retrieval
    std::map<std::string, size_t> id_to_index_;

    void rebuild_lookup();
};

struct scored_document {
    corpus_document doc;
    double score;
};

class retriever {
public:
    virtual ~retriever() = default;
    virtual std::vector<scored_document> retrieve(std::string_view query, size_t k) = 0;
};

class bm25_retriever final : public retriever {
public:
    explicit bm25_retriever(bm25_index index) : index_(std::move(index)) {}
    std::vector<scored_document> retrieve(std::string_view query, size_t k) override;
    const bm25_index & index() const { return index_; }

private:
    bm25_index index_;
};

// Serves pre-fetched results from a directory containing manifest.json:
// [{"query": "...", "docs": [{"id", "title", "text"}, ...]}, ...].
// Stand-in for live web-search retrieval.
class prefetched_retriever final : public retriever {
public:
    explicit prefetched_retriever(const std::string & directory);
    std::vector<scored_document> retrieve(std::string_view query, size_t k) override;

private:
    std::map<std::string, std::vector<corpus_document>> results_;
};

// Lowercased, whitespace-collapsed rendering used to compare triplets across
// extraction and filtering.
std::string normalize_triplet_text(std::string_view rendered);

struct refined_knowledge {
    std::string query;                 // the sub-question used for retrieval
    std::vector<std::string> doc_ids;
    std::vector<triplet> extracted;    // union over paragraphs, deduplicated
    std::vector<triplet> retained;     // post-filter; always a subset of extracted
};

// Extracts triplets from each paragraph (one prompt per paragraph,
// temperature 0), then asks the model to keep the ones relevant to the
// sub-question. Filter output that names a triplet absent from the extracted
// set is dropped. With zero extracted triplets the filter call is skipped.
refined_knowledge refine(llm_backend & backend, std::string_view sub_question,
                         const std::vector<corpus_document> & paragraphs);

}  // namespace graphhop
