#include "graphhop/retrieval.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "graphhop/prompts.hpp"

using json = nlohmann::json;

namespace graphhop {

std::vector<corpus_document> load_corpus_jsonl(const std::string & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("cannot open corpus file: " + path);
    std::vector<corpus_document> docs;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json record;
        try {
            record = json::parse(line);
        } catch (const json::parse_error & e) {
            throw dataset_format_error(line_no, path + ":" + std::to_string(line_no) +
                                                    ": invalid corpus record: " + e.what());
        }
        corpus_document doc;
        doc.id = record.value("id", "");
        doc.title = record.value("title", "");
        doc.text = record.value("text", "");
        if (doc.id.empty() || doc.text.empty()) {
            throw dataset_format_error(line_no, path + ":" + std::to_string(line_no) +
                                                    ": corpus record needs id and text");
        }
        docs.push_back(std::move(doc));
    }
    return docs;
}

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> tokens;
    std::string current;
    for (char c : text) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            current += char(std::tolower(static_cast<unsigned char>(c)));
        } else if (!current.empty()) {
            tokens.push_back(std::move(current));
            current.clear();
        }
    }
    if (!current.empty()) tokens.push_back(std::move(current));
    return tokens;
}

bm25_index bm25_index::build(const std::vector<corpus_document> & corpus, bm25_params params) {
    if (corpus.empty()) throw empty_corpus_error("cannot build an index over zero documents");
    if (params.k1 <= 0.0 || params.b < 0.0 || params.b > 1.0) {
        throw error("bm25 parameters out of range: k1 > 0, 0 <= b <= 1");
    }

    bm25_index index;
    index.params_ = params;

    uint64_t total_length = 0;
    for (const auto & doc : corpus) {
        if (index.id_to_index_.count(doc.id) > 0) {
            throw duplicate_doc_id_error("duplicate document id: " + doc.id);
        }
        uint32_t doc_index = uint32_t(index.doc_ids_.size());
        index.id_to_index_[doc.id] = doc_index;
        index.doc_ids_.push_back(doc.id);
        index.documents_.push_back(doc);

        std::vector<std::string> tokens = tokenize(doc.title);
        std::vector<std::string> body = tokenize(doc.text);
        tokens.insert(tokens.end(), body.begin(), body.end());

        index.doc_lengths_.push_back(uint32_t(tokens.size()));
        total_length += tokens.size();

        std::map<std::string, uint32_t> tf;
        for (const auto & token : tokens) ++tf[token];
        for (const auto & [term, count] : tf) {
            index.postings_[term].push_back({doc_index, count});
        }
    }
    index.avg_length_ = double(total_length) / double(corpus.size());
    return index;
}

std::vector<search_hit> bm25_index::search(std::string_view query, size_t k) const {
    if (k == 0) throw error("search: k must be >= 1");
    std::vector<std::string> terms = tokenize(query);

    const double n = double(doc_ids_.size());
    std::map<uint32_t, double> scores;  // doc index -> accumulated score
    for (const auto & term : terms) {
        auto it = postings_.find(term);
        if (it == postings_.end()) continue;
        const auto & plist = it->second;
        double df = double(plist.size());
        double idf = std::max(0.0, std::log((n - df + 0.5) / (df + 0.5)));
        for (const posting & p : plist) {
            double tf = double(p.tf);
            double norm = params_.k1 * (1.0 - params_.b +
                                        params_.b * double(doc_lengths_[p.doc]) / avg_length_);
            scores[p.doc] += idf * tf * (params_.k1 + 1.0) / (tf + norm);
        }
    }

    std::vector<search_hit> hits;
    hits.reserve(scores.size());
    for (const auto & [doc, score] : scores) hits.push_back({doc_ids_[doc], score});
    std::sort(hits.begin(), hits.end(), [](const search_hit & a, const search_hit & b) {
        if (a.score != b.score) return a.score > b.score;
        return a.doc_id < b.doc_id;
    });
    if (hits.size() > k) hits.resize(k);
    return hits;
}

const corpus_document * bm25_index::find_document(const std::string & id) const {
    auto it = id_to_index_.find(id);
    if (it == id_to_index_.end()) return nullptr;
    return &documents_[it->second];
}

void bm25_index::save(const std::string & path) const {
    json artifact;
    artifact["format"] = "graphhop-bm25";
    artifact["version"] = 1;
    artifact["k1"] = params_.k1;
    artifact["b"] = params_.b;
    json docs = json::array();
    for (size_t i = 0; i < documents_.size(); ++i) {
        docs.push_back({{"id", documents_[i].id},
                        {"title", documents_[i].title},
                        {"text", documents_[i].text},
                        {"length", doc_lengths_[i]}});
    }
    artifact["documents"] = std::move(docs);
    json postings = json::object();
    for (const auto & [term, plist] : postings_) {
        json entries = json::array();
        for (const posting & p : plist) entries.push_back({p.doc, p.tf});
        postings[term] = std::move(entries);
    }
    artifact["postings"] = std::move(postings);

    std::ofstream out(path, std::ios::binary);
    if (!out) throw error("cannot write index file: " + path);
    out << artifact.dump();
    if (!out) throw error("failed writing index file: " + path);
}

bm25_index bm25_index::load(const std::string & path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw error("cannot open index file: " + path);
    json artifact;
    try {
        in >> artifact;
    } catch (const json::parse_error & e) {
        throw error("corrupt index file " + path + ": " + e.what());
    }
    if (artifact.value("format", "") != "graphhop-bm25" || artifact.value("version", 0) != 1) {
        throw error("unrecognized index format in " + path);
    }

    bm25_index index;
    index.params_.k1 = artifact.at("k1").get<double>();
    index.params_.b = artifact.at("b").get<double>();
    uint64_t total_length = 0;
    for (const auto & entry : artifact.at("documents")) {
        corpus_document doc;
        doc.id = entry.at("id").get<std::string>();
        doc.title = entry.value("title", "");
        doc.text = entry.at("text").get<std::string>();
        index.doc_ids_.push_back(doc.id);
        index.documents_.push_back(std::move(doc));
        uint32_t length = entry.at("length").get<uint32_t>();
        index.doc_lengths_.push_back(length);
        total_length += length;
    }
    if (index.doc_ids_.empty()) throw error("index file contains no documents: " + path);
    index.avg_length_ = double(total_length) / double(index.doc_ids_.size());
    for (const auto & [term, entries] : artifact.at("postings").items()) {
        std::vector<posting> plist;
        for (const auto & e : entries) plist.push_back({e[0].get<uint32_t>(), e[1].get<uint32_t>()});
        index.postings_[term] = std::move(plist);
    }
    index.rebuild_lookup();
    return index;
}

void bm25_index::rebuild_lookup() {
    id_to_index_.clear();
    for (size_t i = 0; i < doc_ids_.size(); ++i) id_to_index_[doc_ids_[i]] = i;
}

std::vector<scored_document> bm25_retriever::retrieve(std::string_view query, size_t k) {
    std::vector<scored_document> out;
    for (const search_hit & hit : index_.search(query, k)) {
        const corpus_document * doc = index_.find_document(hit.doc_id);
        if (doc != nullptr) out.push_back({*doc, hit.score});
    }
    return out;
}

prefetched_retriever::prefetched_retriever(const std::string & directory) {
    std::filesystem::path manifest = std::filesystem::path(directory) / "manifest.json";
    std::ifstream in(manifest, std::ios::binary);
    if (!in) throw config_error("cannot open prefetched manifest: " + manifest.string());
    json entries;
    try {
        in >> entries;
    } catch (const json::parse_error & e) {
        throw config_error("corrupt prefetched manifest " + manifest.string() + ": " + e.what());
    }
    for (const auto & entry : entries) {
        std::vector<corpus_document> docs;
        for (const auto & d : entry.at("docs")) {
            docs.push_back({d.value("id", ""), d.value("title", ""), d.value("text", "")});
        }
        results_[entry.at("query").get<std::string>()] = std::move(docs);
    }
}

std::vector<scored_document> prefetched_retriever::retrieve(std::string_view query, size_t k) {
    auto it = results_.find(std::string(query));
    if (it == results_.end()) return {};
    std::vector<scored_document> out;
    for (size_t i = 0; i < it->second.size() && i < k; ++i) {
        // Prefetched results carry rank order but no scores.
        out.push_back({it->second[i], double(it->second.size() - i)});
    }
    return out;
}

std::string normalize_triplet_text(std::string_view rendered) {
    std::string out;
    bool pending_space = false;
    for (char c : rendered) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) {
            out += ' ';
            pending_space = false;
        }
        out += char(std::tolower(static_cast<unsigned char>(c)));
    }
    return out;
}

refined_knowledge refine(llm_backend & backend, std::string_view sub_question,
                         const std::vector<corpus_document> & paragraphs) {
    refined_knowledge result;
    result.query = std::string(sub_question);

    std::set<std::string> seen;
    for (const auto & doc : paragraphs) {
        result.doc_ids.push_back(doc.id);
        std::string paragraph = doc.title.empty() ? doc.text : doc.title + "\n" + doc.text;

        generation_request request;
        request.prompt = render_knowledge_extraction(paragraph);
        request.temperature = 0.0;
        request.max_tokens = 512;
        request.stop = {"\nExtract triplets"};
        generation_response response = backend.generate(request);

        for (auto & t : parse_triplets(response.text, triplet_origin::knowledge).triplets) {
            if (seen.insert(normalize_triplet_text(render_triplet(t))).second) {
                result.extracted.push_back(std::move(t));
            }
        }
    }

    if (result.extracted.empty()) return result;

    std::vector<std::string> rendered;
    rendered.reserve(result.extracted.size());
    for (const auto & t : result.extracted) rendered.push_back(render_triplet(t));

    generation_request request;
    request.prompt = render_triplet_filter(rendered, sub_question);
    request.temperature = 0.0;
    request.max_tokens = 512;
    request.stop = {"\nQuestion:", "\nGiven knowledge triplets"};
    generation_response response = backend.generate(request);

    std::set<std::string> kept;  // normalized, preserves extracted order below
    for (const auto & t : parse_triplets(response.text, triplet_origin::knowledge).triplets) {
        kept.insert(normalize_triplet_text(render_triplet(t)));
    }
    for (const auto & t : result.extracted) {
        if (kept.count(normalize_triplet_text(render_triplet(t))) > 0) {
            result.retained.push_back(t);
        }
    }
    return result;
}

}  // namespace graphhop
