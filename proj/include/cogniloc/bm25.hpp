#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cogniloc/errors.hpp"
#include "cogniloc/tokenize.hpp"

namespace cogniloc {

/// One retrieval result: a segment id and its non-negative BM25 score.
struct SearchHit {
    std::string segment;
    double score = 0.0;

    friend bool operator==(const SearchHit&, const SearchHit&) = default;
};

/// In-memory inverted index scoring documents with Okapi BM25,
///   score(d,q) = sum_t idf(t) * tf * (k1+1) / (tf + k1 * (1 - b + b*|d|/avgdl))
///   idf(t)     = ln(1 + (N - df + 0.5) / (df + 0.5))
/// with k1 = 1.2 and b = 0.75. Documents are added once; the index is
/// read-only afterwards and safe for concurrent searches.
class Bm25Index {
  public:
    static constexpr double k1 = 1.2;
    static constexpr double b = 0.75;

    void add_document(std::string id, std::string_view text) {
        const std::size_t doc = doc_ids_.size();
        doc_ids_.push_back(std::move(id));
        const auto tokens = tokenize(text);
        doc_lengths_.push_back(tokens.size());
        total_length_ += tokens.size();

        std::unordered_map<std::string, std::size_t> counts;
        for (const auto& token : tokens) {
            ++counts[token];
        }
        for (const auto& [term, count] : counts) {
            postings_[term].push_back({doc, count});
        }
    }

    std::size_t size() const { return doc_ids_.size(); }

    /// Top-k hits for a tokenized query, positive scores only, ordered by
    /// score descending with ties broken by document id ascending.
    std::vector<SearchHit> search(std::string_view query, std::size_t k) const {
        const auto terms = tokenize(query);
        if (terms.empty()) {
            throw EmptyQuery();
        }

        std::vector<double> scores(doc_ids_.size(), 0.0);
        const double n = static_cast<double>(doc_ids_.size());
        const double avgdl =
            doc_ids_.empty() ? 0.0 : total_length_ / static_cast<double>(doc_ids_.size());
        for (const auto& term : terms) {
            const auto it = postings_.find(term);
            if (it == postings_.end()) {
                continue;
            }
            const double df = static_cast<double>(it->second.size());
            const double idf = std::log(1.0 + (n - df + 0.5) / (df + 0.5));
            for (const auto& posting : it->second) {
                const double tf = static_cast<double>(posting.term_frequency);
                const double dl = static_cast<double>(doc_lengths_[posting.doc]);
                const double norm = k1 * (1.0 - b + b * dl / avgdl);
                scores[posting.doc] += idf * tf * (k1 + 1.0) / (tf + norm);
            }
        }

        std::vector<SearchHit> hits;
        for (std::size_t doc = 0; doc < scores.size(); ++doc) {
            if (scores[doc] > 0.0) {
                hits.push_back({doc_ids_[doc], scores[doc]});
            }
        }
        std::sort(hits.begin(), hits.end(), [](const SearchHit& lhs, const SearchHit& rhs) {
            if (lhs.score != rhs.score) {
                return lhs.score > rhs.score;
            }
            return lhs.segment < rhs.segment;
        });
        if (hits.size() > k) {
            hits.resize(k);
        }
        return hits;
    }

  private:
    struct Posting {
        std::size_t doc;
        std::size_t term_frequency;
    };

    std::vector<std::string> doc_ids_;
    std::vector<std::size_t> doc_lengths_;
    double total_length_ = 0.0;
    std::unordered_map<std::string, std::vector<Posting>> postings_;
};

}  // namespace cogniloc
