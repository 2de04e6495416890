#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cogniloc/agent.hpp"
#include "cogniloc/bug_report.hpp"
#include "cogniloc/code_graph.hpp"
#include "cogniloc/errors.hpp"
#include "cogniloc/log.hpp"

namespace cogniloc {

enum class CandidateStage { retrieved, filtered };

/// Ordered candidate list, scores non-increasing within the stage's metric
/// (BM25 for retrieved, filter relevance for filtered).
struct CandidateSet {
    CandidateStage stage = CandidateStage::retrieved;
    std::vector<std::pair<std::string, double>> entries;

    bool contains(const std::string& id) const {
        for (const auto& [segment, score] : entries) {
            if (segment == id) {
                return true;
            }
        }
        return false;
    }
};

/// Root-cause conjecture for one segment. Category and score stay consistent
/// with the fixed banding: high >= 0.7, medium in [0.4, 0.7), low < 0.4.
struct Hypothesis {
    std::string segment;
    std::string statement;
    ConfidenceCategory category = ConfidenceCategory::low;
    double score = 0.0;
};

inline ConfidenceCategory category_for_score(double score) {
    if (score >= 0.7) {
        return ConfidenceCategory::high;
    }
    if (score >= 0.4) {
        return ConfidenceCategory::medium;
    }
    return ConfidenceCategory::low;
}

/// Truncates a segment body for prompt contexts, dropping the tail and
/// appending a marker.
inline std::string capped_body(const std::string& body, std::size_t cap) {
    if (body.size() <= cap) {
        return body;
    }
    return body.substr(0, cap) + "\n...[truncated]";
}

/// Cleans the bug report into a retrieval query via the restructurer role.
/// Any backend failure degrades to the verbatim title+description.
inline std::string restructure_report(const BugReport& report, AgentBackend& backend) {
    if (report.title.empty() && report.description.empty()) {
        throw EmptyReport(report.id);
    }
    AgentRequest request;
    request.role = AgentRole::restructurer;
    request.bug_id = report.id;
    request.context = {{"report", report_text(report)}};
    try {
        return backend.complete(request).restructure().text;
    } catch (const BackendError& error) {
        Log::warn("restructure degraded to raw report for " + report.id + ": " + error.what());
        return report_text(report);
    }
}

inline CandidateSet retrieve_candidates(const std::string& query, const CodeGraph& graph,
                                        std::size_t k = 100) {
    CandidateSet result;
    result.stage = CandidateStage::retrieved;
    for (const SearchHit& hit : graph.search(query, k)) {
        result.entries.emplace_back(hit.segment, hit.score);
    }
    return result;
}

/// Intelligent relevance feedback: one filter-role call per candidate, keep
/// the top n by relevance with ties resolved in retrieval order. Backend
/// failures score the candidate 0 rather than aborting the pipeline.
inline CandidateSet filter_candidates(const BugReport& report, const CandidateSet& candidates,
                                      const CodeGraph& graph, AgentBackend& backend,
                                      std::size_t n = 10, std::size_t body_char_cap = 8000) {
    std::vector<double> scores;
    scores.reserve(candidates.entries.size());
    for (const auto& [segment_id, retrieval_score] : candidates.entries) {
        (void)retrieval_score;
        AgentRequest request;
        request.role = AgentRole::filter;
        request.bug_id = report.id;
        request.focus_segment = segment_id;
        request.context = {{"report", report_text(report)},
                           {"segment_id", segment_id},
                           {"segment_body", capped_body(graph.segment(segment_id).body,
                                                        body_char_cap)}};
        try {
            scores.push_back(backend.complete(request).filter().relevance);
        } catch (const BackendError& error) {
            Log::warn("filter scored 0 for " + segment_id + ": " + error.what());
            scores.push_back(0.0);
        }
    }

    std::vector<std::size_t> order(candidates.entries.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&scores](std::size_t lhs, std::size_t rhs) {
                         return scores[lhs] > scores[rhs];
                     });
    if (order.size() > n) {
        order.resize(n);
    }

    CandidateSet filtered;
    filtered.stage = CandidateStage::filtered;
    for (const std::size_t index : order) {
        filtered.entries.emplace_back(candidates.entries[index].first, scores[index]);
    }
    return filtered;
}

/// One competitive hypothesis per filtered candidate, in candidate order. The
/// category is repaired to the score band (the score wins over the stated
/// category); a failed call yields a low/0 hypothesis.
inline std::vector<Hypothesis> generate_hypotheses(const BugReport& report,
                                                   const CandidateSet& filtered,
                                                   const CodeGraph& graph, AgentBackend& backend,
                                                   std::size_t body_char_cap = 8000) {
    nlohmann::json candidate_names = nlohmann::json::array();
    for (const auto& [segment_id, score] : filtered.entries) {
        (void)score;
        candidate_names.push_back(graph.segment(segment_id).qualified_name);
    }

    std::vector<Hypothesis> hypotheses;
    hypotheses.reserve(filtered.entries.size());
    for (const auto& [segment_id, score] : filtered.entries) {
        (void)score;
        AgentRequest request;
        request.role = AgentRole::hypothesis;
        request.bug_id = report.id;
        request.focus_segment = segment_id;
        request.context = {{"report", report_text(report)},
                           {"segment_id", segment_id},
                           {"segment_body", capped_body(graph.segment(segment_id).body,
                                                        body_char_cap)},
                           {"candidates", candidate_names}};
        Hypothesis hypothesis;
        hypothesis.segment = segment_id;
        try {
            const AgentResponse response = backend.complete(request);
            hypothesis.statement = response.hypothesis().statement;
            hypothesis.score = response.hypothesis().score;
        } catch (const BackendError& error) {
            Log::warn("hypothesis degraded to low/0 for " + segment_id + ": " + error.what());
            hypothesis.score = 0.0;
        }
        hypothesis.category = category_for_score(hypothesis.score);
        hypotheses.push_back(std::move(hypothesis));
    }
    return hypotheses;
}

/// Keeps high- and medium-confidence hypotheses, ordered by score descending;
/// equal scores keep their input order.
inline std::vector<Hypothesis> retain_for_investigation(const std::vector<Hypothesis>& hypotheses) {
    std::vector<Hypothesis> retained;
    for (const Hypothesis& hypothesis : hypotheses) {
        if (hypothesis.category != ConfidenceCategory::low) {
            retained.push_back(hypothesis);
        }
    }
    std::stable_sort(retained.begin(), retained.end(),
                     [](const Hypothesis& lhs, const Hypothesis& rhs) {
                         return lhs.score > rhs.score;
                     });
    return retained;
}

}  // namespace cogniloc
