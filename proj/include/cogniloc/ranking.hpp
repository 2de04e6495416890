#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cogniloc/agent.hpp"
#include "cogniloc/bug_report.hpp"
#include "cogniloc/code_graph.hpp"
#include "cogniloc/investigation.hpp"
#include "cogniloc/log.hpp"
#include "cogniloc/pipeline.hpp"

namespace cogniloc {

/// Investigated candidate after observer validation and score fusion.
struct ScoredCandidate {
    CallChain chain;
    Hypothesis hypothesis;
    double supervisor_conf = 0.0;
    double observer_conf = 0.0;
    double final_score = 0.0;
    bool accepted = false;
};

enum class Provenance { investigated, hypothesis_backfill, filter_backfill };

inline const char* to_string(Provenance provenance) {
    switch (provenance) {
        case Provenance::investigated: return "investigated";
        case Provenance::hypothesis_backfill: return "hypothesis_backfill";
        case Provenance::filter_backfill: return "filter_backfill";
    }
    return "investigated";
}

struct RankedMethod {
    std::string segment;
    Provenance provenance = Provenance::investigated;

    friend bool operator==(const RankedMethod&, const RankedMethod&) = default;
};

struct RankedResult {
    std::string bug_id;
    std::vector<RankedMethod> methods;
    std::vector<std::string> documents;
    std::size_t k = 10;
};

/// Independent validation of one investigation: the observer scores how well
/// the evidence supports the hypothesis. A backend failure falls back to the
/// supervisor's confidence (neutral fusion).
inline double observe(const BugReport& report, const InvestigationOutcome& candidate,
                      AgentBackend& backend) {
    AgentRequest request;
    request.role = AgentRole::observer;
    request.bug_id = report.id;
    request.focus_segment = candidate.hypothesis.segment;
    nlohmann::json chain = nlohmann::json::array();
    for (const std::string& segment : candidate.chain.path) {
        chain.push_back(segment);
    }
    request.context = {{"report", report_text(report)},
                       {"hypothesis", candidate.hypothesis.statement},
                       {"chain", chain},
                       {"rationale", candidate.rationale}};
    try {
        return std::clamp(backend.complete(request).observation().score, 0.0, 1.0);
    } catch (const BackendError& error) {
        Log::warn("observer fell back to supervisor confidence for " +
                  candidate.hypothesis.segment + ": " + error.what());
        return candidate.supervisor_conf;
    }
}

/// Weighted mean of supervisor and observer confidence; 0.5 gives the plain
/// symmetric mean.
inline ScoredCandidate fuse(const InvestigationOutcome& outcome, double observer_conf,
                            double supervisor_weight = 0.5) {
    ScoredCandidate scored;
    scored.chain = outcome.chain;
    scored.hypothesis = outcome.hypothesis;
    scored.supervisor_conf = outcome.supervisor_conf;
    scored.observer_conf = observer_conf;
    scored.accepted = outcome.accepted;
    scored.final_score =
        supervisor_weight * outcome.supervisor_conf + (1.0 - supervisor_weight) * observer_conf;
    return scored;
}

namespace detail {

inline void emit(std::vector<RankedMethod>& out, std::set<std::string>& seen,
                 const std::string& segment, Provenance provenance, std::size_t k) {
    if (out.size() >= k || seen.count(segment)) {
        return;
    }
    seen.insert(segment);
    out.push_back({segment, provenance});
}

}  // namespace detail

/// Final method-level ranking:
///   1. investigated candidates by fused score, each contributing its chain
///      in path order;
///   2. backfill from non-investigated hypotheses by confidence;
///   3. backfill from the filtered set in filter-score order;
/// duplicates skipped throughout, truncated at k. A rejected candidate keeps
/// its fused-score position only when that score beats every backfill
/// hypothesis; otherwise it re-enters the backfill at its hypothesis score.
inline std::vector<RankedMethod> rank_methods(const std::vector<ScoredCandidate>& candidates,
                                              const std::vector<Hypothesis>& hypotheses,
                                              const CandidateSet& filtered, std::size_t k = 10) {
    std::set<std::string> investigated_segments;
    for (const ScoredCandidate& candidate : candidates) {
        investigated_segments.insert(candidate.hypothesis.segment);
    }

    std::map<std::string, std::size_t> hypothesis_position;
    for (std::size_t i = 0; i < hypotheses.size(); ++i) {
        hypothesis_position.emplace(hypotheses[i].segment, i);
    }

    std::vector<const Hypothesis*> backfill_hypotheses;
    double max_backfill_score = -1.0;
    for (const Hypothesis& hypothesis : hypotheses) {
        if (!investigated_segments.count(hypothesis.segment)) {
            backfill_hypotheses.push_back(&hypothesis);
            max_backfill_score = std::max(max_backfill_score, hypothesis.score);
        }
    }

    std::vector<const ScoredCandidate*> ranked;
    std::vector<const ScoredCandidate*> demoted;
    for (const ScoredCandidate& candidate : candidates) {
        if (candidate.accepted || candidate.final_score > max_backfill_score) {
            ranked.push_back(&candidate);
        } else {
            demoted.push_back(&candidate);
        }
    }
    std::sort(ranked.begin(), ranked.end(),
              [](const ScoredCandidate* lhs, const ScoredCandidate* rhs) {
                  if (lhs->final_score != rhs->final_score) {
                      return lhs->final_score > rhs->final_score;
                  }
                  if (lhs->hypothesis.score != rhs->hypothesis.score) {
                      return lhs->hypothesis.score > rhs->hypothesis.score;
                  }
                  return lhs->hypothesis.segment < rhs->hypothesis.segment;
              });

    std::vector<RankedMethod> methods;
    std::set<std::string> seen;
    for (const ScoredCandidate* candidate : ranked) {
        for (const std::string& segment : candidate->chain.path) {
            detail::emit(methods, seen, segment, Provenance::investigated, k);
        }
    }

    // Hypothesis backfill: plain hypotheses contribute their segment, demoted
    // candidates their whole chain, all ordered by hypothesis score with ties
    // in hypothesis-list order.
    struct BackfillEntry {
        double score;
        std::size_t position;
        const Hypothesis* hypothesis;
        const ScoredCandidate* candidate;
    };
    std::vector<BackfillEntry> backfill;
    for (const Hypothesis* hypothesis : backfill_hypotheses) {
        backfill.push_back(
            {hypothesis->score, hypothesis_position[hypothesis->segment], hypothesis, nullptr});
    }
    for (const ScoredCandidate* candidate : demoted) {
        const auto position = hypothesis_position.find(candidate->hypothesis.segment);
        backfill.push_back({candidate->hypothesis.score,
                            position == hypothesis_position.end() ? hypotheses.size()
                                                                  : position->second,
                            nullptr, candidate});
    }
    std::sort(backfill.begin(), backfill.end(), [](const BackfillEntry& lhs,
                                                   const BackfillEntry& rhs) {
        if (lhs.score != rhs.score) {
            return lhs.score > rhs.score;
        }
        return lhs.position < rhs.position;
    });
    for (const BackfillEntry& entry : backfill) {
        if (entry.hypothesis) {
            detail::emit(methods, seen, entry.hypothesis->segment,
                         Provenance::hypothesis_backfill, k);
        } else {
            for (const std::string& segment : entry.candidate->chain.path) {
                detail::emit(methods, seen, segment, Provenance::hypothesis_backfill, k);
            }
        }
    }

    for (const auto& [segment, score] : filtered.entries) {
        (void)score;
        detail::emit(methods, seen, segment, Provenance::filter_backfill, k);
    }
    return methods;
}

/// Projects methods onto their documents, keeping the first occurrence of
/// each path, truncated at k.
inline std::vector<std::string> rank_documents(const std::vector<RankedMethod>& methods,
                                               const CodeGraph& graph, std::size_t k = 10) {
    std::vector<std::string> documents;
    std::set<std::string> seen;
    for (const RankedMethod& method : methods) {
        if (documents.size() >= k) {
            break;
        }
        const std::string& path = graph.segment(method.segment).document_path;
        if (seen.insert(path).second) {
            documents.push_back(path);
        }
    }
    return documents;
}

// -- results file ---------------------------------------------------------------

inline nlohmann::json ranked_result_to_json(const RankedResult& result) {
    nlohmann::json methods = nlohmann::json::array();
    for (const RankedMethod& method : result.methods) {
        methods.push_back({{"segment_id", method.segment},
                           {"provenance", std::string(to_string(method.provenance))}});
    }
    nlohmann::json documents = nlohmann::json::array();
    for (const std::string& path : result.documents) {
        documents.push_back(path);
    }
    return {{"bug_id", result.bug_id}, {"methods", methods}, {"documents", documents}};
}

}  // namespace cogniloc
