#pragma once

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cogniloc/agent.hpp"
#include "cogniloc/bug_report.hpp"
#include "cogniloc/code_graph.hpp"
#include "cogniloc/errors.hpp"
#include "cogniloc/log.hpp"
#include "cogniloc/pipeline.hpp"

namespace cogniloc {

/// Ordered segment path rooted at the investigated segment. Consecutive
/// elements are connected by invokes edges; confidence is the recorded
/// confidence of the last element, or 0 for the bare-start fallback.
struct CallChain {
    std::vector<std::string> path;
    double confidence = 0.0;

    friend bool operator==(const CallChain&, const CallChain&) = default;
};

/// Exploration-local working memory: the verdicts along the surviving DFS
/// path plus accepted history. Pruned suffixes are removed.
class Scratchpad {
  public:
    void push(const std::string& segment, ExplorationVerdict verdict) {
        if (contains(segment)) {
            throw std::logic_error("scratchpad already holds " + segment);
        }
        entries_.emplace_back(segment, std::move(verdict));
    }

    /// Removes `from_segment` and everything recorded after it.
    void prune(const std::string& from_segment) {
        for (std::size_t i = 0; i < entries_.size(); ++i) {
            if (entries_[i].first == from_segment) {
                entries_.resize(i);
                return;
            }
        }
        throw PruneTargetAbsent(from_segment);
    }

    bool contains(const std::string& segment) const {
        for (const auto& [id, verdict] : entries_) {
            (void)verdict;
            if (id == segment) {
                return true;
            }
        }
        return false;
    }

    const std::vector<std::pair<std::string, ExplorationVerdict>>& entries() const {
        return entries_;
    }

    bool empty() const { return entries_.empty(); }

  private:
    std::vector<std::pair<std::string, ExplorationVerdict>> entries_;
};

struct ExplorationParams {
    int max_depth = 5;
    double tau = 0.9;
    double c_parent = 0.0;
};

enum class TraceAction { expand, prune, early_stop, skip_visited, skip_depth };

inline const char* to_string(TraceAction action) {
    switch (action) {
        case TraceAction::expand: return "expand";
        case TraceAction::prune: return "prune";
        case TraceAction::early_stop: return "early_stop";
        case TraceAction::skip_visited: return "skip_visited";
        case TraceAction::skip_depth: return "skip_depth";
    }
    return "expand";
}

/// One exploration event; conf is 0 for skips and for segments whose verdict
/// could not be obtained.
struct TraceRecord {
    std::string segment;
    int depth = 0;
    double conf = 0.0;
    TraceAction action = TraceAction::expand;

    friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

/// Everything one exploration produced: the best chain, the event trace, the
/// surviving scratchpad and the number of explorer calls issued.
struct ExplorationRun {
    CallChain chain;
    std::vector<TraceRecord> trace;
    Scratchpad scratchpad;
    int backend_calls = 0;
};

namespace detail {

struct ExplorationState {
    const BugReport& report;
    const CodeGraph& graph;
    AgentBackend& backend;
    const ExplorationParams& params;

    std::set<std::string> visited;
    Scratchpad pad;
    std::vector<std::string> path;
    CallChain best;
    bool stop = false;
    std::vector<TraceRecord> trace;
    int calls = 0;
};

inline ExplorationVerdict explorer_verdict(ExplorationState& state, const std::string& segment) {
    AgentRequest request;
    request.role = AgentRole::explorer;
    request.bug_id = state.report.id;
    request.focus_segment = segment;
    nlohmann::json path_json = nlohmann::json::array();
    for (const std::string& step : state.path) {
        path_json.push_back(step);
    }
    request.context = {{"report", report_text(state.report)},
                       {"path", path_json},
                       {"segment_id", segment},
                       {"segment_body", state.graph.segment(segment).body},
                       {"callees", state.graph.callees_of(segment, EdgeKind::invokes)},
                       {"tau", state.params.tau}};
    ++state.calls;
    ExplorationVerdict verdict = state.backend.complete(request).verdict();
    verdict.conf = std::clamp(verdict.conf, 0.0, 1.0);
    return verdict;
}

inline void explore_children(ExplorationState& state, const std::string& from,
                             const std::vector<std::string>& calls, int depth, double parent_conf);

inline void dfs(ExplorationState& state, const std::string& segment, int depth,
                double parent_conf) {
    if (state.stop) {
        return;
    }
    if (state.visited.count(segment)) {
        state.trace.push_back({segment, depth, 0.0, TraceAction::skip_visited});
        return;
    }
    if (depth > state.params.max_depth) {
        state.trace.push_back({segment, depth, 0.0, TraceAction::skip_depth});
        return;
    }
    state.visited.insert(segment);
    if (!state.graph.contains(segment)) {
        // Unknown id mid-walk: confidence 0, prune without a backend call.
        state.trace.push_back({segment, depth, 0.0, TraceAction::prune});
        return;
    }
    state.path.push_back(segment);

    ExplorationVerdict verdict;
    try {
        verdict = explorer_verdict(state, segment);
    } catch (const BackendError& error) {
        Log::warn("explorer failed on " + segment + ", pruning: " + error.what());
        state.path.pop_back();
        state.trace.push_back({segment, depth, 0.0, TraceAction::prune});
        return;
    }

    state.pad.push(segment, verdict);
    if (verdict.conf < parent_conf) {
        state.pad.prune(segment);
        state.path.pop_back();
        state.trace.push_back({segment, depth, verdict.conf, TraceAction::prune});
        return;
    }
    if (verdict.conf > state.best.confidence) {
        state.best = {state.path, verdict.conf};
    }
    if (verdict.conf >= state.params.tau) {
        state.best = {state.path, verdict.conf};
        state.trace.push_back({segment, depth, verdict.conf, TraceAction::early_stop});
        state.stop = true;
        return;
    }
    state.trace.push_back({segment, depth, verdict.conf, TraceAction::expand});
    explore_children(state, segment, verdict.calls_to_explore, depth + 1, verdict.conf);
    state.path.pop_back();
}

/// Walks the proposed calls in order. Ids missing from the graph flow into
/// dfs and are prune-traced at confidence 0; resolvable proposals that are
/// not invokes-callees of `from` cannot extend a valid chain and are dropped.
inline void explore_children(ExplorationState& state, const std::string& from,
                             const std::vector<std::string>& calls, int depth,
                             double parent_conf) {
    for (const std::string& call : calls) {
        if (state.stop) {
            return;
        }
        if (state.graph.contains(call) && !state.graph.has_invokes_edge(from, call)) {
            Log::warn("dropping non-callee proposal " + call + " from " + from);
            continue;
        }
        dfs(state, call, depth, parent_conf);
    }
}

}  // namespace detail

/// Depth-first call-chain analysis. Seeds are explored in the given order
/// starting from `start_segment` (depth 1, parent confidence
/// params.c_parent). Each visited segment gets one explorer verdict; branches
/// whose confidence drops below their parent's are pruned from the path and
/// scratchpad, and the first confidence >= tau stops the entire run and
/// returns the current path. Otherwise the best chain seen is returned, or
/// ([start_segment], 0) when nothing improved on the initial empty chain.
inline ExplorationRun click2cause_run(const BugReport& report, const std::string& start_segment,
                                      const std::vector<std::string>& calls_to_explore,
                                      const ExplorationParams& params, const CodeGraph& graph,
                                      AgentBackend& backend) {
    if (!graph.contains(start_segment)) {
        throw UnknownSegment(start_segment);
    }
    detail::ExplorationState state{report, graph, backend, params, {}, {}, {}, {}, false, {}, 0};
    // The start segment was already reviewed by the caller; mark it visited so
    // cycles cannot re-enter it and chains never repeat a segment.
    state.visited.insert(start_segment);
    state.path.push_back(start_segment);
    detail::explore_children(state, start_segment, calls_to_explore, 1, params.c_parent);

    ExplorationRun run;
    run.trace = std::move(state.trace);
    run.scratchpad = std::move(state.pad);
    run.backend_calls = state.calls;
    if (state.best.path.empty()) {
        run.chain = {{start_segment}, 0.0};
    } else {
        run.chain = std::move(state.best);
    }
    return run;
}

inline CallChain click2cause(const BugReport& report, const std::string& start_segment,
                             const std::vector<std::string>& calls_to_explore,
                             const ExplorationParams& params, const CodeGraph& graph,
                             AgentBackend& backend) {
    return click2cause_run(report, start_segment, calls_to_explore, params, graph, backend).chain;
}

struct InvestigationOutcome {
    Hypothesis hypothesis;
    CallChain chain;
    double supervisor_conf = 0.0;
    bool accepted = false;
    int backend_calls = 0;
    std::string rationale;
    std::vector<TraceRecord> trace;
};

namespace detail {

inline nlohmann::json chain_json(const CallChain& chain) {
    nlohmann::json path = nlohmann::json::array();
    for (const std::string& segment : chain.path) {
        path.push_back(segment);
    }
    return path;
}

inline ExplorationVerdict supervisor_call(const BugReport& report, const Hypothesis& hypothesis,
                                          const CodeGraph& graph, AgentBackend& backend,
                                          const std::string& focus_segment,
                                          const CallChain* chain, const std::string& rationale) {
    AgentRequest request;
    request.role = AgentRole::supervisor;
    request.bug_id = report.id;
    request.focus_segment = focus_segment;
    request.context = {{"report", report_text(report)},
                       {"hypothesis", hypothesis.statement},
                       {"segment_id", focus_segment},
                       {"segment_body", graph.segment(focus_segment).body},
                       {"callees", graph.callees_of(focus_segment, EdgeKind::invokes)}};
    if (chain) {
        request.context["chain"] = chain_json(*chain);
        request.context["scratchpad"] = rationale;
    }
    ExplorationVerdict verdict = backend.complete(request).verdict();
    verdict.conf = std::clamp(verdict.conf, 0.0, 1.0);
    return verdict;
}

inline std::vector<std::string> valid_seeds(const CodeGraph& graph, const std::string& segment,
                                            const std::vector<std::string>& proposals) {
    std::vector<std::string> seeds;
    for (const std::string& proposal : proposals) {
        if (graph.has_invokes_edge(segment, proposal)) {
            seeds.push_back(proposal);
        }
    }
    return seeds;
}

inline std::string collect_rationale(const Scratchpad& pad) {
    std::string text;
    for (const auto& [segment, verdict] : pad.entries()) {
        if (verdict.rationale.empty()) {
            continue;
        }
        if (!text.empty()) {
            text += "\n";
        }
        text += segment + ": " + verdict.rationale;
    }
    return text;
}

}  // namespace detail

/// Supervisor-driven hypothesis test. The supervisor reviews the segment;
/// when it elects exploration the selected calls seed click2cause with the
/// hypothesis score as initial confidence and its depth proposal capped by
/// params.max_depth. The returned chain is then assessed against the
/// hypothesis; below the acceptance threshold the supervisor may initiate at
/// most one further exploration round before concluding. Supervisor-level
/// backend failures degrade to a rejected outcome at half the hypothesis
/// score.
inline InvestigationOutcome investigate(const BugReport& report, const Hypothesis& hypothesis,
                                        const CodeGraph& graph, AgentBackend& backend,
                                        const ExplorationParams& params,
                                        double acceptance_threshold = 0.6) {
    if (!graph.contains(hypothesis.segment)) {
        throw UnknownSegment(hypothesis.segment);
    }
    InvestigationOutcome outcome;
    outcome.hypothesis = hypothesis;

    ExplorationVerdict review;
    try {
        ++outcome.backend_calls;
        review = detail::supervisor_call(report, hypothesis, graph, backend, hypothesis.segment,
                                         nullptr, "");
    } catch (const BackendError& error) {
        Log::warn("supervisor review failed for " + hypothesis.segment + ": " + error.what());
        outcome.chain = {{hypothesis.segment}, 0.0};
        outcome.supervisor_conf = hypothesis.score * 0.5;
        outcome.accepted = false;
        return outcome;
    }

    std::vector<std::string> seeds =
        detail::valid_seeds(graph, hypothesis.segment, review.calls_to_explore);
    if (seeds.empty()) {
        outcome.chain = {{hypothesis.segment}, review.conf};
        outcome.supervisor_conf = review.conf;
        outcome.accepted = review.conf >= acceptance_threshold;
        outcome.rationale = review.rationale;
        return outcome;
    }

    ExplorationParams effective = params;
    effective.c_parent = hypothesis.score;
    if (review.depth) {
        effective.max_depth = std::clamp(*review.depth, 1, params.max_depth);
    }

    ExplorationRun run =
        click2cause_run(report, hypothesis.segment, seeds, effective, graph, backend);
    outcome.backend_calls += run.backend_calls;
    outcome.trace = run.trace;
    outcome.chain = run.chain;
    outcome.rationale = detail::collect_rationale(run.scratchpad);

    // Assessment loop: accept, or re-explore at most once, then conclude.
    for (int round = 0; round < 2; ++round) {
        ExplorationVerdict assessment;
        try {
            ++outcome.backend_calls;
            assessment = detail::supervisor_call(report, hypothesis, graph, backend,
                                                 outcome.chain.path.back(), &outcome.chain,
                                                 outcome.rationale);
        } catch (const BackendError& error) {
            Log::warn("supervisor assessment failed for " + hypothesis.segment + ": " +
                      error.what());
            outcome.supervisor_conf = hypothesis.score * 0.5;
            outcome.accepted = false;
            return outcome;
        }
        outcome.supervisor_conf = assessment.conf;
        if (assessment.conf >= acceptance_threshold) {
            outcome.accepted = true;
            return outcome;
        }
        if (round == 1) {
            break;
        }
        const std::vector<std::string> reseeds =
            detail::valid_seeds(graph, hypothesis.segment, assessment.calls_to_explore);
        if (reseeds.empty()) {
            break;
        }
        ExplorationRun retry =
            click2cause_run(report, hypothesis.segment, reseeds, effective, graph, backend);
        outcome.backend_calls += retry.backend_calls;
        outcome.trace.insert(outcome.trace.end(), retry.trace.begin(), retry.trace.end());
        if (retry.chain.confidence > outcome.chain.confidence) {
            outcome.chain = retry.chain;
            outcome.rationale = detail::collect_rationale(retry.scratchpad);
        }
    }
    outcome.accepted = false;
    return outcome;
}

}  // namespace cogniloc
