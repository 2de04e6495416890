#pragma once

#include <atomic>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cogniloc/agent.hpp"
#include "cogniloc/bug_report.hpp"
#include "cogniloc/code_graph.hpp"
#include "cogniloc/errors.hpp"
#include "cogniloc/investigation.hpp"
#include "cogniloc/pipeline.hpp"
#include "cogniloc/ranking.hpp"
#include "cogniloc/remote_backend.hpp"
#include "cogniloc/scripted_backend.hpp"

namespace cogniloc {

/// Stage toggles mirroring the five ablatable modules.
struct StageFlags {
    bool restructuring = true;
    bool filtering = true;
    bool hypothesis = true;
    bool investigation = true;
    bool observer = true;
};

struct RunConfig {
    std::optional<std::string> scripted_path;
    std::optional<RemoteConfig> remote;

    std::size_t top_retrieve = 100;
    std::size_t top_filter = 10;
    double tau = 0.9;
    int max_depth_cap = 5;
    double acceptance_threshold = 0.6;
    std::size_t k = 10;
    double temperature = 0.5;
    int parallelism = 1;

    double supervisor_weight = 0.5;
    std::size_t body_char_cap = 8000;
    StageFlags stages;
    bool trace = false;
};

namespace detail {

inline void check_range(bool ok, const std::string& what) {
    if (!ok) {
        throw MalformedFixture("config value out of range: " + what);
    }
}

}  // namespace detail

inline RunConfig parse_config(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw MalformedFixture("config must be a JSON object");
    }
    RunConfig config;
    bool remote_temperature_set = false;
    for (const auto& [key, value] : doc.items()) {
        if (key == "backend") {
            if (value.contains("scripted")) {
                config.scripted_path = value["scripted"].get<std::string>();
            } else if (value.contains("remote")) {
                const auto& remote = value["remote"];
                RemoteConfig parsed;
                parsed.endpoint = remote.value("endpoint", std::string());
                if (remote.contains("models")) {
                    for (const auto& [role_key, model] : remote["models"].items()) {
                        const auto role = role_from_name(role_key);
                        if (!role) {
                            throw MalformedFixture("unknown role in remote models: " + role_key);
                        }
                        parsed.models[*role] = model.get<std::string>();
                    }
                }
                remote_temperature_set = remote.contains("temperature");
                parsed.temperature = remote.value("temperature", 0.5);
                parsed.timeout_seconds = remote.value("timeout", 60);
                config.remote = std::move(parsed);
            } else {
                throw MalformedFixture("backend must name scripted or remote");
            }
        } else if (key == "top_retrieve") {
            config.top_retrieve = value.get<std::size_t>();
            detail::check_range(config.top_retrieve >= 1, "top_retrieve");
        } else if (key == "top_filter") {
            config.top_filter = value.get<std::size_t>();
            detail::check_range(config.top_filter >= 1, "top_filter");
        } else if (key == "tau") {
            config.tau = value.get<double>();
            detail::check_range(config.tau > 0.0 && config.tau <= 1.0, "tau");
        } else if (key == "max_depth_cap") {
            config.max_depth_cap = value.get<int>();
            detail::check_range(config.max_depth_cap >= 1, "max_depth_cap");
        } else if (key == "acceptance_threshold") {
            config.acceptance_threshold = value.get<double>();
            detail::check_range(config.acceptance_threshold >= 0.0 &&
                                    config.acceptance_threshold <= 1.0,
                                "acceptance_threshold");
        } else if (key == "k") {
            config.k = value.get<std::size_t>();
            detail::check_range(config.k >= 1, "k");
        } else if (key == "temperature") {
            config.temperature = value.get<double>();
            detail::check_range(config.temperature >= 0.0 && config.temperature <= 1.0,
                                "temperature");
        } else if (key == "parallelism") {
            config.parallelism = value.get<int>();
            detail::check_range(config.parallelism >= 1, "parallelism");
        } else if (key == "supervisor_weight") {
            config.supervisor_weight = value.get<double>();
            detail::check_range(config.supervisor_weight >= 0.0 && config.supervisor_weight <= 1.0,
                                "supervisor_weight");
        } else if (key == "body_char_cap") {
            config.body_char_cap = value.get<std::size_t>();
            detail::check_range(config.body_char_cap >= 1, "body_char_cap");
        } else if (key == "restructuring") {
            config.stages.restructuring = value.get<bool>();
        } else if (key == "filtering") {
            config.stages.filtering = value.get<bool>();
        } else if (key == "hypothesis") {
            config.stages.hypothesis = value.get<bool>();
        } else if (key == "investigation") {
            config.stages.investigation = value.get<bool>();
        } else if (key == "observer") {
            config.stages.observer = value.get<bool>();
        } else if (key == "trace") {
            config.trace = value.get<bool>();
        } else {
            throw MalformedFixture("unknown config field: " + key);
        }
    }
    // The run-level temperature seeds the remote wire value unless the remote
    // block pinned its own.
    if (config.remote && !remote_temperature_set) {
        config.remote->temperature = config.temperature;
    }
    return config;
}

/// Loads a config file. A relative scripted-backend path is resolved against
/// the config file's directory.
inline RunConfig load_config(const std::string& path) {
    nlohmann::json doc = nlohmann::json::parse(detail::read_file(path), nullptr, false);
    if (doc.is_discarded()) {
        throw MalformedFixture("config file is not valid JSON: " + path);
    }
    RunConfig config = parse_config(doc);
    if (config.scripted_path) {
        const std::filesystem::path scripted(*config.scripted_path);
        if (scripted.is_relative()) {
            config.scripted_path =
                (std::filesystem::path(path).parent_path() / scripted).string();
        }
    }
    return config;
}

/// Write-once holder for one pipeline stage's output; a second write is a
/// stage-isolation defect and throws StageOverwrite.
template <typename T>
class StageSlot {
  public:
    explicit StageSlot(const char* field): field_(field) {}

    void set(T value) {
        if (value_) {
            throw StageOverwrite(field_);
        }
        value_ = std::move(value);
    }

    bool has_value() const { return value_.has_value(); }
    const T& get() const { return *value_; }

  private:
    const char* field_;
    std::optional<T> value_;
};

/// Shared pipeline state for one bug. Every stage writes exactly its own
/// slot; earlier slots are immutable afterwards.
struct PipelineState {
    explicit PipelineState(BugReport bug_report): bug(std::move(bug_report)) {}

    BugReport bug;
    StageSlot<std::string> restructured{"restructured"};
    StageSlot<CandidateSet> retrieved{"retrieved"};
    StageSlot<CandidateSet> filtered{"filtered"};
    StageSlot<std::vector<Hypothesis>> hypotheses{"hypotheses"};
    StageSlot<std::vector<InvestigationOutcome>> outcomes{"outcomes"};
    StageSlot<std::vector<ScoredCandidate>> scored{"scored"};
    StageSlot<RankedResult> result{"result"};
    std::map<std::string, int> call_counter;
};

/// Runs the full per-bug pipeline against one graph. Stage toggles replace a
/// disabled stage with its documented pass-through.
inline PipelineState run_bug(const BugReport& bug, const CodeGraph& graph, AgentBackend& backend,
                             const RunConfig& config) {
    PipelineState state(bug);
    CountingBackend counting(backend);

    if (config.stages.restructuring) {
        state.restructured.set(restructure_report(bug, counting));
    } else {
        state.restructured.set(report_text(bug));
    }

    state.retrieved.set(retrieve_candidates(state.restructured.get(), graph, config.top_retrieve));

    if (state.retrieved.get().entries.empty()) {
        state.filtered.set(CandidateSet{CandidateStage::filtered, {}});
        state.hypotheses.set({});
        state.outcomes.set({});
        state.scored.set({});
        state.result.set(RankedResult{bug.id, {}, {}, config.k});
        state.call_counter = counting.snapshot();
        return state;
    }

    if (config.stages.filtering) {
        state.filtered.set(filter_candidates(bug, state.retrieved.get(), graph, counting,
                                             config.top_filter, config.body_char_cap));
    } else {
        CandidateSet head;
        head.stage = CandidateStage::filtered;
        const auto& entries = state.retrieved.get().entries;
        for (std::size_t i = 0; i < entries.size() && i < config.top_filter; ++i) {
            head.entries.push_back(entries[i]);
        }
        state.filtered.set(std::move(head));
    }

    if (config.stages.hypothesis) {
        state.hypotheses.set(generate_hypotheses(bug, state.filtered.get(), graph, counting,
                                                 config.body_char_cap));
    } else {
        std::vector<Hypothesis> neutral;
        for (const auto& [segment, score] : state.filtered.get().entries) {
            (void)score;
            neutral.push_back({segment, "", ConfidenceCategory::medium, 0.5});
        }
        state.hypotheses.set(std::move(neutral));
    }

    std::vector<InvestigationOutcome> outcomes;
    if (config.stages.investigation) {
        ExplorationParams params;
        params.max_depth = config.max_depth_cap;
        params.tau = config.tau;
        for (const Hypothesis& hypothesis : retain_for_investigation(state.hypotheses.get())) {
            outcomes.push_back(investigate(bug, hypothesis, graph, counting, params,
                                           config.acceptance_threshold));
        }
    }
    state.outcomes.set(std::move(outcomes));

    std::vector<ScoredCandidate> scored;
    for (const InvestigationOutcome& outcome : state.outcomes.get()) {
        const double observer_conf = config.stages.observer ? observe(bug, outcome, counting)
                                                            : outcome.supervisor_conf;
        scored.push_back(fuse(outcome, observer_conf, config.supervisor_weight));
    }
    state.scored.set(std::move(scored));

    RankedResult result;
    result.bug_id = bug.id;
    result.k = config.k;
    result.methods =
        rank_methods(state.scored.get(), state.hypotheses.get(), state.filtered.get(), config.k);
    result.documents = rank_documents(result.methods, graph, config.k);
    state.result.set(std::move(result));

    state.call_counter = counting.snapshot();
    return state;
}

namespace detail {

inline nlohmann::json candidate_set_json(const CandidateSet& candidates) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [segment, score] : candidates.entries) {
        entries.push_back({{"segment", segment}, {"score", score}});
    }
    return entries;
}

inline nlohmann::json trace_json(const std::vector<TraceRecord>& trace) {
    nlohmann::json records = nlohmann::json::array();
    for (const TraceRecord& record : trace) {
        records.push_back({{"segment", record.segment},
                           {"depth", record.depth},
                           {"conf", record.conf},
                           {"action", std::string(to_string(record.action))}});
    }
    return records;
}

inline nlohmann::json audit_json(const PipelineState& state, bool include_trace) {
    nlohmann::json hypotheses = nlohmann::json::array();
    for (const Hypothesis& hypothesis : state.hypotheses.get()) {
        hypotheses.push_back({{"segment", hypothesis.segment},
                              {"statement", hypothesis.statement},
                              {"category", std::string(to_string(hypothesis.category))},
                              {"score", hypothesis.score}});
    }
    nlohmann::json outcomes = nlohmann::json::array();
    for (const InvestigationOutcome& outcome : state.outcomes.get()) {
        nlohmann::json entry = {{"segment", outcome.hypothesis.segment},
                                {"chain", outcome.chain.path},
                                {"chain_confidence", outcome.chain.confidence},
                                {"supervisor_conf", outcome.supervisor_conf},
                                {"accepted", outcome.accepted},
                                {"backend_calls", outcome.backend_calls}};
        if (include_trace) {
            entry["trace"] = trace_json(outcome.trace);
        }
        outcomes.push_back(std::move(entry));
    }
    nlohmann::json scored = nlohmann::json::array();
    for (const ScoredCandidate& candidate : state.scored.get()) {
        scored.push_back({{"segment", candidate.hypothesis.segment},
                          {"supervisor_conf", candidate.supervisor_conf},
                          {"observer_conf", candidate.observer_conf},
                          {"final_score", candidate.final_score},
                          {"accepted", candidate.accepted}});
    }
    return {{"bug_id", state.bug.id},
            {"restructured", state.restructured.get()},
            {"retrieved", candidate_set_json(state.retrieved.get())},
            {"filtered", candidate_set_json(state.filtered.get())},
            {"hypotheses", hypotheses},
            {"outcomes", outcomes},
            {"scored", scored},
            {"result", ranked_result_to_json(state.result.get())},
            {"call_counts", state.call_counter}};
}

}  // namespace detail

struct LocalizeReport {
    nlohmann::json results = nlohmann::json::array();
    nlohmann::json audits = nlohmann::json::array();
    std::size_t succeeded = 0;
    std::size_t failed = 0;
};

/// Runs the pipeline for every bug, up to `parallelism` bugs at a time.
/// Per-bug failures are recorded as error entries and do not stop the run.
/// Output order always follows input order.
inline LocalizeReport localize_bugs(const std::vector<BugReport>& bugs,
                                    const std::map<std::pair<std::string, std::string>,
                                                   const CodeGraph*>& graphs,
                                    AgentBackend& backend, const RunConfig& config) {
    struct Slot {
        nlohmann::json result;
        nlohmann::json audit;
        bool ok = false;
    };
    std::vector<Slot> slots(bugs.size());

    const auto process = [&](std::size_t index) {
        const BugReport& bug = bugs[index];
        Slot& slot = slots[index];
        try {
            const auto graph_it = graphs.find({bug.system, bug.version});
            if (graph_it == graphs.end()) {
                throw IoFailure("no index for " + bug.system + " " + bug.version);
            }
            PipelineState state = run_bug(bug, *graph_it->second, backend, config);
            slot.result = ranked_result_to_json(state.result.get());
            slot.audit = detail::audit_json(state, config.trace);
            slot.ok = true;
        } catch (const std::exception& error) {
            slot.result = {{"bug_id", bug.id}, {"error", error.what()}};
            slot.audit = slot.result;
            slot.ok = false;
        }
    };

    if (config.parallelism <= 1 || bugs.size() <= 1) {
        for (std::size_t i = 0; i < bugs.size(); ++i) {
            process(i);
        }
    } else {
        std::atomic<std::size_t> next{0};
        const std::size_t worker_count =
            std::min<std::size_t>(static_cast<std::size_t>(config.parallelism), bugs.size());
        std::vector<std::thread> workers;
        workers.reserve(worker_count);
        for (std::size_t w = 0; w < worker_count; ++w) {
            workers.emplace_back([&]() {
                for (std::size_t i = next.fetch_add(1); i < bugs.size(); i = next.fetch_add(1)) {
                    process(i);
                }
            });
        }
        for (std::thread& worker : workers) {
            worker.join();
        }
    }

    LocalizeReport report;
    for (const Slot& slot : slots) {
        report.results.push_back(slot.result);
        report.audits.push_back(slot.audit);
        slot.ok ? ++report.succeeded : ++report.failed;
    }
    return report;
}

}  // namespace cogniloc
