#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cogniloc/agent.hpp"
#include "cogniloc/errors.hpp"
#include "cogniloc/graph_io.hpp"

namespace cogniloc {

/// Canned responses for the deterministic test backend. Each bug maps one
/// section per role family; supervisor and explorer requests both resolve
/// through the `explore` section (keyed by the focus segment), observer
/// requests through `observe` (keyed by the investigated candidate). Lookups
/// that miss fall back to the per-role default; without a default the call
/// fails with MissingScriptEntry.
struct ScriptedScript {
    struct BugScript {
        std::optional<std::string> restructure;
        std::map<std::string, double> filter;
        std::map<std::string, HypothesisResult> hypothesis;
        std::map<std::string, ExplorationVerdict> explore;
        std::map<std::string, double> observe;
    };

    std::map<std::string, BugScript> bugs;
    std::map<AgentRole, AgentResponse::Payload> defaults;
};

namespace detail {

inline double script_score(const nlohmann::json& value, const std::string& where) {
    if (!value.is_number()) {
        throw MalformedScript("expected a numeric score at " + where);
    }
    const double score = value.get<double>();
    if (score < 0.0 || score > 1.0) {
        throw ScoreOutOfRange(where + " = " + std::to_string(score));
    }
    return score;
}

inline HypothesisResult parse_script_hypothesis(const nlohmann::json& value,
                                                const std::string& where) {
    if (!value.is_object() || !value.contains("statement") || !value.contains("category") ||
        !value.contains("score")) {
        throw MalformedScript("hypothesis entry needs statement/category/score at " + where);
    }
    HypothesisResult result;
    result.statement = value["statement"].get<std::string>();
    const auto category = category_from_name(value["category"].get<std::string>());
    if (!category) {
        throw MalformedScript("unknown category at " + where);
    }
    result.category = *category;
    result.score = script_score(value["score"], where + ".score");
    return result;
}

inline ExplorationVerdict parse_script_verdict(const nlohmann::json& value,
                                               const std::string& where) {
    if (!value.is_object() || !value.contains("conf") || !value.contains("calls_to_explore") ||
        !value["calls_to_explore"].is_array()) {
        throw MalformedScript("explore entry needs conf and calls_to_explore at " + where);
    }
    ExplorationVerdict verdict;
    verdict.conf = script_score(value["conf"], where + ".conf");
    for (const auto& call : value["calls_to_explore"]) {
        if (!call.is_string()) {
            throw MalformedScript("calls_to_explore must hold segment ids at " + where);
        }
        verdict.calls_to_explore.push_back(call.get<std::string>());
    }
    if (value.contains("rationale")) {
        verdict.rationale = value["rationale"].get<std::string>();
    }
    if (value.contains("depth")) {
        if (!value["depth"].is_number_integer()) {
            throw MalformedScript("depth must be an integer at " + where);
        }
        verdict.depth = value["depth"].get<int>();
    }
    return verdict;
}

inline AgentResponse::Payload parse_default_payload(AgentRole role, const nlohmann::json& value,
                                                    const std::string& where) {
    switch (role) {
        case AgentRole::restructurer:
            if (!value.is_string()) {
                throw MalformedScript("restructurer default must be a string at " + where);
            }
            return RestructureResult{value.get<std::string>()};
        case AgentRole::filter:
            return FilterResult{script_score(value, where)};
        case AgentRole::hypothesis:
            return parse_script_hypothesis(value, where);
        case AgentRole::supervisor:
        case AgentRole::explorer:
            return parse_script_verdict(value, where);
        case AgentRole::observer:
            return ObserveResult{script_score(value, where)};
    }
    throw MalformedScript("unknown role at " + where);
}

}  // namespace detail

inline ScriptedScript parse_script(const nlohmann::json& doc) {
    if (!doc.is_object()) {
        throw MalformedScript("top level must be an object");
    }
    ScriptedScript script;
    for (const auto& [key, value] : doc.items()) {
        if (key == "defaults") {
            if (!value.is_object()) {
                throw MalformedScript("defaults must be an object");
            }
            for (const auto& [role_key, payload] : value.items()) {
                const auto role = role_from_name(role_key);
                if (!role) {
                    throw MalformedScript("unknown role in defaults: " + role_key);
                }
                script.defaults[*role] =
                    detail::parse_default_payload(*role, payload, "defaults." + role_key);
            }
            continue;
        }
        if (!value.is_object()) {
            throw MalformedScript("bug entry must be an object: " + key);
        }
        ScriptedScript::BugScript bug;
        for (const auto& [section, body] : value.items()) {
            const std::string where = key + "." + section;
            if (section == "restructure") {
                if (!body.is_string()) {
                    throw MalformedScript("restructure must be a string at " + where);
                }
                bug.restructure = body.get<std::string>();
            } else if (section == "filter") {
                for (const auto& [segment, score] : body.items()) {
                    bug.filter[segment] = detail::script_score(score, where + "." + segment);
                }
            } else if (section == "hypothesis") {
                for (const auto& [segment, entry] : body.items()) {
                    bug.hypothesis[segment] =
                        detail::parse_script_hypothesis(entry, where + "." + segment);
                }
            } else if (section == "explore") {
                for (const auto& [segment, entry] : body.items()) {
                    bug.explore[segment] =
                        detail::parse_script_verdict(entry, where + "." + segment);
                }
            } else if (section == "observe") {
                for (const auto& [candidate, score] : body.items()) {
                    bug.observe[candidate] = detail::script_score(score, where + "." + candidate);
                }
            } else {
                throw MalformedScript("unknown section '" + section + "' in bug " + key);
            }
        }
        script.bugs[key] = std::move(bug);
    }
    return script;
}

inline ScriptedScript load_script(const std::string& path) {
    const std::string text = detail::read_file(path);
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded()) {
        throw MalformedScript(path + " is not valid JSON");
    }
    return parse_script(doc);
}

/// Pure, read-only backend driven by a ScriptedScript; identical requests
/// always yield identical responses, and concurrent calls are safe.
class ScriptedBackend : public AgentBackend {
  public:
    explicit ScriptedBackend(ScriptedScript script): script_(std::move(script)) {}

    AgentResponse complete(const AgentRequest& request) override {
        const ScriptedScript::BugScript* bug = find_bug(request.bug_id);
        switch (request.role) {
            case AgentRole::restructurer:
                if (bug && bug->restructure) {
                    return {request.role, RestructureResult{*bug->restructure}};
                }
                break;
            case AgentRole::filter:
                if (bug && request.focus_segment) {
                    const auto it = bug->filter.find(*request.focus_segment);
                    if (it != bug->filter.end()) {
                        return {request.role, FilterResult{it->second}};
                    }
                }
                break;
            case AgentRole::hypothesis:
                if (bug && request.focus_segment) {
                    const auto it = bug->hypothesis.find(*request.focus_segment);
                    if (it != bug->hypothesis.end()) {
                        return {request.role, it->second};
                    }
                }
                break;
            case AgentRole::supervisor:
            case AgentRole::explorer:
                if (bug && request.focus_segment) {
                    const auto it = bug->explore.find(*request.focus_segment);
                    if (it != bug->explore.end()) {
                        return {request.role, it->second};
                    }
                }
                break;
            case AgentRole::observer:
                if (bug && request.focus_segment) {
                    const auto it = bug->observe.find(*request.focus_segment);
                    if (it != bug->observe.end()) {
                        return {request.role, ObserveResult{it->second}};
                    }
                }
                break;
        }
        const auto fallback = script_.defaults.find(request.role);
        if (fallback == script_.defaults.end()) {
            throw MissingScriptEntry(std::string(role_name(request.role)) + " for bug " +
                                     request.bug_id +
                                     (request.focus_segment ? " segment " + *request.focus_segment
                                                            : std::string(" (whole report)")));
        }
        return {request.role, fallback->second};
    }

    const char* name() const override { return "scripted"; }

    const ScriptedScript& script() const { return script_; }

  private:
    const ScriptedScript::BugScript* find_bug(const std::string& bug_id) const {
        const auto it = script_.bugs.find(bug_id);
        return it == script_.bugs.end() ? nullptr : &it->second;
    }

    ScriptedScript script_;
};

}  // namespace cogniloc
