#pragma once

#include <array>
#include <atomic>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "cogniloc/errors.hpp"

namespace cogniloc {

/// The six pipeline roles. Supervisor and explorer are distinct callers but
/// share the exploration-verdict response shape.
enum class AgentRole { restructurer, filter, hypothesis, supervisor, explorer, observer };

inline constexpr std::array<AgentRole, 6> all_roles = {
    AgentRole::restructurer, AgentRole::filter,   AgentRole::hypothesis,
    AgentRole::supervisor,   AgentRole::explorer, AgentRole::observer,
};

inline const char* role_name(AgentRole role) {
    switch (role) {
        case AgentRole::restructurer: return "restructurer";
        case AgentRole::filter: return "filter";
        case AgentRole::hypothesis: return "hypothesis";
        case AgentRole::supervisor: return "supervisor";
        case AgentRole::explorer: return "explorer";
        case AgentRole::observer: return "observer";
    }
    return "unknown";
}

inline std::optional<AgentRole> role_from_name(const std::string& name) {
    for (AgentRole role : all_roles) {
        if (name == role_name(role)) {
            return role;
        }
    }
    return std::nullopt;
}

enum class ConfidenceCategory { high, medium, low };

inline const char* to_string(ConfidenceCategory category) {
    switch (category) {
        case ConfidenceCategory::high: return "high";
        case ConfidenceCategory::medium: return "medium";
        case ConfidenceCategory::low: return "low";
    }
    return "low";
}

inline std::optional<ConfidenceCategory> category_from_name(const std::string& name) {
    if (name == "high") return ConfidenceCategory::high;
    if (name == "medium") return ConfidenceCategory::medium;
    if (name == "low") return ConfidenceCategory::low;
    return std::nullopt;
}

struct AgentRequest {
    AgentRole role = AgentRole::restructurer;
    std::string bug_id;
    std::optional<std::string> focus_segment;
    nlohmann::json context;
    double temperature = 0.5;
};

// Role-specific response payloads.

struct RestructureResult {
    std::string text;
};

struct FilterResult {
    double relevance = 0.0;
};

struct HypothesisResult {
    std::string statement;
    ConfidenceCategory category = ConfidenceCategory::low;
    double score = 0.0;
};

/// What a reasoning agent says about one code segment: its confidence that
/// the segment (in its path context) explains the bug, plus which callees to
/// explore next, ordered most-suspicious first. `depth` is the supervisor's
/// optional proposal for the exploration depth budget.
struct ExplorationVerdict {
    double conf = 0.0;
    std::vector<std::string> calls_to_explore;
    std::string rationale;
    std::optional<int> depth;
};

struct ObserveResult {
    double score = 0.0;
};

struct AgentResponse {
    using Payload =
        std::variant<RestructureResult, FilterResult, HypothesisResult, ExplorationVerdict,
                     ObserveResult>;

    AgentRole role = AgentRole::restructurer;
    Payload payload;

    const RestructureResult& restructure() const { return std::get<RestructureResult>(payload); }
    const FilterResult& filter() const { return std::get<FilterResult>(payload); }
    const HypothesisResult& hypothesis() const { return std::get<HypothesisResult>(payload); }
    const ExplorationVerdict& verdict() const { return std::get<ExplorationVerdict>(payload); }
    const ObserveResult& observation() const { return std::get<ObserveResult>(payload); }
};

/// Returns true when the payload alternative matches the role's contract.
inline bool payload_matches_role(AgentRole role, const AgentResponse::Payload& payload) {
    switch (role) {
        case AgentRole::restructurer:
            return std::holds_alternative<RestructureResult>(payload);
        case AgentRole::filter:
            return std::holds_alternative<FilterResult>(payload);
        case AgentRole::hypothesis:
            return std::holds_alternative<HypothesisResult>(payload);
        case AgentRole::supervisor:
        case AgentRole::explorer:
            return std::holds_alternative<ExplorationVerdict>(payload);
        case AgentRole::observer:
            return std::holds_alternative<ObserveResult>(payload);
    }
    return false;
}

/// Abstraction through which every agent obtains completions. Implementations
/// must accept concurrent complete() calls.
class AgentBackend {
  public:
    virtual ~AgentBackend() = default;
    virtual AgentResponse complete(const AgentRequest& request) = 0;
    virtual const char* name() const = 0;
};

/// Decorator counting calls per role; shared by the pipeline state audit.
class CountingBackend : public AgentBackend {
  public:
    explicit CountingBackend(AgentBackend& inner): inner_(inner) {
        for (auto& counter : counts_) {
            counter.store(0);
        }
    }

    AgentResponse complete(const AgentRequest& request) override {
        counts_[static_cast<std::size_t>(request.role)].fetch_add(1);
        return inner_.complete(request);
    }

    const char* name() const override { return inner_.name(); }

    int count(AgentRole role) const {
        return counts_[static_cast<std::size_t>(role)].load();
    }

    int total() const {
        int sum = 0;
        for (const auto& counter : counts_) {
            sum += counter.load();
        }
        return sum;
    }

    std::map<std::string, int> snapshot() const {
        std::map<std::string, int> result;
        for (AgentRole role : all_roles) {
            result[role_name(role)] = count(role);
        }
        return result;
    }

  private:
    AgentBackend& inner_;
    std::array<std::atomic<int>, 6> counts_;
};

}  // namespace cogniloc
