#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "cogniloc/agent.hpp"
#include "cogniloc/errors.hpp"
#include "cogniloc/log.hpp"
#include "cogniloc/prompts.hpp"

namespace cogniloc {

struct RemoteConfig {
    std::string endpoint;                       // e.g. http://host:port/v1/chat/completions
    std::map<AgentRole, std::string> models;    // role -> model name
    double temperature = 0.5;
    int timeout_seconds = 60;
};

struct HttpReply {
    int status = 0;
    std::string body;
};

/// POST transport hook: (url, json body, timeout) -> reply. Throwing or a
/// non-2xx status surfaces as BackendUnavailable. The socket-backed transport
/// lives in http_transport.hpp; tests may inject stubs.
using HttpTransport =
    std::function<HttpReply(const std::string&, const std::string&, int)>;

namespace detail {

inline double clamp_score(double value, const char* what) {
    if (value < 0.0 || value > 1.0) {
        Log::warn(std::string(what) + " score " + std::to_string(value) + " clamped to [0,1]");
        return std::clamp(value, 0.0, 1.0);
    }
    return value;
}

/// Pulls the first fenced block out of a completion. Accepts ```json and
/// plain ``` fences.
inline std::optional<std::string> extract_fenced_block(const std::string& content) {
    const std::size_t open = content.find("```");
    if (open == std::string::npos) {
        return std::nullopt;
    }
    std::size_t body_start = content.find('\n', open);
    if (body_start == std::string::npos) {
        return std::nullopt;
    }
    ++body_start;
    const std::size_t close = content.find("```", body_start);
    if (close == std::string::npos) {
        return std::nullopt;
    }
    return content.substr(body_start, close - body_start);
}

inline AgentResponse::Payload payload_from_model_json(AgentRole role, const nlohmann::json& doc) {
    switch (role) {
        case AgentRole::restructurer: {
            if (!doc.contains("text") || !doc["text"].is_string()) {
                throw SchemaViolation("restructurer output lacks text");
            }
            return RestructureResult{doc["text"].get<std::string>()};
        }
        case AgentRole::filter: {
            if (!doc.contains("score") || !doc["score"].is_number()) {
                throw SchemaViolation("filter output lacks numeric score");
            }
            return FilterResult{clamp_score(doc["score"].get<double>(), "filter")};
        }
        case AgentRole::hypothesis: {
            if (!doc.contains("statement") || !doc.contains("category") || !doc.contains("score") ||
                !doc["score"].is_number()) {
                throw SchemaViolation("hypothesis output incomplete");
            }
            HypothesisResult result;
            result.statement = doc["statement"].get<std::string>();
            const auto category = category_from_name(doc["category"].get<std::string>());
            if (!category) {
                throw SchemaViolation("hypothesis category invalid");
            }
            result.category = *category;
            result.score = clamp_score(doc["score"].get<double>(), "hypothesis");
            return result;
        }
        case AgentRole::supervisor:
        case AgentRole::explorer: {
            if (!doc.contains("conf") || !doc["conf"].is_number()) {
                throw SchemaViolation("exploration output lacks conf");
            }
            ExplorationVerdict verdict;
            verdict.conf = clamp_score(doc["conf"].get<double>(), role_name(role));
            if (doc.contains("calls_to_explore")) {
                if (!doc["calls_to_explore"].is_array()) {
                    throw SchemaViolation("calls_to_explore must be an array");
                }
                for (const auto& call : doc["calls_to_explore"]) {
                    if (!call.is_string()) {
                        throw SchemaViolation("calls_to_explore entries must be strings");
                    }
                    verdict.calls_to_explore.push_back(call.get<std::string>());
                }
            }
            if (doc.contains("rationale") && doc["rationale"].is_string()) {
                verdict.rationale = doc["rationale"].get<std::string>();
            }
            if (doc.contains("depth") && doc["depth"].is_number_integer()) {
                verdict.depth = doc["depth"].get<int>();
            }
            return verdict;
        }
        case AgentRole::observer: {
            if (!doc.contains("score") || !doc["score"].is_number()) {
                throw SchemaViolation("observer output lacks numeric score");
            }
            return ObserveResult{clamp_score(doc["score"].get<double>(), "observer")};
        }
    }
    throw SchemaViolation("unknown role");
}

}  // namespace detail

/// Chat-completions-style HTTP backend. Prompts are rendered from the static
/// template set, the model is selected per role, and the reply must carry a
/// fenced structured block. A parse failure earns exactly one repair retry;
/// the second failure raises SchemaViolation.
class RemoteBackend : public AgentBackend {
  public:
    RemoteBackend(RemoteConfig config, HttpTransport transport)
        : config_(std::move(config)), transport_(std::move(transport)) {}

    AgentResponse complete(const AgentRequest& request) override {
        const std::string prompt = render_prompt(request.role, request.context);
        std::string last_error;
        for (int attempt = 0; attempt < 2; ++attempt) {
            std::string content = post_chat(request, prompt, attempt == 1 ? &last_error : nullptr);
            const auto block = detail::extract_fenced_block(content);
            if (!block) {
                last_error = "reply has no fenced block";
                continue;
            }
            nlohmann::json doc = nlohmann::json::parse(*block, nullptr, false);
            if (doc.is_discarded() || !doc.is_object()) {
                last_error = "fenced block is not a JSON object";
                continue;
            }
            try {
                return {request.role, detail::payload_from_model_json(request.role, doc)};
            } catch (const SchemaViolation& violation) {
                last_error = violation.what();
            }
        }
        throw SchemaViolation(std::string(role_name(request.role)) + ": " + last_error);
    }

    const char* name() const override { return "remote"; }

  private:
    std::string model_for(AgentRole role) const {
        const auto it = config_.models.find(role);
        return it == config_.models.end() ? "default" : it->second;
    }

    std::string post_chat(const AgentRequest& request, const std::string& prompt,
                          const std::string* repair_hint) {
        nlohmann::json messages = nlohmann::json::array();
        messages.push_back({{"role", "user"}, {"content", prompt}});
        if (repair_hint) {
            messages.push_back(
                {{"role", "user"},
                 {"content", "Your previous reply could not be parsed (" + *repair_hint +
                                 "). Reply again with ONLY the fenced json block in the required "
                                 "format."}});
        }
        const nlohmann::json body = {{"model", model_for(request.role)},
                                     {"temperature", config_.temperature},
                                     {"messages", messages}};
        HttpReply reply;
        try {
            reply = transport_(config_.endpoint, body.dump(), config_.timeout_seconds);
        } catch (const std::exception& error) {
            throw BackendUnavailable(error.what());
        }
        if (reply.status < 200 || reply.status >= 300) {
            throw BackendUnavailable("http status " + std::to_string(reply.status));
        }
        nlohmann::json doc = nlohmann::json::parse(reply.body, nullptr, false);
        if (doc.is_discarded() || !doc.contains("choices") || doc["choices"].empty() ||
            !doc["choices"][0].contains("message")) {
            throw BackendUnavailable("reply is not a chat completion");
        }
        return doc["choices"][0]["message"].value("content", std::string());
    }

    RemoteConfig config_;
    HttpTransport transport_;
};

}  // namespace cogniloc
