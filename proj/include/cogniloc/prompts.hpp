#pragma once

#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "cogniloc/agent.hpp"
#include "cogniloc/errors.hpp"

namespace cogniloc {

/// Prompt template set version; bump when any template text changes.
inline constexpr std::string_view prompt_set_version = "1";

namespace prompts {

inline constexpr std::string_view restructurer = R"(You are a bug-report editor for a fault-localization system.
Rewrite the bug report below as a concise search query: keep every technical
detail (component names, operations, observed vs expected behavior), drop
greetings, emotions, markup and other noise. Answer with a fenced json block.

Example input:
  Help!!! :( saving a user profile crashes the app every time, so annoying.
Example output:
```json
{"text": "saving user profile crashes application"}
```

Bug report:
{{report}}

Output format:
```json
{"text": "<cleaned query>"}
```)";

inline constexpr std::string_view filter = R"(You judge whether a code segment could be connected to a reported bug.
Think about the symptoms in the report and what the code actually does, then
answer with a single relevance score between 0 and 1.

Example: report about a cache never expiring; segment is a logging helper.
```json
{"score": 0.05}
```

Bug report:
{{report}}

Candidate segment {{segment_id}}:
{{segment_body}}

Output format:
```json
{"score": <0..1>}
```)";

inline constexpr std::string_view hypothesis = R"(You are debugging the bug below. For the given code segment, state one
hypothesis about how this segment could be the root cause, with a confidence
category (high, medium, low) and a confidence score between 0 and 1 expressing
its likelihood relative to the other candidate segments.

Example: report about stale search results; segment rebuilds an index but
skips deleted entries.
```json
{"statement": "index rebuild skips tombstoned entries so deleted documents keep matching", "category": "high", "score": 0.8}
```

Bug report:
{{report}}

All candidate segments: {{candidates}}

Segment under analysis {{segment_id}}:
{{segment_body}}

Output format:
```json
{"statement": "<root-cause conjecture>", "category": "high|medium|low", "score": <0..1>}
```)";

inline constexpr std::string_view supervisor = R"(You supervise the investigation of one root-cause hypothesis. Review the
evidence, then either conclude or delegate deeper exploration. Follow the loop:
think about the symptoms, act by picking calls to inspect, observe the result.
If the current evidence already settles the hypothesis, return an empty
calls_to_explore list and your confidence that this segment is the root cause.
Otherwise list the callees to explore, most suspicious first, and optionally
propose a maximum exploration depth.

Example: hypothesis says a retry loop swallows an exception; the segment
delegates all work to submitJob.
```json
{"conf": 0.4, "calls_to_explore": ["scheduler.submitJob"], "rationale": "retry handling lives in submitJob", "depth": 2}
```

Bug report:
{{report}}

Hypothesis:
{{hypothesis}}

Segment {{segment_id}}:
{{segment_body}}

Callees: {{callees}}
{{chain_section}}
Output format:
```json
{"conf": <0..1>, "calls_to_explore": ["<segment id>", ...], "rationale": "<why>", "depth": <optional int>}
```)";

inline constexpr std::string_view explorer = R"(You explore a call chain to test a bug hypothesis. You inspect one segment at
a time in the context of the path taken so far. Score how confident you are
that the path up to and including this segment explains the reported bug, and
pick which of its callees to follow next, most suspicious first. If your
confidence reaches {{tau}} or more the exploration stops and the current path
is reported as the cause.

Example: path [job.run -> worker.flush]; flush ignores the error code of
write; report says data loss on shutdown.
```json
{"conf": 0.95, "calls_to_explore": [], "rationale": "flush drops write failures silently"}
```

Bug report:
{{report}}

Path so far: {{path}}

Current segment {{segment_id}}:
{{segment_body}}

Callees: {{callees}}

Output format:
```json
{"conf": <0..1>, "calls_to_explore": ["<segment id>", ...], "rationale": "<why>"}
```)";

inline constexpr std::string_view observer = R"(You are an independent reviewer. Given a hypothesis, the investigated call
chain and the investigator's reasoning, score how well the evidence actually
supports the hypothesis, from 0 (contradicted or unsupported) to 1 (fully
supported).

Example: hypothesis blames a parser, but the chain never reaches parsing code.
```json
{"score": 0.1}
```

Bug report:
{{report}}

Hypothesis:
{{hypothesis}}

Investigated chain: {{chain}}

Reasoning trace:
{{rationale}}

Output format:
```json
{"score": <0..1>}
```)";

}  // namespace prompts

namespace detail {

/// Formats a context value for interpolation. Numbers are rendered with %g so
/// 0.9 stays "0.9"; string arrays join with ", ".
inline std::string context_value_to_text(const nlohmann::json& value) {
    if (value.is_string()) {
        return value.get<std::string>();
    }
    if (value.is_number()) {
        char buffer[64];
        std::snprintf(buffer, sizeof(buffer), "%g", value.get<double>());
        return buffer;
    }
    if (value.is_array()) {
        std::string joined;
        for (const auto& element : value) {
            if (!joined.empty()) {
                joined += ", ";
            }
            joined += context_value_to_text(element);
        }
        return joined;
    }
    return value.dump();
}

inline std::string substitute(std::string_view tmpl, const nlohmann::json& context) {
    std::string result;
    result.reserve(tmpl.size());
    std::size_t pos = 0;
    while (pos < tmpl.size()) {
        const std::size_t open = tmpl.find("{{", pos);
        if (open == std::string_view::npos) {
            result.append(tmpl.substr(pos));
            break;
        }
        result.append(tmpl.substr(pos, open - pos));
        const std::size_t close = tmpl.find("}}", open);
        const std::string name(tmpl.substr(open + 2, close - open - 2));
        if (!context.contains(name)) {
            throw MissingContextField(name);
        }
        result.append(context_value_to_text(context[name]));
        pos = close + 2;
    }
    return result;
}

}  // namespace detail

/// Renders the static template for `role`. Deterministic: the same context
/// yields byte-identical text. Throws MissingContextField when a required
/// placeholder is absent from the context.
inline std::string render_prompt(AgentRole role, const nlohmann::json& context) {
    nlohmann::json enriched = context.is_object() ? context : nlohmann::json::object();
    switch (role) {
        case AgentRole::restructurer:
            return detail::substitute(prompts::restructurer, enriched);
        case AgentRole::filter:
            return detail::substitute(prompts::filter, enriched);
        case AgentRole::hypothesis:
            return detail::substitute(prompts::hypothesis, enriched);
        case AgentRole::supervisor: {
            // The chain section appears only in the assessment phase.
            if (enriched.contains("chain")) {
                enriched["chain_section"] =
                    "\nReturned chain: " + detail::context_value_to_text(enriched["chain"]) + "\n";
            } else {
                enriched["chain_section"] = "";
            }
            return detail::substitute(prompts::supervisor, enriched);
        }
        case AgentRole::explorer:
            return detail::substitute(prompts::explorer, enriched);
        case AgentRole::observer:
            return detail::substitute(prompts::observer, enriched);
    }
    throw MissingContextField("role");
}

}  // namespace cogniloc
