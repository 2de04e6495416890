#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cogniloc/errors.hpp"
#include "cogniloc/graph_io.hpp"

namespace cogniloc {

struct GroundTruth {
    std::set<std::string> methods;
    std::set<std::string> documents;
};

struct BugReport {
    std::string id;
    std::string title;
    std::string description;
    std::string system;
    std::string version;
    std::optional<GroundTruth> ground_truth;
};

inline BugReport parse_bug_report(const nlohmann::json& entry) {
    if (!entry.is_object()) {
        throw MalformedFixture("bug report entry must be an object");
    }
    BugReport report;
    report.id = detail::require_string(entry, "id", "bug report");
    report.title = entry.value("title", std::string());
    report.description = entry.value("description", std::string());
    report.system = detail::require_string(entry, "system", "bug report " + report.id);
    report.version = detail::require_string(entry, "version", "bug report " + report.id);
    if (entry.contains("ground_truth") && !entry["ground_truth"].is_null()) {
        const auto& truth = entry["ground_truth"];
        GroundTruth parsed;
        if (truth.contains("methods")) {
            for (const auto& method : truth["methods"]) {
                parsed.methods.insert(method.get<std::string>());
            }
        }
        if (truth.contains("documents")) {
            for (const auto& path : truth["documents"]) {
                parsed.documents.insert(path.get<std::string>());
            }
        }
        report.ground_truth = std::move(parsed);
    }
    return report;
}

/// Bug-reports file: a JSON array of BugReport records.
inline std::vector<BugReport> parse_bug_reports(const std::string& text) {
    nlohmann::json doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) {
        throw MalformedFixture("bug-reports file must be a JSON array");
    }
    std::vector<BugReport> reports;
    for (const auto& entry : doc) {
        reports.push_back(parse_bug_report(entry));
    }
    return reports;
}

inline std::vector<BugReport> load_bug_reports(const std::string& path) {
    return parse_bug_reports(detail::read_file(path));
}

/// Title and description joined; the raw query used when restructuring is
/// disabled or fails.
inline std::string report_text(const BugReport& report) {
    if (report.title.empty()) {
        return report.description;
    }
    if (report.description.empty()) {
        return report.title;
    }
    return report.title + "\n" + report.description;
}

}  // namespace cogniloc
