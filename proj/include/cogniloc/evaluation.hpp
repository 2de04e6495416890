#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "cogniloc/bug_report.hpp"
#include "cogniloc/errors.hpp"

namespace cogniloc {

/// One evaluation unit: a ranked list (methods or documents) against the
/// non-empty ground-truth set D, capped at k.
struct EvalQuery {
    std::string bug_id;
    std::vector<std::string> ranked;
    std::set<std::string> ground_truth;
    std::size_t k = 10;
};

/// AP@K = (1/|D|) * sum_{k=1..K} P_k * B_k, with the full ground-truth size
/// as denominator even when |D| > K.
inline double average_precision_at_k(const EvalQuery& query) {
    if (query.ground_truth.empty()) {
        throw EmptyGroundTruth();
    }
    const std::size_t limit = std::min(query.k, query.ranked.size());
    double sum = 0.0;
    std::size_t relevant_so_far = 0;
    for (std::size_t i = 0; i < limit; ++i) {
        if (query.ground_truth.count(query.ranked[i])) {
            ++relevant_so_far;
            sum += static_cast<double>(relevant_so_far) / static_cast<double>(i + 1);
        }
    }
    return sum / static_cast<double>(query.ground_truth.size());
}

inline double mean_average_precision(const std::vector<EvalQuery>& queries) {
    if (queries.empty()) {
        throw NoQueries();
    }
    double sum = 0.0;
    for (const EvalQuery& query : queries) {
        sum += average_precision_at_k(query);
    }
    return sum / static_cast<double>(queries.size());
}

/// RR = 1 / rank of the first relevant item; 0 when no relevant item appears
/// within the capped list.
inline double reciprocal_rank(const EvalQuery& query) {
    if (query.ground_truth.empty()) {
        throw EmptyGroundTruth();
    }
    const std::size_t limit = std::min(query.k, query.ranked.size());
    for (std::size_t i = 0; i < limit; ++i) {
        if (query.ground_truth.count(query.ranked[i])) {
            return 1.0 / static_cast<double>(i + 1);
        }
    }
    return 0.0;
}

inline double mean_reciprocal_rank(const std::vector<EvalQuery>& queries) {
    if (queries.empty()) {
        throw NoQueries();
    }
    double sum = 0.0;
    for (const EvalQuery& query : queries) {
        sum += reciprocal_rank(query);
    }
    return sum / static_cast<double>(queries.size());
}

/// Fraction of queries with at least one ground-truth item in the top K.
inline double hit_at_k(const std::vector<EvalQuery>& queries, std::size_t K) {
    if (queries.empty()) {
        throw NoQueries();
    }
    std::size_t hits = 0;
    for (const EvalQuery& query : queries) {
        const std::size_t limit = std::min({K, query.k, query.ranked.size()});
        for (std::size_t i = 0; i < limit; ++i) {
            if (query.ground_truth.count(query.ranked[i])) {
                ++hits;
                break;
            }
        }
    }
    return static_cast<double>(hits) / static_cast<double>(queries.size());
}

// -- report classification --------------------------------------------------------

enum class ReportType { ST, PE, NL };

inline const char* to_string(ReportType type) {
    switch (type) {
        case ReportType::ST: return "ST";
        case ReportType::PE: return "PE";
        case ReportType::NL: return "NL";
    }
    return "NL";
}

/// The regex set used to classify reports; kept in one place so alternative
/// pattern files can replace it.
struct ClassifierPatterns {
    std::string stack_frame = R"(at\s+[\w$.]+\([\w$]+\.\w+:\d+\))";
    std::string invocation = R"(\w+\s*\()";
    std::string dotted_name = R"([A-Za-z_]\w*(\.[A-Za-z_]\w*){2,})";
    std::string camel_case = R"([a-z]+[A-Z]\w*)";
};

inline const ClassifierPatterns& default_classifier_patterns() {
    static const ClassifierPatterns patterns;
    return patterns;
}

namespace detail {

inline bool has_consecutive_at_lines(const std::string& text) {
    int consecutive = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) {
            end = text.size();
        }
        std::string_view line(text.data() + start, end - start);
        while (!line.empty() && (line.front() == ' ' || line.front() == '\t')) {
            line.remove_prefix(1);
        }
        if (line.substr(0, 3) == "at ") {
            if (++consecutive >= 2) {
                return true;
            }
        } else {
            consecutive = 0;
        }
        if (end == text.size()) {
            break;
        }
        start = end + 1;
    }
    return false;
}

}  // namespace detail

/// ST if a stack-frame pattern matches, else PE if a program-element pattern
/// matches, else NL. Total and deterministic.
inline ReportType classify_report(const BugReport& report,
                                  const ClassifierPatterns& patterns =
                                      default_classifier_patterns()) {
    const std::string text = report_text(report);
    const std::regex stack_frame(patterns.stack_frame);
    if (std::regex_search(text, stack_frame) || detail::has_consecutive_at_lines(text)) {
        return ReportType::ST;
    }
    const std::regex invocation(patterns.invocation);
    const std::regex dotted(patterns.dotted_name);
    const std::regex camel(patterns.camel_case);
    if (std::regex_search(text, invocation) || std::regex_search(text, dotted) ||
        std::regex_search(text, camel)) {
        return ReportType::PE;
    }
    return ReportType::NL;
}

// -- paired statistics --------------------------------------------------------------

struct WilcoxonResult {
    double statistic = 0.0;
    double p_value = 1.0;
};

namespace detail {

inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

/// Mid-ranks of absolute differences (ties share the average rank).
inline std::vector<double> mid_ranks(const std::vector<double>& values) {
    std::vector<std::size_t> order(values.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::sort(order.begin(), order.end(),
              [&values](std::size_t lhs, std::size_t rhs) { return values[lhs] < values[rhs]; });
    std::vector<double> ranks(values.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) {
            ++j;
        }
        const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t t = i; t <= j; ++t) {
            ranks[order[t]] = shared;
        }
        i = j + 1;
    }
    return ranks;
}

/// Exact two-sided p-value for the signed-rank statistic by enumerating the
/// sign-assignment distribution over the (doubled, hence integral) ranks.
inline double wilcoxon_exact_p(const std::vector<double>& ranks, double w_min) {
    std::vector<long> doubled;
    long total = 0;
    for (const double rank : ranks) {
        const long scaled = std::lround(rank * 2.0);
        doubled.push_back(scaled);
        total += scaled;
    }
    std::vector<double> counts(static_cast<std::size_t>(total) + 1, 0.0);
    counts[0] = 1.0;
    for (const long rank : doubled) {
        for (long sum = total; sum >= rank; --sum) {
            counts[sum] += counts[sum - rank];
        }
    }
    const long threshold = std::lround(w_min * 2.0);
    double below = 0.0;
    double all = 0.0;
    for (long sum = 0; sum <= total; ++sum) {
        all += counts[sum];
        if (sum <= threshold) {
            below += counts[sum];
        }
    }
    return std::min(1.0, 2.0 * below / all);
}

}  // namespace detail

/// Two-sided Wilcoxon signed-rank test on paired samples. Zero differences
/// are dropped, tied absolute differences get mid-ranks, and the statistic is
/// the smaller signed-rank sum. Exact distribution for n <= 25, normal
/// approximation with continuity correction above.
inline WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                           const std::vector<double>& b) {
    if (a.size() != b.size()) {
        throw TooFewPairs(std::min(a.size(), b.size()));
    }
    std::vector<double> differences;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double diff = a[i] - b[i];
        if (diff != 0.0) {
            differences.push_back(diff);
        }
    }
    if (differences.empty()) {
        throw AllDifferencesZero();
    }
    if (differences.size() < 5) {
        throw TooFewPairs(differences.size());
    }

    std::vector<double> magnitudes;
    magnitudes.reserve(differences.size());
    for (const double diff : differences) {
        magnitudes.push_back(std::abs(diff));
    }
    const std::vector<double> ranks = detail::mid_ranks(magnitudes);

    double w_plus = 0.0;
    double w_minus = 0.0;
    for (std::size_t i = 0; i < differences.size(); ++i) {
        (differences[i] > 0.0 ? w_plus : w_minus) += ranks[i];
    }
    const double n = static_cast<double>(differences.size());
    const double statistic = std::min(w_plus, w_minus);

    WilcoxonResult result;
    result.statistic = statistic;
    if (differences.size() <= 25) {
        result.p_value = detail::wilcoxon_exact_p(ranks, statistic);
        return result;
    }

    const double mean = n * (n + 1.0) / 4.0;
    double variance = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0;
    // Tie correction: subtract sum(t^3 - t)/48 over tie groups.
    std::map<double, int> tie_groups;
    for (const double magnitude : magnitudes) {
        ++tie_groups[magnitude];
    }
    for (const auto& [magnitude, count] : tie_groups) {
        (void)magnitude;
        if (count > 1) {
            const double t = static_cast<double>(count);
            variance -= (t * t * t - t) / 48.0;
        }
    }
    const double spread = std::sqrt(variance);
    double z = statistic - mean;
    // Continuity correction toward the mean.
    if (z > 0.0) {
        z -= 0.5;
    } else if (z < 0.0) {
        z += 0.5;
    }
    z /= spread;
    result.p_value = std::min(1.0, 2.0 * (1.0 - detail::normal_cdf(std::abs(z))));
    return result;
}

/// Cliff's delta: (#{a_i > b_j} - #{a_i < b_j}) / (|a| * |b|).
inline double cliffs_delta(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.empty() || b.empty()) {
        throw EmptySample();
    }
    long greater = 0;
    long less = 0;
    for (const double x : a) {
        for (const double y : b) {
            if (x > y) {
                ++greater;
            } else if (x < y) {
                ++less;
            }
        }
    }
    return static_cast<double>(greater - less) / (static_cast<double>(a.size()) *
                                                  static_cast<double>(b.size()));
}

/// Magnitude bands: negligible < 0.147 <= small < 0.33 <= medium < 0.474 <= large.
inline const char* cliffs_magnitude(double delta) {
    const double magnitude = std::abs(delta);
    if (magnitude < 0.147) {
        return "negligible";
    }
    if (magnitude < 0.33) {
        return "small";
    }
    if (magnitude < 0.474) {
        return "medium";
    }
    return "large";
}

// -- run evaluation ---------------------------------------------------------------

enum class Granularity { method, document };

struct MetricBundle {
    double map = 0.0;
    double mrr = 0.0;
    std::map<int, double> hit;  // K in {1, 5, 10}
    std::size_t queries = 0;
};

struct EvalReport {
    MetricBundle overall;
    std::map<std::string, MetricBundle> per_type;    // ST / PE / NL
    std::map<std::string, MetricBundle> per_spread;  // "1".."4", "5+"
};

namespace detail {

inline MetricBundle bundle_for(const std::vector<EvalQuery>& queries) {
    MetricBundle bundle;
    bundle.queries = queries.size();
    if (queries.empty()) {
        return bundle;
    }
    bundle.map = mean_average_precision(queries);
    bundle.mrr = mean_reciprocal_rank(queries);
    for (const int K : {1, 5, 10}) {
        bundle.hit[K] = hit_at_k(queries, static_cast<std::size_t>(K));
    }
    return bundle;
}

inline std::string spread_bucket(std::size_t ground_truth_size) {
    if (ground_truth_size >= 5) {
        return "5+";
    }
    return std::to_string(ground_truth_size);
}

/// Pulls the ranked item list for one granularity out of a results-file
/// entry. Entries recording a per-bug failure have no lists and evaluate as
/// empty rankings.
inline std::vector<std::string> ranked_items(const nlohmann::json& entry,
                                             Granularity granularity) {
    std::vector<std::string> items;
    if (entry.contains("error")) {
        return items;
    }
    if (granularity == Granularity::method) {
        for (const auto& method : entry.value("methods", nlohmann::json::array())) {
            items.push_back(method["segment_id"].get<std::string>());
        }
    } else {
        for (const auto& path : entry.value("documents", nlohmann::json::array())) {
            items.push_back(path.get<std::string>());
        }
    }
    return items;
}

}  // namespace detail

/// Builds EvalQuery records by joining a results file with its bugs file.
inline std::vector<EvalQuery> queries_from_files(const std::string& results_text,
                                                 const std::string& bugs_text,
                                                 Granularity granularity, std::size_t k,
                                                 std::vector<BugReport>* joined_reports = nullptr) {
    const nlohmann::json results = nlohmann::json::parse(results_text, nullptr, false);
    if (results.is_discarded() || !results.is_array()) {
        throw MalformedFixture("results file must be a JSON array");
    }
    const std::vector<BugReport> reports = parse_bug_reports(bugs_text);
    std::map<std::string, const BugReport*> by_id;
    for (const BugReport& report : reports) {
        by_id[report.id] = &report;
    }

    std::vector<EvalQuery> queries;
    for (const auto& entry : results) {
        const std::string bug_id = entry.value("bug_id", std::string());
        const auto it = by_id.find(bug_id);
        if (it == by_id.end() || !it->second->ground_truth) {
            throw MissingGroundTruth(bug_id);
        }
        const GroundTruth& truth = *it->second->ground_truth;
        const std::set<std::string>& wanted =
            granularity == Granularity::method ? truth.methods : truth.documents;
        if (wanted.empty()) {
            const std::set<std::string>& other =
                granularity == Granularity::method ? truth.documents : truth.methods;
            if (!other.empty()) {
                throw GranularityMismatch("bug " + bug_id + " is annotated at the other level");
            }
            throw MissingGroundTruth(bug_id);
        }
        EvalQuery query;
        query.bug_id = bug_id;
        query.ranked = detail::ranked_items(entry, granularity);
        query.ground_truth = wanted;
        query.k = k;
        queries.push_back(std::move(query));
        if (joined_reports) {
            joined_reports->push_back(*it->second);
        }
    }
    return queries;
}

/// Full evaluation of one results file: overall metrics plus per-report-type
/// and per-ground-truth-spread breakdowns.
inline EvalReport evaluate_run(const std::string& results_path, const std::string& bugs_path,
                               Granularity granularity, std::size_t k = 10) {
    std::vector<BugReport> joined;
    const std::vector<EvalQuery> queries =
        queries_from_files(detail::read_file(results_path), detail::read_file(bugs_path),
                           granularity, k, &joined);
    if (queries.empty()) {
        throw NoQueries();
    }

    EvalReport report;
    report.overall = detail::bundle_for(queries);

    std::map<std::string, std::vector<EvalQuery>> by_type;
    std::map<std::string, std::vector<EvalQuery>> by_spread;
    for (std::size_t i = 0; i < queries.size(); ++i) {
        by_type[to_string(classify_report(joined[i]))].push_back(queries[i]);
        by_spread[detail::spread_bucket(queries[i].ground_truth.size())].push_back(queries[i]);
    }
    for (const auto& [type, group] : by_type) {
        report.per_type[type] = detail::bundle_for(group);
    }
    for (const auto& [bucket, group] : by_spread) {
        report.per_spread[bucket] = detail::bundle_for(group);
    }
    return report;
}

inline nlohmann::json eval_report_to_json(const EvalReport& report) {
    const auto bundle_json = [](const MetricBundle& bundle) {
        nlohmann::json hit;
        for (const auto& [K, value] : bundle.hit) {
            hit[std::to_string(K)] = value;
        }
        return nlohmann::json{{"map", bundle.map},
                              {"mrr", bundle.mrr},
                              {"hit", hit},
                              {"queries", bundle.queries}};
    };
    nlohmann::json per_type;
    for (const auto& [type, bundle] : report.per_type) {
        per_type[type] = bundle_json(bundle);
    }
    nlohmann::json per_spread;
    for (const auto& [bucket, bundle] : report.per_spread) {
        per_spread[bucket] = bundle_json(bundle);
    }
    return {{"overall", bundle_json(report.overall)},
            {"per_type", per_type},
            {"per_spread", per_spread}};
}

}  // namespace cogniloc
