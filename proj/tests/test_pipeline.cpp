#include <random>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "cogniloc/pipeline.hpp"
#include "cogniloc/scripted_backend.hpp"

using namespace cogniloc;
using nlohmann::json;

namespace {

CodeSegment seg(const std::string& id, const std::string& body) {
    CodeSegment segment;
    segment.id = id;
    segment.qualified_name = "pkg." + id;
    segment.signature = id + "()";
    segment.document_path = id + ".java";
    segment.start_line = 1;
    segment.end_line = 2;
    segment.body = body;
    return segment;
}

CodeGraph five_segment_graph() {
    return CodeGraph("demo", "1.0",
                     {seg("alpha", "restore snapshot failsafe rollback"),
                      seg("beta", "delete snapshot"),
                      seg("gamma", "snapshot snapshot snapshot snapshot"),
                      seg("delta", "thread pool timeout"),
                      seg("epsilon", "log roller append")},
                     {});
}

BugReport bug(const std::string& id = "bug-1") {
    BugReport report;
    report.id = id;
    report.title = "failsafe snapshot survives rollback";
    report.description = "after a failed restore the failsafe snapshot is never deleted";
    report.system = "demo";
    report.version = "1.0";
    return report;
}

/// Backend that always fails; used to exercise degradation rules.
class DownBackend : public AgentBackend {
  public:
    AgentResponse complete(const AgentRequest&) override {
        throw BackendUnavailable("down for maintenance");
    }
    const char* name() const override { return "down"; }
};

ScriptedBackend backend_with(const json& bug_sections, const json& defaults = json::object()) {
    json script;
    script["bug-1"] = bug_sections;
    if (!defaults.empty()) {
        script["defaults"] = defaults;
    }
    return ScriptedBackend(parse_script(script));
}

}  // namespace

TEST_CASE("restructure uses the scripted text", "[pipeline]") {
    auto backend = backend_with({{"restructure", "failsafe snapshot not deleted after rollback"}});
    CHECK(restructure_report(bug(), backend) == "failsafe snapshot not deleted after rollback");
}

TEST_CASE("restructure degrades to title+description", "[pipeline]") {
    DownBackend down;
    CHECK(restructure_report(bug(), down) ==
          "failsafe snapshot survives rollback\n"
          "after a failed restore the failsafe snapshot is never deleted");
}

TEST_CASE("empty reports are rejected", "[pipeline]") {
    BugReport empty = bug();
    empty.title.clear();
    empty.description.clear();
    DownBackend down;
    CHECK_THROWS_AS(restructure_report(empty, down), EmptyReport);
}

TEST_CASE("retrieval wraps search results", "[pipeline]") {
    const CodeGraph graph = five_segment_graph();
    const CandidateSet candidates = retrieve_candidates("snapshot restore", graph, 100);
    CHECK(candidates.stage == CandidateStage::retrieved);
    CHECK(candidates.entries.size() <= 5);
    CHECK(candidates.contains("alpha"));
    for (std::size_t i = 1; i < candidates.entries.size(); ++i) {
        CHECK(candidates.entries[i - 1].second >= candidates.entries[i].second);
    }
}

TEST_CASE("retrieval of an unmatched query is empty", "[pipeline]") {
    const CandidateSet candidates = retrieve_candidates("zebra", five_segment_graph(), 100);
    CHECK(candidates.entries.empty());
}

TEST_CASE("filter keeps the top n by scripted score", "[pipeline]") {
    const CodeGraph graph = five_segment_graph();
    const CandidateSet retrieved = retrieve_candidates("snapshot", graph, 100);
    REQUIRE(retrieved.entries.size() == 3);  // alpha, beta, gamma mention snapshot

    auto backend = backend_with({{"filter", {{"alpha", 0.9}, {"beta", 0.4}, {"gamma", 0.7}}}});
    const CandidateSet filtered = filter_candidates(bug(), retrieved, graph, backend, 2);
    CHECK(filtered.stage == CandidateStage::filtered);
    REQUIRE(filtered.entries.size() == 2);
    CHECK(filtered.entries[0].first == "alpha");
    CHECK(filtered.entries[0].second == 0.9);
    CHECK(filtered.entries[1].first == "gamma");
}

TEST_CASE("filter ties fall back to retrieval order", "[pipeline]") {
    const CodeGraph graph = five_segment_graph();
    const CandidateSet retrieved = retrieve_candidates("snapshot", graph, 100);
    auto backend = backend_with(json::object(), {{"filter", 0.0}});
    const CandidateSet filtered = filter_candidates(bug(), retrieved, graph, backend, 2);
    REQUIRE(filtered.entries.size() == 2);
    CHECK(filtered.entries[0].first == retrieved.entries[0].first);
    CHECK(filtered.entries[1].first == retrieved.entries[1].first);
}

TEST_CASE("filter failures score zero instead of aborting", "[pipeline]") {
    const CodeGraph graph = five_segment_graph();
    const CandidateSet retrieved = retrieve_candidates("snapshot", graph, 100);
    DownBackend down;
    const CandidateSet filtered = filter_candidates(bug(), retrieved, graph, down, 10);
    CHECK(filtered.entries.size() == retrieved.entries.size());
    for (const auto& [segment, score] : filtered.entries) {
        (void)segment;
        CHECK(score == 0.0);
    }
}

TEST_CASE("filter keeps the ten best of a hundred candidates", "[pipeline][oracle]") {
    // One segment per candidate, scripted scores; the survivors must equal a
    // stable sort of (score desc, retrieval position asc) truncated at ten.
    std::vector<CodeSegment> segments;
    CandidateSet retrieved{CandidateStage::retrieved, {}};
    json filter_scores;
    std::mt19937 rng(424242);
    std::uniform_int_distribution<int> grid(0, 10);
    std::vector<std::pair<double, std::size_t>> oracle;  // (-score, position)
    for (int i = 0; i < 100; ++i) {
        const std::string id = "cand" + std::to_string(i);
        CodeSegment segment;
        segment.id = id;
        segment.qualified_name = id;
        segment.signature = id + "()";
        segment.document_path = id + ".java";
        segment.start_line = 1;
        segment.end_line = 2;
        segment.body = "void f() { snapshot(); }";
        segments.push_back(segment);
        retrieved.entries.emplace_back(id, 100.0 - i);
        const double score = grid(rng) * 0.1;
        filter_scores[id] = score;
        oracle.emplace_back(-score, static_cast<std::size_t>(i));
    }
    const CodeGraph graph("demo", "1.0", segments, {});
    auto backend = backend_with({{"filter", filter_scores}});

    std::stable_sort(oracle.begin(), oracle.end());
    const CandidateSet filtered = filter_candidates(bug(), retrieved, graph, backend, 10);
    REQUIRE(filtered.entries.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK(filtered.entries[i].first == retrieved.entries[oracle[i].second].first);
        CHECK(filtered.entries[i].second == -oracle[i].first);
    }
}

TEST_CASE("n beyond the candidate count passes everything", "[pipeline]") {
    const CodeGraph graph = five_segment_graph();
    const CandidateSet retrieved = retrieve_candidates("snapshot", graph, 100);
    auto backend = backend_with(json::object(), {{"filter", 0.5}});
    CHECK(filter_candidates(bug(), retrieved, graph, backend, 50).entries.size() ==
          retrieved.entries.size());
}

TEST_CASE("hypotheses come back in candidate order with scripted values", "[pipeline]") {
    const CodeGraph graph = five_segment_graph();
    CandidateSet filtered{CandidateStage::filtered, {{"alpha", 0.9}, {"beta", 0.4}}};
    auto backend = backend_with(
        {{"hypothesis",
          {{"alpha", {{"statement", "rethrow skips delete"}, {"category", "high"}, {"score", 0.85}}},
           {"beta", {{"statement", "wrong flag"}, {"category", "medium"}, {"score", 0.55}}}}}});
    const auto hypotheses = generate_hypotheses(bug(), filtered, graph, backend);
    REQUIRE(hypotheses.size() == 2);
    CHECK(hypotheses[0].segment == "alpha");
    CHECK(hypotheses[0].category == ConfidenceCategory::high);
    CHECK(hypotheses[0].score == 0.85);
    CHECK(hypotheses[1].segment == "beta");
    CHECK(hypotheses[1].score == 0.55);
}

TEST_CASE("category is repaired toward the score band", "[pipeline]") {
    const CodeGraph graph = five_segment_graph();
    CandidateSet filtered{CandidateStage::filtered, {{"alpha", 0.9}}};
    auto backend = backend_with(
        {{"hypothesis",
          {{"alpha", {{"statement", "s"}, {"category", "high"}, {"score", 0.2}}}}}});
    const auto hypotheses = generate_hypotheses(bug(), filtered, graph, backend);
    REQUIRE(hypotheses.size() == 1);
    CHECK(hypotheses[0].category == ConfidenceCategory::low);

    CHECK(category_for_score(0.7) == ConfidenceCategory::high);
    CHECK(category_for_score(0.69) == ConfidenceCategory::medium);
    CHECK(category_for_score(0.4) == ConfidenceCategory::medium);
    CHECK(category_for_score(0.39) == ConfidenceCategory::low);
}

TEST_CASE("hypothesis failures degrade to low zero", "[pipeline]") {
    const CodeGraph graph = five_segment_graph();
    CandidateSet filtered{CandidateStage::filtered, {{"alpha", 0.9}, {"beta", 0.4}}};
    DownBackend down;
    const auto hypotheses = generate_hypotheses(bug(), filtered, graph, down);
    REQUIRE(hypotheses.size() == 2);
    for (const Hypothesis& hypothesis : hypotheses) {
        CHECK(hypothesis.category == ConfidenceCategory::low);
        CHECK(hypothesis.score == 0.0);
    }
}

TEST_CASE("retention keeps high and medium ordered by score", "[pipeline]") {
    const std::vector<Hypothesis> hypotheses = {
        {"a", "", ConfidenceCategory::medium, 0.55},
        {"b", "", ConfidenceCategory::high, 0.85},
        {"c", "", ConfidenceCategory::low, 0.2},
    };
    const auto retained = retain_for_investigation(hypotheses);
    REQUIRE(retained.size() == 2);
    CHECK(retained[0].segment == "b");
    CHECK(retained[1].segment == "a");
}

TEST_CASE("retention of all-low is empty", "[pipeline]") {
    const std::vector<Hypothesis> hypotheses = {{"a", "", ConfidenceCategory::low, 0.1},
                                                {"b", "", ConfidenceCategory::low, 0.3}};
    CHECK(retain_for_investigation(hypotheses).empty());
}

TEST_CASE("retention ties keep input order", "[pipeline]") {
    const std::vector<Hypothesis> hypotheses = {{"first", "", ConfidenceCategory::medium, 0.6},
                                                {"second", "", ConfidenceCategory::medium, 0.6}};
    const auto retained = retain_for_investigation(hypotheses);
    REQUIRE(retained.size() == 2);
    CHECK(retained[0].segment == "first");
    CHECK(retained[1].segment == "second");
}

TEST_CASE("long bodies are truncated tail-first with a marker", "[pipeline]") {
    const std::string body(10000, 'x');
    const std::string capped = capped_body(body, 8000);
    CHECK(capped.size() == 8000 + std::string("\n...[truncated]").size());
    CHECK(capped.substr(0, 8000) == body.substr(0, 8000));
    CHECK(capped.find("...[truncated]") != std::string::npos);
    CHECK(capped_body("short", 8000) == "short");
}

TEST_CASE("monotone funnel invariant", "[pipeline][property]") {
    const CodeGraph graph = five_segment_graph();
    auto backend = backend_with(
        {{"filter", {{"alpha", 0.9}, {"beta", 0.8}, {"gamma", 0.7}}},
         {"hypothesis",
          {{"alpha", {{"statement", ""}, {"category", "high"}, {"score", 0.8}}},
           {"beta", {{"statement", ""}, {"category", "low"}, {"score", 0.2}}},
           {"gamma", {{"statement", ""}, {"category", "medium"}, {"score", 0.5}}}}}},
        {{"filter", 0.0},
         {"hypothesis", {{"statement", ""}, {"category", "low"}, {"score", 0.1}}}});

    const std::size_t k = 100;
    const CandidateSet retrieved = retrieve_candidates("snapshot restore delete", graph, k);
    const CandidateSet filtered = filter_candidates(bug(), retrieved, graph, backend, 10);
    const auto hypotheses = generate_hypotheses(bug(), filtered, graph, backend);
    const auto retained = retain_for_investigation(hypotheses);

    CHECK(retained.size() <= filtered.entries.size());
    CHECK(filtered.entries.size() <= std::min(k, graph.segment_count()));
    CHECK(hypotheses.size() == filtered.entries.size());
}

TEST_CASE("scripted pipeline is deterministic", "[pipeline][property]") {
    const CodeGraph graph = five_segment_graph();
    auto backend = backend_with(
        {{"restructure", "snapshot restore"},
         {"filter", {{"alpha", 0.9}, {"beta", 0.8}, {"gamma", 0.7}}},
         {"hypothesis",
          {{"alpha", {{"statement", "x"}, {"category", "high"}, {"score", 0.8}}}}}},
        {{"hypothesis", {{"statement", ""}, {"category", "low"}, {"score", 0.1}}},
         {"filter", 0.0}});

    const auto run_once = [&]() {
        const std::string query = restructure_report(bug(), backend);
        const CandidateSet retrieved = retrieve_candidates(query, graph, 100);
        const CandidateSet filtered = filter_candidates(bug(), retrieved, graph, backend, 10);
        return generate_hypotheses(bug(), filtered, graph, backend);
    };
    const auto first = run_once();
    const auto second = run_once();
    REQUIRE(first.size() == second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].segment == second[i].segment);
        CHECK(first[i].score == second[i].score);
        CHECK(first[i].category == second[i].category);
    }
}
