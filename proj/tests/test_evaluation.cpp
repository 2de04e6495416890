#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "cogniloc/evaluation.hpp"

using namespace cogniloc;

namespace {

EvalQuery query(const std::vector<std::string>& ranked, const std::set<std::string>& truth,
                std::size_t k = 10) {
    EvalQuery q;
    q.bug_id = "q";
    q.ranked = ranked;
    q.ground_truth = truth;
    q.k = k;
    return q;
}

BugReport report_with(const std::string& title, const std::string& description = "") {
    BugReport report;
    report.id = "r";
    report.title = title;
    report.description = description;
    report.system = "s";
    report.version = "v";
    return report;
}

}  // namespace

TEST_CASE("perfect single hit scores AP 1", "[evaluation]") {
    CHECK(average_precision_at_k(query({"m1", "x", "y"}, {"m1"})) == 1.0);
}

TEST_CASE("hand-worked AP example", "[evaluation]") {
    // D={m1,m2}, ranked=[m1, x, m2]: (1/2)(1/1 + 2/3) = 5/6.
    CHECK(average_precision_at_k(query({"m1", "x", "m2"}, {"m1", "m2"})) ==
          Catch::Approx(5.0 / 6.0).margin(1e-12));
}

TEST_CASE("no relevant item in the top K scores zero", "[evaluation]") {
    CHECK(average_precision_at_k(query({"x", "y"}, {"m1"})) == 0.0);
    CHECK(average_precision_at_k(query({"a", "b", "m1"}, {"m1"}, 2)) == 0.0);
}

TEST_CASE("AP denominator is the full ground-truth size", "[evaluation]") {
    // |D| = 3 but only one can appear in a k=1 window.
    CHECK(average_precision_at_k(query({"m1"}, {"m1", "m2", "m3"}, 1)) ==
          Catch::Approx(1.0 / 3.0));
}

TEST_CASE("AP is 1 exactly when the ground truth fills the top of the list",
          "[evaluation][property]") {
    // Enumerate all permutations of a 3-element ground truth in the leading
    // positions: every one scores 1. Swapping any leading item for a
    // non-relevant one drops the score below 1.
    std::vector<std::string> truth_items = {"t1", "t2", "t3"};
    std::sort(truth_items.begin(), truth_items.end());
    do {
        std::vector<std::string> ranked = truth_items;
        ranked.push_back("x");
        CHECK(average_precision_at_k(query(ranked, {"t1", "t2", "t3"})) == 1.0);
    } while (std::next_permutation(truth_items.begin(), truth_items.end()));

    for (std::size_t spoiled = 0; spoiled < 3; ++spoiled) {
        std::vector<std::string> ranked = {"t1", "t2", "t3", "x"};
        std::swap(ranked[spoiled], ranked[3]);
        CHECK(average_precision_at_k(query(ranked, {"t1", "t2", "t3"})) < 1.0);
    }
}

TEST_CASE("empty ground truth is rejected", "[evaluation]") {
    CHECK_THROWS_AS(average_precision_at_k(query({"x"}, {})), EmptyGroundTruth);
    CHECK_THROWS_AS(reciprocal_rank(query({"x"}, {})), EmptyGroundTruth);
}

TEST_CASE("MAP averages per-query AP", "[evaluation]") {
    const std::vector<EvalQuery> queries = {query({"m1"}, {"m1"}), query({"x"}, {"m1"})};
    CHECK(mean_average_precision(queries) == 0.5);
    CHECK(mean_average_precision({query({"m1"}, {"m1"})}) == 1.0);
    CHECK_THROWS_AS(mean_average_precision({}), NoQueries);
}

TEST_CASE("reciprocal rank basics", "[evaluation]") {
    CHECK(reciprocal_rank(query({"a", "b", "c", "m1"}, {"m1"})) == 0.25);
    CHECK(reciprocal_rank(query({"a", "b"}, {"m1"})) == 0.0);
    // First relevant at rank 87 in a long baseline list.
    std::vector<std::string> long_list;
    for (int i = 1; i <= 100; ++i) {
        long_list.push_back("m" + std::to_string(i));
    }
    CHECK(reciprocal_rank(query(long_list, {"m87"}, 100)) == Catch::Approx(1.0 / 87.0));
}

TEST_CASE("HIT@K counts queries with a hit", "[evaluation]") {
    const std::vector<EvalQuery> queries = {
        query({"m1", "x"}, {"m1"}),
        query({"x", "m2"}, {"m2"}),
        query({"x", "y"}, {"m3"}),
        query({"m4"}, {"m4"}),
    };
    CHECK(hit_at_k(queries, 1) == 0.5);
    CHECK(hit_at_k(queries, 2) == 0.75);
    const std::vector<EvalQuery> all_hit = {query({"x", "m1"}, {"m1"}),
                                            query({"y", "z", "m2"}, {"m2"})};
    CHECK(hit_at_k(all_hit, 10) == 1.0);
}

TEST_CASE("HIT@K is non-decreasing in K", "[evaluation][property]") {
    const std::vector<EvalQuery> queries = {
        query({"a", "m1", "b"}, {"m1"}),
        query({"x", "y", "z", "m2"}, {"m2"}),
        query({"m3"}, {"m3"}),
        query({"u", "v"}, {"m4"}),
    };
    double previous = 0.0;
    for (const std::size_t K : {1, 5, 10}) {
        const double value = hit_at_k(queries, K);
        CHECK(value >= previous);
        previous = value;
    }
}

// -- classification ---------------------------------------------------------------

TEST_CASE("stack frames classify as ST", "[evaluation][classify]") {
    CHECK(classify_report(report_with("crash",
                                      "at org.apache.X.y(X.java:42)")) == ReportType::ST);
    CHECK(classify_report(report_with("crash", "trace:\n  at a.b.c(D.java:1)\n  at e.f.g(H.java:2)")) ==
          ReportType::ST);
    // Two consecutive "at " lines without the classic frame shape.
    CHECK(classify_report(report_with("crash", "at start of run\nat end of run")) ==
          ReportType::ST);
}

TEST_CASE("program elements classify as PE", "[evaluation][classify]") {
    CHECK(classify_report(report_with("deleteSnapshot() misbehaves", "")) == ReportType::PE);
    CHECK(classify_report(report_with("problem in org.apache.hbase.client", "")) ==
          ReportType::PE);
    CHECK(classify_report(report_with("the restoreSnapshot path is broken", "")) ==
          ReportType::PE);
}

TEST_CASE("plain prose classifies as NL", "[evaluation][classify]") {
    CHECK(classify_report(report_with(
              "The failsafe snapshot should be deleted after rollback",
              "When a table is disabled and restore fails, the failsafe snapshot remains even "
              "after a successful rollback and it should be removed.")) == ReportType::NL);
}

TEST_CASE("ST precedence beats PE", "[evaluation][classify]") {
    CHECK(classify_report(report_with("deleteSnapshot() fails",
                                      "at org.apache.X.y(X.java:42)")) == ReportType::ST);
}

TEST_CASE("classification is total over a mixed corpus", "[evaluation][classify]") {
    const std::vector<BugReport> corpus = {
        report_with("a", "at a.b.c(D.java:1)\nat e.f.g(H.java:2)"),
        report_with("b", "calling parse() breaks"),
        report_with("c", "nothing works and everything is slow"),
    };
    std::set<std::string> seen;
    for (const BugReport& report : corpus) {
        seen.insert(to_string(classify_report(report)));
    }
    CHECK(seen == std::set<std::string>{"ST", "PE", "NL"});
}

// -- statistics ---------------------------------------------------------------------

TEST_CASE("identical samples have no signed-rank test", "[evaluation][stats]") {
    const std::vector<double> sample = {1, 2, 3, 4, 5, 6};
    CHECK_THROWS_AS(wilcoxon_signed_rank(sample, sample), AllDifferencesZero);
}

TEST_CASE("too few pairs after dropping zeros", "[evaluation][stats]") {
    CHECK_THROWS_AS(wilcoxon_signed_rank({1, 2, 3, 4}, {2, 3, 4, 5}), TooFewPairs);
    CHECK_THROWS_AS(wilcoxon_signed_rank({1, 2, 3, 4, 5, 6}, {2, 3, 4, 5, 5, 6}), TooFewPairs);
}

TEST_CASE("constant positive shift piles onto one side", "[evaluation][stats]") {
    std::vector<double> a;
    std::vector<double> b;
    for (int i = 1; i <= 10; ++i) {
        a.push_back(i + 1.0);
        b.push_back(static_cast<double>(i));
    }
    const WilcoxonResult result = wilcoxon_signed_rank(a, b);
    CHECK(result.statistic == 0.0);
    CHECK(result.p_value < 0.01);
    // Exact enumeration: 2 / 2^10.
    CHECK(result.p_value == Catch::Approx(0.001953125).margin(1e-12));
}

TEST_CASE("fixed 12-pair sample matches the reference computation", "[evaluation][stats]") {
    // Reference p-value computed independently with scipy.stats.wilcoxon
    // (two-sided, exact): statistic 37, p 0.90966796875.
    const std::vector<double> a = {12, 7, 22, 15, 32, 18, 5, 40, 21.5, 13, 27, 9};
    const std::vector<double> b = {10, 11, 16, 14, 24, 25, 14, 29, 20, 18, 17, 21};
    const WilcoxonResult result = wilcoxon_signed_rank(a, b);
    CHECK(result.statistic == 37.0);
    CHECK(result.p_value == Catch::Approx(0.90966796875).margin(1e-4));
}

TEST_CASE("tied magnitudes use the midrank permutation distribution", "[evaluation][stats]") {
    // Two |diffs| of 1 share rank 1.5. Reference: direct enumeration of all
    // 2^12 sign assignments over the midranks gives 2 * 1832/4096.
    const std::vector<double> a = {12, 7, 22, 15, 32, 18, 5, 40, 21, 13, 27, 9};
    const std::vector<double> b = {10, 11, 16, 14, 24, 25, 14, 29, 20, 18, 17, 21};
    const WilcoxonResult result = wilcoxon_signed_rank(a, b);
    CHECK(result.statistic == 37.0);
    CHECK(result.p_value == Catch::Approx(0.89453125).margin(1e-12));
}

TEST_CASE("large samples use the corrected normal approximation", "[evaluation][stats]") {
    // Reference from scipy.stats.wilcoxon(mode='approx', correction=True,
    // zero_method='wilcox'): statistic 154, p 0.5921391592232474.
    const std::vector<double> a = {11, 7, 8, 10, 7, 9, 10, 3, 1, 4,  4, 10, 11, 1, 6,
                                   10, 2, 9, 2,  6, 9, 4,  4, 4, 8,  3, 11, 5,  6, 6};
    const std::vector<double> b = {7, 7, 6, 11, 9, 9, 8, 7, 4, 11, 6, 3, 10, 2, 10,
                                   7, 2, 1, 5,  1, 2, 6, 11, 6, 9, 11, 10, 7, 5, 6};
    const WilcoxonResult result = wilcoxon_signed_rank(a, b);
    CHECK(result.statistic == 154.0);
    CHECK(result.p_value == Catch::Approx(0.5921391592232474).margin(1e-6));
}

TEST_CASE("cliffs delta hand examples", "[evaluation][stats]") {
    CHECK(cliffs_delta({1, 2, 3}, {4, 5, 6}) == -1.0);
    CHECK(cliffs_delta({1, 2, 3}, {1, 2, 3}) == 0.0);
    // Brute-force pair count: greater 2, less 6 over 9 pairs.
    CHECK(cliffs_delta({1, 2, 4}, {2, 3, 5}) == Catch::Approx(-4.0 / 9.0).margin(1e-15));
    // And the nearby variant: greater 3, less 5.
    CHECK(cliffs_delta({1, 2, 4}, {2, 3, 3}) == Catch::Approx(-2.0 / 9.0).margin(1e-15));
    CHECK_THROWS_AS(cliffs_delta({}, {1.0}), EmptySample);
}

TEST_CASE("cliffs delta magnitude bands", "[evaluation][stats]") {
    CHECK(std::string(cliffs_magnitude(0.1)) == "negligible");
    CHECK(std::string(cliffs_magnitude(0.147)) == "small");
    CHECK(std::string(cliffs_magnitude(-0.4)) == "medium");
    CHECK(std::string(cliffs_magnitude(0.474)) == "large");
}

TEST_CASE("cliffs delta is antisymmetric", "[evaluation][stats][property]") {
    const std::vector<double> a = {3, 1, 4, 1, 5};
    const std::vector<double> b = {2, 7, 1, 8};
    CHECK(cliffs_delta(a, b) == Catch::Approx(-cliffs_delta(b, a)).margin(1e-15));
}
