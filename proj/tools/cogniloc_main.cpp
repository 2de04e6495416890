// Command-line entry point: index, localize, evaluate, classify.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cogniloc/evaluation.hpp"
#include "cogniloc/graph_io.hpp"
#include "cogniloc/http_transport.hpp"
#include "cogniloc/localizer.hpp"

namespace {

using namespace cogniloc;

int run_index(const std::string& fixture_path, const std::string& out_path) {
    try {
        const CodeGraph graph = build_graph(fixture_path);
        save_graph(graph, out_path);
        std::printf("segments=%zu edges=%zu\n", graph.segment_count(), graph.edge_count());
        return 0;
    } catch (const IoFailure& error) {
        std::fprintf(stderr, "error: %s\n", error.what());
        return 2;
    } catch (const std::exception& error) {
        std::fprintf(stderr, "error: %s\n", error.what());
        return 1;
    }
}

std::unique_ptr<AgentBackend> make_backend(const RunConfig& config) {
    if (config.scripted_path) {
        return std::make_unique<ScriptedBackend>(load_script(*config.scripted_path));
    }
    if (config.remote) {
        return std::make_unique<RemoteBackend>(*config.remote, httplib_transport());
    }
    throw MalformedFixture("config names neither a scripted nor a remote backend");
}

int run_localize(const std::string& bugs_path, const std::string& index_dir,
                 const std::string& config_path, const std::string& out_path) {
    try {
        RunConfig config = load_config(config_path);
        const std::vector<BugReport> bugs = load_bug_reports(bugs_path);
        if (bugs.empty()) {
            std::fprintf(stderr, "error: no bug reports in %s\n", bugs_path.c_str());
            return 1;
        }

        std::vector<std::unique_ptr<CodeGraph>> storage;
        std::map<std::pair<std::string, std::string>, const CodeGraph*> graphs;
        for (const auto& entry : std::filesystem::directory_iterator(index_dir)) {
            if (entry.path().extension() != ".json") {
                continue;
            }
            try {
                storage.push_back(std::make_unique<CodeGraph>(load_graph(entry.path().string())));
                const CodeGraph* graph = storage.back().get();
                graphs[{graph->system(), graph->version()}] = graph;
            } catch (const std::exception& error) {
                std::fprintf(stderr, "warning: skipping %s: %s\n", entry.path().c_str(),
                             error.what());
            }
        }

        const auto backend = make_backend(config);
        const LocalizeReport report = localize_bugs(bugs, graphs, *backend, config);
        detail::write_file(out_path, report.results.dump(2) + "\n");
        // Audit logs are always on for scripted runs, opt-in (trace) for remote.
        if (config.scripted_path || config.trace) {
            detail::write_file(out_path + ".audit.json", report.audits.dump(2) + "\n");
        }
        std::printf("localized %zu/%zu bugs (results: %s)\n", report.succeeded, bugs.size(),
                    out_path.c_str());
        return report.succeeded == 0 ? 1 : 0;
    } catch (const std::exception& error) {
        std::fprintf(stderr, "error: %s\n", error.what());
        return 1;
    }
}

void print_bundle(const std::string& label, const MetricBundle& bundle) {
    std::printf("%-12s MAP=%.4f MRR=%.4f HIT@1=%.4f HIT@5=%.4f HIT@10=%.4f (n=%zu)\n",
                label.c_str(), bundle.map, bundle.mrr, bundle.hit.at(1), bundle.hit.at(5),
                bundle.hit.at(10), bundle.queries);
}

/// First-relevant rank per bug at evaluation point K; bugs unlocalized within
/// the top K get the sentinel K+1.
std::vector<double> first_relevant_ranks(const std::vector<EvalQuery>& queries, std::size_t K) {
    std::vector<double> ranks;
    for (const EvalQuery& query : queries) {
        double rank = static_cast<double>(K + 1);
        const std::size_t limit = std::min(K, query.ranked.size());
        for (std::size_t i = 0; i < limit; ++i) {
            if (query.ground_truth.count(query.ranked[i])) {
                rank = static_cast<double>(i + 1);
                break;
            }
        }
        ranks.push_back(rank);
    }
    return ranks;
}

int run_evaluate(const std::string& results_path, const std::string& bugs_path,
                 const std::string& granularity_name, std::size_t k,
                 const std::string& compare_path, const std::string& report_path) {
    try {
        Granularity granularity;
        if (granularity_name == "method") {
            granularity = Granularity::method;
        } else if (granularity_name == "document") {
            granularity = Granularity::document;
        } else {
            std::fprintf(stderr, "error: granularity must be method or document\n");
            return 1;
        }

        const EvalReport report = evaluate_run(results_path, bugs_path, granularity, k);
        print_bundle("overall", report.overall);
        for (const auto& [type, bundle] : report.per_type) {
            print_bundle("type " + type, bundle);
        }
        for (const auto& [bucket, bundle] : report.per_spread) {
            print_bundle("spread " + bucket, bundle);
        }
        const std::string report_out =
            report_path.empty() ? results_path + ".eval." + granularity_name + ".json"
                                : report_path;
        detail::write_file(report_out, eval_report_to_json(report).dump(2) + "\n");

        if (!compare_path.empty()) {
            const std::string bugs_text = detail::read_file(bugs_path);
            const auto ours = queries_from_files(detail::read_file(results_path), bugs_text,
                                                 granularity, k);
            const auto theirs = queries_from_files(detail::read_file(compare_path), bugs_text,
                                                   granularity, k);
            if (ours.size() != theirs.size()) {
                std::fprintf(stderr, "error: result files cover different bug sets\n");
                return 1;
            }
            for (const std::size_t K : {std::size_t{1}, std::size_t{5}}) {
                const auto rank_a = first_relevant_ranks(ours, K);
                const auto rank_b = first_relevant_ranks(theirs, K);
                const double delta = cliffs_delta(rank_a, rank_b);
                std::string wilcoxon_text;
                try {
                    const WilcoxonResult test = wilcoxon_signed_rank(rank_a, rank_b);
                    char buffer[64];
                    std::snprintf(buffer, sizeof(buffer), "p=%.4f (W=%.1f)", test.p_value,
                                  test.statistic);
                    wilcoxon_text = buffer;
                } catch (const Error& error) {
                    wilcoxon_text = std::string("not applicable: ") + error.what();
                }
                std::printf("Top-%zu  Wilcoxon %s, Cliff's delta=%.4f (%s)\n", K,
                            wilcoxon_text.c_str(), delta, cliffs_magnitude(delta));
            }
        }
        return 0;
    } catch (const std::exception& error) {
        std::fprintf(stderr, "error: %s\n", error.what());
        return 1;
    }
}

int run_classify(const std::string& bugs_path, const std::string& patterns_path) {
    try {
        ClassifierPatterns patterns;
        if (!patterns_path.empty()) {
            nlohmann::json doc =
                nlohmann::json::parse(detail::read_file(patterns_path), nullptr, false);
            if (doc.is_discarded() || !doc.is_object()) {
                throw MalformedFixture("patterns file must be a JSON object");
            }
            patterns.stack_frame = doc.value("stack_frame", patterns.stack_frame);
            patterns.invocation = doc.value("invocation", patterns.invocation);
            patterns.dotted_name = doc.value("dotted_name", patterns.dotted_name);
            patterns.camel_case = doc.value("camel_case", patterns.camel_case);
        }
        std::map<std::string, int> counts{{"ST", 0}, {"PE", 0}, {"NL", 0}};
        for (const BugReport& report : load_bug_reports(bugs_path)) {
            const char* type = to_string(classify_report(report, patterns));
            ++counts[type];
            std::printf("%s\t%s\n", report.id.c_str(), type);
        }
        std::printf("ST=%d PE=%d NL=%d\n", counts["ST"], counts["PE"], counts["NL"]);
        return 0;
    } catch (const std::exception& error) {
        std::fprintf(stderr, "error: %s\n", error.what());
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"call-graph guided bug localization"};
    app.require_subcommand(1);

    std::string fixture_path;
    std::string out_path;
    auto* index = app.add_subcommand("index", "build and persist a code graph");
    index->add_option("--fixture", fixture_path, "graph fixture file")->required();
    index->add_option("--out", out_path, "output index file")->required();

    std::string bugs_path;
    std::string index_dir;
    std::string config_path;
    std::string results_path;
    auto* localize = app.add_subcommand("localize", "rank suspicious methods per bug");
    localize->add_option("--bugs", bugs_path, "bug reports file")->required();
    localize->add_option("--index-dir", index_dir, "directory of persisted indexes")->required();
    localize->add_option("--config", config_path,
                         "run config (falls back to $COGNILOC_CONFIG)");
    localize->add_option("--out", results_path, "results output file")->required();

    std::string eval_results;
    std::string eval_bugs;
    std::string granularity = "method";
    std::size_t k = 10;
    std::string compare_path;
    std::string report_path;
    auto* evaluate = app.add_subcommand("evaluate", "score a results file");
    evaluate->add_option("--results", eval_results)->required();
    evaluate->add_option("--bugs", eval_bugs)->required();
    evaluate->add_option("--granularity", granularity, "method|document");
    evaluate->add_option("--k", k);
    evaluate->add_option("--compare", compare_path, "second results file for paired tests");
    evaluate->add_option("--report", report_path, "write the full report as JSON");

    std::string classify_bugs;
    std::string patterns_path;
    auto* classify = app.add_subcommand("classify", "label reports as ST/PE/NL");
    classify->add_option("--bugs", classify_bugs)->required();
    classify->add_option("--patterns", patterns_path, "override classifier regexes");

    CLI11_PARSE(app, argc, argv);

    if (app.got_subcommand(index)) {
        return run_index(fixture_path, out_path);
    }
    if (app.got_subcommand(localize)) {
        if (config_path.empty()) {
            const char* fallback = std::getenv("COGNILOC_CONFIG");
            if (!fallback) {
                std::fprintf(stderr, "error: --config not given and COGNILOC_CONFIG unset\n");
                return 1;
            }
            config_path = fallback;
        }
        return run_localize(bugs_path, index_dir, config_path, results_path);
    }
    if (app.got_subcommand(evaluate)) {
        return run_evaluate(eval_results, eval_bugs, granularity, k, compare_path, report_path);
    }
    if (app.got_subcommand(classify)) {
        return run_classify(classify_bugs, patterns_path);
    }
    return 1;
}
