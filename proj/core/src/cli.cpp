#include "goldrank/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "goldrank/corpus.hpp"
#include "goldrank/ensemble.hpp"
#include "goldrank/fleet.hpp"
#include "goldrank/rank.hpp"
#include "goldrank/report.hpp"
#include "goldrank/spanex.hpp"
#include "internal_util.hpp"

namespace goldrank::cli {

namespace {

using nlohmann::json;

std::optional<std::uint64_t> env_seed() {
    const char* raw = std::getenv("GOLDRANK_SEED");
    if (raw == nullptr || *raw == '\0') return std::nullopt;
    try {
        return std::stoull(raw);
    } catch (const std::exception&) {
        throw std::runtime_error(
            std::string("GOLDRANK_SEED is not an unsigned integer: ") + raw);
    }
}

struct NamedPath {
    std::string name;
    std::string path;
};

// --preds accepts "name=path" or a bare path (name = file stem).
std::vector<NamedPath> parse_named(const std::vector<std::string>& specs) {
    std::vector<NamedPath> out;
    for (const std::string& spec : specs) {
        const auto eq = spec.find('=');
        if (eq != std::string::npos && eq > 0) {
            out.push_back({spec.substr(0, eq), spec.substr(eq + 1)});
            continue;
        }
        std::string stem = spec;
        const auto slash = stem.find_last_of("/\\");
        if (slash != std::string::npos) stem = stem.substr(slash + 1);
        const auto dot = stem.rfind('.');
        if (dot != std::string::npos && dot > 0) stem = stem.substr(0, dot);
        out.push_back({stem, spec});
    }
    return out;
}

std::vector<std::pair<std::string, std::vector<spanex::PredictionSet>>> load_runs(
    const std::vector<std::string>& specs) {
    std::vector<std::pair<std::string, std::vector<spanex::PredictionSet>>> runs;
    for (const NamedPath& np : parse_named(specs))
        runs.emplace_back(np.name, spanex::load_prediction_file(np.path));
    return runs;
}

void write_output(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write to " + path);
    out << content;
}

rank::MedianConvention convention_of(const std::string& name) {
    return name == "standard" ? rank::MedianConvention::Standard
                              : rank::MedianConvention::Paper;
}

void warn_discards(const corpus::LoadResult& loaded) {
    if (loaded.discarded.empty()) return;
    std::cerr << "warning: " << loaded.discarded.size()
              << " example(s) failed validation and were excluded:\n";
    for (const auto& d : loaded.discarded)
        for (const auto& issue : d.issues)
            std::cerr << "  " << d.example.id << ": "
                      << corpus::issue_name(issue.kind) << ": " << issue.message
                      << "\n";
}

struct CommonOpts {
    std::string dataset;
    std::vector<std::string> preds;
    int k = 10;
    double gamma = 1.0;
    std::string median_convention = "paper";
    std::string out;
};

int cmd_postprocess(const CommonOpts& common, const std::string& logits_path,
                    int max_answer_len, double null_threshold,
                    double start_weight, double end_weight) {
    const corpus::LoadResult loaded = corpus::load_dataset(common.dataset);
    warn_discards(loaded);
    const auto index = corpus::index_by_id(loaded.dataset);
    const auto records = spanex::load_logit_records(logits_path);
    std::vector<spanex::PredictionSet> sets;
    sets.reserve(records.size());
    for (const auto& rec : records) {
        auto it = index.find(rec.example_id);
        if (it == index.end())
            throw std::runtime_error("logit record for unknown example id \"" +
                                     rec.example_id + "\"");
        sets.push_back(spanex::top_k_predictions(
            rec, loaded.dataset.examples[it->second].context, common.k,
            max_answer_len, {start_weight, end_weight}, null_threshold));
    }
    std::ostringstream buffer;
    spanex::write_prediction_file(sets, buffer);
    write_output(common.out, buffer.str());
    return 0;
}

int cmd_score(const CommonOpts& common, const std::string& format,
              const std::string& gr_csv, const std::string& gr_jsonl) {
    const corpus::LoadResult loaded = corpus::load_dataset(common.dataset);
    warn_discards(loaded);
    const auto runs = load_runs(common.preds);
    if (runs.empty()) throw std::runtime_error("no prediction files supplied");
    if ((!gr_csv.empty() || !gr_jsonl.empty()) && runs.size() > 1)
        throw std::runtime_error(
            "--gr-csv/--gr-jsonl expect a single --preds experiment");

    const auto convention = convention_of(common.median_convention);
    std::vector<rank::AggregateReport> reports;
    for (const auto& [name, sets] : runs) {
        const auto records = rank::score_run(sets, loaded.dataset, common.k);
        reports.push_back(rank::aggregate_report(name, records, sets,
                                                 loaded.dataset, common.k,
                                                 common.gamma, convention));
        if (!gr_csv.empty()) {
            std::ofstream out(gr_csv, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write to " + gr_csv);
            rank::write_gr_csv(records, out);
        }
        if (!gr_jsonl.empty()) {
            std::ofstream out(gr_jsonl, std::ios::binary);
            if (!out) throw std::runtime_error("cannot write to " + gr_jsonl);
            rank::write_gr_jsonl(records, out);
        }
    }

    std::string rendered;
    if (format == "table") {
        rendered = rank::to_table(reports);
    } else if (reports.size() == 1) {
        rendered = rank::to_json(reports.front()) + "\n";
    } else {
        json arr = json::array();
        for (const auto& r : reports) arr.push_back(detail::report_json(r));
        rendered = arr.dump(2) + "\n";
    }
    write_output(common.out, rendered);
    return 0;
}

int cmd_matrix(const CommonOpts& common, const std::string& stats_out) {
    const corpus::LoadResult loaded = corpus::load_dataset(common.dataset);
    warn_discards(loaded);
    const auto runs = load_runs(common.preds);
    if (runs.empty()) throw std::runtime_error("no prediction files supplied");
    std::vector<std::pair<std::string, std::vector<rank::GoldenRankRecord>>>
        scored;
    for (const auto& [name, sets] : runs)
        scored.emplace_back(name, rank::score_run(sets, loaded.dataset, common.k));
    const fleet::BuildMatrixResult built = fleet::build_matrix(scored);
    if (!built.excluded_ids.empty())
        std::cerr << "warning: " << built.excluded_ids.size()
                  << " id(s) missing from at least one run were excluded\n";
    std::ostringstream buffer;
    fleet::write_matrix_csv(built.matrix, buffer);
    write_output(common.out, buffer.str());
    if (!stats_out.empty()) {
        std::ofstream out(stats_out, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write to " + stats_out);
        fleet::write_stats_csv(fleet::example_stats(built.matrix, loaded.dataset),
                               out);
    }
    return 0;
}

json summary_json(const std::vector<fleet::ClusterSummaryRow>& rows) {
    json out = json::array();
    for (const auto& r : rows)
        out.push_back({{"cluster", r.label},
                       {"counts", r.count},
                       {"from_gr", r.gr_min},
                       {"to_gr", r.gr_max},
                       {"from_std", r.std_min},
                       {"to_std", r.std_max}});
    return out;
}

int cmd_cluster(const CommonOpts& common, const std::string& matrix_path,
                const std::string& features_name, int clusters,
                double birch_threshold, int branching,
                const std::string& assignments_out) {
    const corpus::LoadResult loaded = corpus::load_dataset(common.dataset);
    warn_discards(loaded);
    fleet::GrMatrix matrix;
    if (!matrix_path.empty()) {
        matrix = fleet::read_matrix_csv(matrix_path);
    } else {
        const auto runs = load_runs(common.preds);
        if (runs.empty())
            throw std::runtime_error("supply --preds files or a --matrix CSV");
        std::vector<std::pair<std::string, std::vector<rank::GoldenRankRecord>>>
            scored;
        for (const auto& [name, sets] : runs)
            scored.emplace_back(name,
                                rank::score_run(sets, loaded.dataset, common.k));
        matrix = fleet::build_matrix(scored).matrix;
    }
    const auto stats = fleet::example_stats(matrix, loaded.dataset);
    const auto features = features_name == "meanstd"
                              ? fleet::ClusterFeatures::MeanStd
                              : fleet::ClusterFeatures::Vector;
    const fleet::BirchParams params{birch_threshold, branching};

    json out_json;
    std::ostringstream assignments_csv;
    assignments_csv << "id,answerable,cluster,label\n";
    for (const bool answerable : {true, false}) {
        const char* key = answerable ? "answerable" : "unanswerable";
        const auto n_part = std::count_if(
            stats.begin(), stats.end(),
            [&](const fleet::ExampleStats& s) { return s.answerable == answerable; });
        if (n_part == 0) {
            out_json[key] = {{"n_examples", 0}, {"clusters", json::array()}};
            continue;
        }
        const fleet::DifficultyResult part = fleet::cluster_partition(
            matrix, stats, answerable, features, clusters, params);
        if (part.degenerate)
            std::cerr << "warning: fewer " << key
                      << " examples than clusters; using singletons\n";
        out_json[key] = {{"n_examples", n_part},
                         {"clusters", summary_json(part.table)},
                         {"degenerate", part.degenerate}};
        for (const auto& a : part.assignments)
            assignments_csv << detail::csv_escape(a.example_id) << ','
                            << (answerable ? "true" : "false") << ','
                            << a.cluster_id << ',' << detail::csv_escape(a.label)
                            << '\n';
    }
    write_output(common.out, out_json.dump(2) + "\n");
    if (!assignments_out.empty()) {
        std::ofstream out(assignments_out, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write to " + assignments_out);
        out << assignments_csv.str();
    }
    return 0;
}

int cmd_ensemble(const CommonOpts& common, const std::string& criterion_name,
                 int top, const std::string& grim_direction) {
    const corpus::LoadResult loaded = corpus::load_dataset(common.dataset);
    warn_discards(loaded);
    const auto runs = load_runs(common.preds);
    if (runs.empty()) throw std::runtime_error("no prediction files supplied");
    const auto convention = convention_of(common.median_convention);
    const auto seed = env_seed();

    std::vector<rank::AggregateReport> reports;
    for (const auto& [name, sets] : runs) {
        const auto records = rank::score_run(sets, loaded.dataset, common.k);
        reports.push_back(rank::aggregate_report(name, records, sets,
                                                 loaded.dataset, common.k,
                                                 common.gamma, convention));
    }

    ensemble::EnsembleSpec spec;
    spec.criterion = criterion_name == "em"   ? ensemble::Criterion::Em
                     : criterion_name == "grim" ? ensemble::Criterion::Grim
                                                : ensemble::Criterion::F1;
    spec.size = top;
    spec.grim_lower_is_better = grim_direction != "high";

    const auto members = ensemble::select_members(reports, spec, seed);
    const auto preds = ensemble::majority_vote(runs, members, seed);
    const auto [em, f1] = ensemble::evaluate_ensemble(preds, loaded.dataset);

    if (!common.out.empty()) {
        std::ofstream out(common.out, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write to " + common.out);
        spanex::write_prediction_file(
            ensemble::to_prediction_sets(preds, static_cast<int>(members.size())),
            out);
    }
    const json summary{{"criterion", criterion_name},
                       {"size", top},
                       {"members", members},
                       {"em", em},
                       {"f1", f1}};
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int cmd_plot(const CommonOpts& common, const std::string& kind,
             const std::string& coloring, const std::string& features_name,
             int clusters, const std::string& x_name, const std::string& y_name,
             bool fit, const std::string& log_path, const std::string& title) {
    if (common.out.empty() || common.out == "-")
        throw std::runtime_error("plot requires --out <file.svg>");

    report::FigureSpec spec;
    spec.title = title;

    const auto metric_of = [](const std::string& name) {
        if (name == "em") return report::Metric::Em;
        if (name == "grim") return report::Metric::Grim;
        if (name == "f1-em") return report::Metric::F1MinusEm;
        return report::Metric::F1;
    };

    std::string svg;
    if (kind == "training_curves") {
        if (log_path.empty())
            throw std::runtime_error("training_curves requires --log <file>");
        svg = report::training_curves_svg(report::load_training_log(log_path),
                                          spec);
    } else {
        const corpus::LoadResult loaded = corpus::load_dataset(common.dataset);
        warn_discards(loaded);
        const auto runs = load_runs(common.preds);
        if (runs.empty()) throw std::runtime_error("no prediction files supplied");
        const auto convention = convention_of(common.median_convention);

        if (kind == "gr_histogram" || kind == "metric_scatter") {
            std::vector<rank::AggregateReport> reports;
            for (const auto& [name, sets] : runs) {
                const auto records = rank::score_run(sets, loaded.dataset, common.k);
                reports.push_back(rank::aggregate_report(
                    name, records, sets, loaded.dataset, common.k, common.gamma,
                    convention));
            }
            svg = kind == "gr_histogram"
                      ? report::gr_histogram_svg(reports, spec)
                      : report::metric_scatter_svg(reports, metric_of(x_name),
                                                   metric_of(y_name), fit, spec);
        } else if (kind == "meanstd_scatter") {
            std::vector<std::pair<std::string,
                                  std::vector<rank::GoldenRankRecord>>>
                scored;
            for (const auto& [name, sets] : runs)
                scored.emplace_back(
                    name, rank::score_run(sets, loaded.dataset, common.k));
            const auto built = fleet::build_matrix(scored);
            const auto stats = fleet::example_stats(built.matrix, loaded.dataset);
            report::ScatterStyle style;
            if (coloring == "ever-correct") {
                style.coloring = report::ScatterColoring::EverCorrect;
                for (const auto& id : fleet::never_correct(built.matrix))
                    style.never_correct_ids.insert(id);
            } else if (coloring == "cluster") {
                style.coloring = report::ScatterColoring::Cluster;
                const auto features = features_name == "meanstd"
                                          ? fleet::ClusterFeatures::MeanStd
                                          : fleet::ClusterFeatures::Vector;
                for (const bool answerable : {true, false}) {
                    const auto part = fleet::cluster_partition(
                        built.matrix, stats, answerable, features, clusters, {});
                    for (const auto& a : part.assignments)
                        style.cluster_label_of.emplace(a.example_id, a.label);
                }
            } else {
                style.coloring = report::ScatterColoring::Answerability;
            }
            svg = report::meanstd_scatter_svg(stats, common.k, style, spec);
        } else {
            throw std::runtime_error("unknown plot kind: " + kind);
        }
    }
    write_output(common.out, svg);
    return 0;
}

int cmd_report(const CommonOpts& common, const std::string& features_name,
               int clusters, const std::vector<int>& tops) {
    const corpus::LoadResult loaded = corpus::load_dataset(common.dataset);
    const auto runs = load_runs(common.preds);
    if (runs.empty()) throw std::runtime_error("no prediction files supplied");
    report::ReportOptions options;
    options.k = common.k;
    options.gamma = common.gamma;
    options.convention = convention_of(common.median_convention);
    options.features = features_name == "meanstd"
                           ? fleet::ClusterFeatures::MeanStd
                           : fleet::ClusterFeatures::Vector;
    options.clusters = clusters;
    if (!tops.empty()) options.ensemble_sizes = tops;
    options.seed = env_seed();
    write_output(common.out,
                 report::consolidated_report_json(loaded, runs, options) + "\n");
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{
        "goldrank: golden-rank evaluation of extractive QA prediction dumps"};
    app.require_subcommand(1);

    CommonOpts common;
    std::string logits_path, format = "json", gr_csv, gr_jsonl, stats_out;
    std::string matrix_path, features_name = "vector", assignments_out;
    std::string criterion_name = "f1", grim_direction = "low";
    std::string kind, coloring = "answerability", x_name = "em", y_name = "f1";
    std::string log_path, title;
    int max_answer_len = 30, clusters = 3, top = 3, branching = 50;
    double null_threshold = 0.0, start_weight = 1.0, end_weight = 1.0;
    double birch_threshold = 0.5;
    bool fit = true;
    std::vector<int> tops;

    const auto add_common = [&](CLI::App* sub, bool needs_dataset,
                                bool needs_preds) {
        auto* d = sub->add_option("--dataset", common.dataset,
                                  "dataset file (nested JSON or JSONL)");
        if (needs_dataset) d->required();
        auto* p = sub->add_option("--preds", common.preds,
                                  "prediction file, repeatable, name=path or path");
        if (needs_preds) p->required();
        sub->add_option("--k", common.k, "top-K cap")->capture_default_str();
        sub->add_option("--gamma", common.gamma, "DGRM discount exponent")
            ->capture_default_str();
        sub->add_option("--median-convention", common.median_convention,
                        "interpolated-median sign")
            ->check(CLI::IsMember({"paper", "standard"}))
            ->capture_default_str();
        sub->add_option("--out", common.out, "output path (default stdout)");
    };

    auto* postprocess =
        app.add_subcommand("postprocess", "turn logit dumps into top-K predictions");
    add_common(postprocess, true, false);
    postprocess->add_option("--logits", logits_path, "logit dump JSONL")->required();
    postprocess->add_option("--max-answer-len", max_answer_len,
                            "max answer span length in tokens")
        ->capture_default_str();
    postprocess->add_option("--null-threshold", null_threshold,
                            "no-answer decision threshold in summed-logit space")
        ->capture_default_str();
    postprocess->add_option("--start-weight", start_weight, "start logit weight")
        ->capture_default_str();
    postprocess->add_option("--end-weight", end_weight, "end logit weight")
        ->capture_default_str();

    auto* score = app.add_subcommand("score", "aggregate metrics for experiments");
    add_common(score, true, true);
    score->add_option("--format", format, "json or table")
        ->check(CLI::IsMember({"json", "table"}))
        ->capture_default_str();
    score->add_option("--gr-csv", gr_csv, "write per-example golden ranks as CSV");
    score->add_option("--gr-jsonl", gr_jsonl,
                      "write per-example golden ranks as JSONL");

    auto* matrix =
        app.add_subcommand("matrix", "examples-by-experiments golden-rank matrix");
    add_common(matrix, true, true);
    matrix->add_option("--stats-out", stats_out, "write per-example mean/std CSV");

    auto* cluster =
        app.add_subcommand("cluster", "difficulty clustering per answerability");
    add_common(cluster, true, false);
    cluster->add_option("--matrix", matrix_path, "read a matrix CSV instead of --preds");
    cluster->add_option("--features", features_name, "clustering feature space")
        ->check(CLI::IsMember({"vector", "meanstd"}))
        ->capture_default_str();
    cluster->add_option("--clusters", clusters, "number of clusters")
        ->capture_default_str();
    cluster->add_option("--birch-threshold", birch_threshold,
                        "CF-tree absorption radius")
        ->capture_default_str();
    cluster->add_option("--branching", branching, "CF-tree branching factor")
        ->capture_default_str();
    cluster->add_option("--assignments-out", assignments_out,
                        "write per-example assignments CSV");

    auto* ens = app.add_subcommand("ensemble", "majority-vote ensembling");
    add_common(ens, true, true);
    ens->add_option("--criterion", criterion_name, "member selection metric")
        ->check(CLI::IsMember({"em", "f1", "grim"}))
        ->capture_default_str();
    ens->add_option("--top", top, "ensemble size")->capture_default_str();
    ens->add_option("--grim-direction", grim_direction,
                    "whether low or high GRIM is preferred")
        ->check(CLI::IsMember({"low", "high"}))
        ->capture_default_str();

    auto* plot = app.add_subcommand("plot", "emit a figure as SVG");
    add_common(plot, false, false);
    plot->add_option("--kind", kind, "figure kind")
        ->check(CLI::IsMember({"gr_histogram", "meanstd_scatter", "metric_scatter",
                               "training_curves"}))
        ->required();
    plot->add_option("--coloring", coloring, "meanstd_scatter point coloring")
        ->check(CLI::IsMember({"answerability", "ever-correct", "cluster"}))
        ->capture_default_str();
    plot->add_option("--features", features_name, "clustering feature space")
        ->check(CLI::IsMember({"vector", "meanstd"}))
        ->capture_default_str();
    plot->add_option("--clusters", clusters, "number of clusters")
        ->capture_default_str();
    plot->add_option("--x", x_name, "metric_scatter x metric")
        ->check(CLI::IsMember({"em", "f1", "grim", "f1-em"}))
        ->capture_default_str();
    plot->add_option("--y", y_name, "metric_scatter y metric")
        ->check(CLI::IsMember({"em", "f1", "grim", "f1-em"}))
        ->capture_default_str();
    plot->add_flag("--fit,!--no-fit", fit, "draw regression line and band")
        ->capture_default_str();
    plot->add_option("--log", log_path, "training_curves validation log");
    plot->add_option("--title", title, "figure title");

    auto* rep = app.add_subcommand("report", "one consolidated JSON report");
    add_common(rep, true, true);
    rep->add_option("--features", features_name, "clustering feature space")
        ->check(CLI::IsMember({"vector", "meanstd"}))
        ->capture_default_str();
    rep->add_option("--clusters", clusters, "number of clusters")
        ->capture_default_str();
    rep->add_option("--top", tops, "ensemble sizes to evaluate, repeatable");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n(run with --help for usage)\n";
        return 2;
    }

    try {
        if (postprocess->parsed())
            return cmd_postprocess(common, logits_path, max_answer_len,
                                   null_threshold, start_weight, end_weight);
        if (score->parsed()) return cmd_score(common, format, gr_csv, gr_jsonl);
        if (matrix->parsed()) return cmd_matrix(common, stats_out);
        if (cluster->parsed())
            return cmd_cluster(common, matrix_path, features_name, clusters,
                               birch_threshold, branching, assignments_out);
        if (ens->parsed())
            return cmd_ensemble(common, criterion_name, top, grim_direction);
        if (plot->parsed())
            return cmd_plot(common, kind, coloring, features_name, clusters,
                            x_name, y_name, fit, log_path, title);
        if (rep->parsed()) return cmd_report(common, features_name, clusters, tops);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace goldrank::cli
