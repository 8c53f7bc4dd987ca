// fairnorm: command line front end for fair score normalization experiments.

#include "fairnorm/error.hpp"
#include "fairnorm/experiment.hpp"
#include "fairnorm/model_io.hpp"
#include "fairnorm/synth.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

namespace {

using namespace fairnorm;

struct GlobalOptions {
    std::uint64_t seed = 0;
    double fmr = 1e-3;
    int k = 100;
    int folds = 5;
    std::string format;
    std::string threshold_source = "test";
    std::string dump_scores;
    bool json = false;
    int workers = 1;
};

DatasetFormat format_for(const GlobalOptions& g, const std::string& path)
{
    return g.format.empty() ? dataset_format_from_path(path) : parse_dataset_format(g.format);
}

/// Writes to the named file, or stdout for "" / "-".
class Output {
public:
    explicit Output(const std::string& path)
    {
        if (!path.empty() && path != "-") {
            file_.open(path);
            if (!file_)
                throw DataError("cannot open '" + path + "' for writing");
        }
    }
    std::ostream& stream() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

private:
    std::ofstream file_;
};

void dump_scores(const GlobalOptions& g, std::span<const ScorePair> pairs)
{
    if (g.dump_scores.empty())
        return;
    Output out(g.dump_scores);
    write_scores_csv(pairs, out.stream());
}

ExperimentConfig experiment_config(const GlobalOptions& g)
{
    ExperimentConfig c;
    c.k = g.k;
    c.fit_fmr = g.fmr;
    c.n_folds = g.folds;
    c.seed = g.seed;
    c.threshold_source = parse_threshold_source(g.threshold_source);
    c.workers = g.workers;
    if (!g.format.empty())
        c.format = parse_dataset_format(g.format);
    return c;
}

std::vector<std::pair<std::string, std::string>> read_pairs_csv(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open pairs file '" + path + "'");
    std::vector<std::pair<std::string, std::string>> pairs;
    std::string line;
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (line.empty() || line.front() == '#')
            continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos || line.find(',', comma + 1) != std::string::npos)
            throw DataError(path + ": row " + std::to_string(row + 1) + ": expected 'i,j'");
        auto a = line.substr(0, comma);
        auto b = line.substr(comma + 1);
        if (row++ == 0 && a == "i" && b == "j")
            continue;
        pairs.emplace_back(std::move(a), std::move(b));
    }
    return pairs;
}

int run_synth(const GlobalOptions& g, SynthConfig config, const std::string& out)
{
    config.seed = g.seed;
    const auto dataset = generate(config);
    save_dataset(dataset, out, format_for(g, out));
    std::cerr << "wrote " << dataset.size() << " samples of " << dataset.subject_count() << " subjects to " << out
              << '\n';
    return 0;
}

int run_train(const GlobalOptions& g, const std::string& data, const std::string& out, std::optional<int> min_imp,
              int max_iters, double tol)
{
    auto train = TrainSplit::whole(load_dataset(data, format_for(g, data)));
    FairFitOptions options;
    options.kmeans.k = g.k;
    options.kmeans.seed = g.seed;
    options.kmeans.max_iters = max_iters;
    options.kmeans.tol = tol;
    options.fmr_target = g.fmr;
    options.min_impostor_count = min_imp;
    options.workers = g.workers;
    const auto pairs = score_all_pairs(train.data(), g.workers);
    dump_scores(g, pairs);
    const auto model = fit_fair_model(train, options, pairs);
    save_model(model, out);

    const auto fallbacks = std::count(model.thresholds.fallback.begin(), model.thresholds.fallback.end(), true);
    if (g.json) {
        std::cout << R"({"k":)" << model.k() << R"(,"global_threshold":)" << model.thresholds.global_thr
                  << R"(,"fallback_clusters":)" << fallbacks << R"(,"iterations":)" << model.clusters.iterations_run
                  << R"(,"converged":)" << (model.clusters.converged ? "true" : "false") << "}\n";
    } else {
        std::cout << "k=" << model.k() << " thr_G=" << model.thresholds.global_thr << " fallback clusters="
                  << fallbacks << " iterations=" << model.clusters.iterations_run
                  << (model.clusters.converged ? " (converged)" : " (max iterations)") << '\n';
    }
    return 0;
}

int run_normalize(const GlobalOptions& g, const std::string& model_path, const std::string& data,
                  const std::string& pairs_path, const std::string& out_path)
{
    const auto model = load_model(model_path);
    const auto dataset = load_dataset(data, format_for(g, data));
    if (dataset.dim() != model.dim())
        throw DataError("dataset dimension " + std::to_string(dataset.dim()) + " does not match model dimension " +
                        std::to_string(model.dim()));
    const auto deltas = sample_deltas(model, dataset, g.workers);
    const PairScorer scorer(dataset);

    std::vector<ScorePair> scored;
    std::vector<std::pair<std::string, std::string>> ids;
    for (const auto& [a, b] : read_pairs_csv(pairs_path)) {
        const auto ia = dataset.find(a);
        const auto ib = dataset.find(b);
        if (!ia || !ib)
            throw DataError("unknown sample_id '" + (!ia ? a : b) + "' in pairs file");
        if (*ia == *ib)
            throw DataError("pair (" + a + "," + b + ") compares a sample with itself");
        ScorePair p = scorer.make_pair(std::min(*ia, *ib), std::max(*ia, *ib));
        p.normalized_score = normalize_with_deltas(p.raw_score, deltas[*ia], deltas[*ib]);
        scored.push_back(p);
        ids.emplace_back(a, b);
    }
    dump_scores(g, scored);

    Output out(out_path);
    auto& os = out.stream();
    os.precision(17);
    os << "i,j,raw,normalized,decision\n";
    for (std::size_t n = 0; n < scored.size(); ++n) {
        const double s = *scored[n].normalized_score;
        os << ids[n].first << ',' << ids[n].second << ',' << scored[n].raw_score << ',' << s << ','
           << to_string(decide_at(s, model.thresholds.global_thr)) << '\n';
    }
    return 0;
}

int run_evaluate(const GlobalOptions& g, const std::string& data, const std::string& model_path,
                 const std::vector<double>& targets, const std::string& det_csv)
{
    const auto dataset = load_dataset(data, format_for(g, data));
    auto pairs = score_all_pairs(dataset, g.workers);
    dump_scores(g, pairs);
    ScoreField field = ScoreField::raw;
    std::optional<FairNormModel> model;
    if (!model_path.empty()) {
        model = load_model(model_path);
        normalize_pairs(*model, dataset, pairs, g.workers);
        field = ScoreField::normalized;
    }
    std::optional<std::vector<double>> fixed;
    if (parse_threshold_source(g.threshold_source) == ThresholdSource::train) {
        if (!model)
            throw UsageError("--threshold-source train needs --model (its global threshold is the train threshold)");
        for (double f : targets)
            if (f != model->thresholds.fmr_target)
                throw UsageError("the model only carries a train threshold for FMR " +
                                 std::to_string(model->thresholds.fmr_target));
        fixed = std::vector<double>(targets.size(), model->thresholds.global_thr);
    }
    const auto report = evaluate(pairs, dataset, targets, field, fixed, g.workers);

    if (!det_csv.empty()) {
        std::vector<double> gen, imp;
        for (const auto& p : pairs)
            (p.genuine ? gen : imp).push_back(field_score(p, field));
        Output out(det_csv);
        auto& os = out.stream();
        os.precision(17);
        os << "threshold,fmr,fnmr\n";
        for (const auto& pt : det_curve(gen, imp))
            os << pt.threshold << ',' << pt.fmr << ',' << pt.fnmr << '\n';
    }
    std::cout << (g.json ? report_to_json(report) + "\n" : format_report(report));
    return 0;
}

int run_cv(const GlobalOptions& g, Method method, const std::vector<std::string>& data,
           const std::vector<double>& targets, bool compare)
{
    auto config = experiment_config(g);
    config.method = method;
    config.fmr_targets = targets;
    for (const auto& d : data)
        config.dataset_paths.emplace_back(d);
    const auto systems = load_systems(config);
    const auto report = run_experiment(systems, config);

    if (!compare || method == Method::global) {
        std::cout << (g.json ? aggregated_to_json(report) + "\n" : format_aggregated(report));
        return 0;
    }
    auto base_config = config;
    base_config.method = Method::global;
    const std::span<const EmbeddingDataset> first(systems.data(), 1);
    const auto baseline = run_experiment(first, base_config);
    std::cout << (g.json ? comparison_to_json(baseline, report) + "\n"
                         : format_comparison(baseline, report, to_string(method)));
    return 0;
}

int run_sweep(const GlobalOptions& g, const std::string& data, std::vector<int> ks,
              const std::vector<double>& targets, const std::string& out_path, const std::string& cache_dir)
{
    auto config = experiment_config(g);
    config.fmr_targets = targets;
    if (!cache_dir.empty())
        config.cache_dir = cache_dir;
    const auto dataset = load_dataset(data, format_for(g, data));
    if (ks.empty())
        ks = default_sweep_grid(static_cast<int>(min_train_size(dataset, config)));
    const auto result = sweep_k(dataset, config, ks);
    Output out(out_path);
    write_sweep_csv(result, out.stream());
    return 0;
}

int run_export(const GlobalOptions& g, const std::string& model_path, const std::string& data,
               const std::string& out_path)
{
    const auto model = load_model(model_path);
    const auto dataset = load_dataset(data, format_for(g, data));
    const auto rows = export_thresholds(model, dataset);
    Output out(out_path);
    write_thresholds_csv(rows, out.stream());
    return 0;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Unsupervised fair score normalization for biometric verification"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    app.add_option("--seed", g.seed, "Random seed (folds, k-means, synthesis)");
    app.add_option("--fmr", g.fmr, "FMR the thresholds are fitted at")->check(CLI::Range(0.0, 1.0));
    app.add_option("--k", g.k, "Number of clusters (individuality parameter)")->check(CLI::PositiveNumber);
    app.add_option("--folds", g.folds, "Cross-validation folds")->check(CLI::Range(2, 1000));
    app.add_option("--format", g.format, "Dataset format")->check(CLI::IsMember({"csv", "binary"}));
    app.add_option("--threshold-source", g.threshold_source, "Where evaluation thresholds come from")
        ->check(CLI::IsMember({"train", "test"}));
    app.add_option("--dump-scores", g.dump_scores, "Write raw pair scores as CSV to this file");
    app.add_flag("--json", g.json, "Emit reports as JSON");
    app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);

    const std::vector<double> default_targets{1e-3, 1e-4, 1e-5};

    // synth
    auto* synth = app.add_subcommand("synth", "Generate a synthetic biased population");
    SynthConfig synth_config;
    std::string synth_out;
    synth->add_option("--out", synth_out, "Output dataset path")->required();
    synth->add_option("--dim", synth_config.dim)->check(CLI::PositiveNumber);
    synth->add_option("--groups", synth_config.n_groups)->check(CLI::PositiveNumber);
    synth->add_option("--subjects-per-group", synth_config.subjects_per_group)->check(CLI::PositiveNumber);
    synth->add_option("--samples-per-subject", synth_config.samples_per_subject)->check(CLI::PositiveNumber);
    synth->add_option("--intra-noise", synth_config.intra_noise, "Per-group noise scales")->delimiter(',');
    synth->add_option("--dispersion", synth_config.group_dispersion, "Subject spread around group centers");

    // train
    auto* train = app.add_subcommand("train", "Fit clusters and thresholds on a training dataset");
    std::string train_data, train_out;
    std::optional<int> min_impostors;
    int max_iters = 300;
    double tol = 1e-4;
    train->add_option("--data", train_data)->required();
    train->add_option("--out", train_out, "Model JSON path")->required();
    train->add_option("--min-impostors", min_impostors, "Fallback trigger (default ceil(1/fmr))");
    train->add_option("--max-iters", max_iters)->check(CLI::PositiveNumber);
    train->add_option("--tol", tol);

    // normalize
    auto* norm = app.add_subcommand("normalize", "Normalize the scores of listed pairs");
    std::string norm_model, norm_data, norm_pairs, norm_out;
    norm->add_option("--model", norm_model)->required();
    norm->add_option("--data", norm_data)->required();
    norm->add_option("--pairs", norm_pairs, "CSV of 'i,j' sample IDs")->required();
    norm->add_option("--out", norm_out, "Output CSV (default stdout)");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "FNMR at fixed FMR, per class and bias STD, on all pairs");
    std::string eval_data, eval_model, eval_det;
    std::vector<double> eval_targets = default_targets;
    eval->add_option("--data", eval_data)->required();
    eval->add_option("--model", eval_model, "Evaluate normalized scores of this model");
    eval->add_option("--fmr-targets", eval_targets)->delimiter(',');
    eval->add_option("--det-csv", eval_det, "Write (threshold, FMR, FNMR) triples");

    // baseline / run
    auto* baseline = app.add_subcommand("baseline", "Cross-validated reference system");
    std::string baseline_method = "global";
    std::vector<std::string> baseline_data;
    std::vector<double> baseline_targets = default_targets;
    baseline->add_option("--method", baseline_method)->check(CLI::IsMember({"global", "slf"}));
    baseline->add_option("--data", baseline_data, "Dataset (twice for slf)")->required();
    baseline->add_option("--fmr-targets", baseline_targets)->delimiter(',');

    auto* run = app.add_subcommand("run", "Full cross-validated experiment");
    std::string run_method = "fair";
    std::vector<std::string> run_data;
    std::vector<double> run_targets = default_targets;
    bool no_compare = false;
    run->add_option("--method", run_method)->check(CLI::IsMember({"fair", "global", "slf"}));
    run->add_option("--data", run_data, "Dataset (twice for slf)")->required();
    run->add_option("--fmr-targets", run_targets)->delimiter(',');
    run->add_flag("--no-compare", no_compare, "Skip the global-threshold comparison");

    // sweep-k
    auto* sweep = app.add_subcommand("sweep-k", "Cross-validated FNMR over a grid of k");
    std::string sweep_data, sweep_out, sweep_cache;
    std::vector<int> sweep_ks;
    std::vector<double> sweep_targets{1e-3};
    sweep->add_option("--data", sweep_data)->required();
    sweep->add_option("--ks", sweep_ks, "k grid (default log-spaced, clipped to train size)")->delimiter(',');
    sweep->add_option("--fmr-targets", sweep_targets)->delimiter(',');
    sweep->add_option("--out", sweep_out, "CSV output (default stdout)");
    sweep->add_option("--cache-dir", sweep_cache, "Directory for cached raw scores");

    // export-thresholds
    auto* exp = app.add_subcommand("export-thresholds", "Per-sample cluster and local threshold");
    std::string exp_model, exp_data, exp_out;
    exp->add_option("--model", exp_model)->required();
    exp->add_option("--data", exp_data)->required();
    exp->add_option("--out", exp_out, "CSV output (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*synth)
            return run_synth(g, synth_config, synth_out);
        if (*train)
            return run_train(g, train_data, train_out, min_impostors, max_iters, tol);
        if (*norm)
            return run_normalize(g, norm_model, norm_data, norm_pairs, norm_out);
        if (*eval)
            return run_evaluate(g, eval_data, eval_model, eval_targets, eval_det);
        if (*baseline)
            return run_cv(g, parse_method(baseline_method), baseline_data, baseline_targets, false);
        if (*run)
            return run_cv(g, parse_method(run_method), run_data, run_targets, !no_compare);
        if (*sweep)
            return run_sweep(g, sweep_data, sweep_ks, sweep_targets, sweep_out, sweep_cache);
        if (*exp)
            return run_export(g, exp_model, exp_data, exp_out);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ErrorKind::data);
    }
    return 1;
}
