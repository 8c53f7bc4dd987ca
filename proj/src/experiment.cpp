#include "fairnorm/experiment.hpp"

#include "fairnorm/error.hpp"
#include "fairnorm/thresholds.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstring>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>

namespace fairnorm {

Method parse_method(const std::string& name)
{
    if (name == "fair")
        return Method::fair;
    if (name == "global")
        return Method::global;
    if (name == "slf")
        return Method::slf;
    throw UsageError("unknown method '" + name + "' (expected fair, global or slf)");
}

ThresholdSource parse_threshold_source(const std::string& name)
{
    if (name == "train")
        return ThresholdSource::train;
    if (name == "test")
        return ThresholdSource::test;
    throw UsageError("unknown threshold source '" + name + "' (expected train or test)");
}

const char* to_string(Method m) noexcept
{
    switch (m) {
    case Method::fair: return "fair";
    case Method::global: return "global";
    case Method::slf: return "slf";
    }
    return "?";
}

CellStats summarize(std::vector<double> per_fold)
{
    CellStats cell;
    cell.per_fold = std::move(per_fold);
    if (cell.per_fold.empty())
        return cell;
    double sum = 0.0;
    for (double v : cell.per_fold)
        sum += v;
    cell.mean = sum / static_cast<double>(cell.per_fold.size());
    cell.std_population = population_std(cell.per_fold);
    cell.std_sample = sample_std(cell.per_fold);
    return cell;
}

AggregatedReport aggregate(std::vector<EvalReport> folds)
{
    if (folds.empty())
        throw UsageError("aggregate: no fold reports");
    AggregatedReport out;
    out.fmr_targets = folds.front().fmr_targets;
    const std::size_t n_targets = out.fmr_targets.size();
    for (const auto& f : folds)
        if (f.fmr_targets != out.fmr_targets)
            throw UsageError("aggregate: folds were evaluated at different FMR targets");

    for (std::size_t t = 0; t < n_targets; ++t) {
        std::vector<double> values;
        for (const auto& f : folds)
            values.push_back(f.overall_fnmr[t]);
        out.overall_fnmr.push_back(summarize(std::move(values)));
    }

    std::map<ClassKey, std::vector<std::vector<double>>> classes;
    std::map<std::string, std::vector<std::vector<double>>> biases;
    for (const auto& f : folds) {
        for (const auto& [key, fnmr] : f.per_class_fnmr) {
            auto& cols = classes[key];
            cols.resize(n_targets);
            for (std::size_t t = 0; t < n_targets; ++t)
                cols[t].push_back(fnmr[t]);
        }
        for (const auto& [attr, stds] : f.bias_std) {
            auto& cols = biases[attr];
            cols.resize(n_targets);
            for (std::size_t t = 0; t < n_targets; ++t)
                cols[t].push_back(stds[t]);
        }
    }
    for (auto& [key, cols] : classes)
        for (auto& c : cols)
            out.per_class_fnmr[key].push_back(summarize(std::move(c)));
    for (auto& [attr, cols] : biases)
        for (auto& c : cols)
            out.bias_std[attr].push_back(summarize(std::move(c)));
    out.folds = std::move(folds);
    return out;
}

EmbeddingDataset align_to(const EmbeddingDataset& reference, const EmbeddingDataset& other)
{
    if (reference.size() != other.size())
        throw DataError("fusion systems have different sample counts (" + std::to_string(reference.size()) +
                        " vs " + std::to_string(other.size()) + ")");
    std::vector<std::size_t> rows;
    rows.reserve(reference.size());
    for (const auto& s : reference.samples()) {
        const auto row = other.find(s.sample_id);
        if (!row)
            throw DataError("sample '" + s.sample_id + "' missing from the second system");
        if (other.sample(*row).subject_id != s.subject_id)
            throw DataError("sample '" + s.sample_id + "' has different subject IDs in the two systems");
        rows.push_back(*row);
    }
    return other.subset(rows);
}

std::vector<EmbeddingDataset> load_systems(const ExperimentConfig& config)
{
    const std::size_t expected = config.method == Method::slf ? 2 : 1;
    if (config.dataset_paths.size() != expected)
        throw UsageError(std::string("method ") + to_string(config.method) + " needs " + std::to_string(expected) +
                         " dataset path(s), got " + std::to_string(config.dataset_paths.size()));
    std::vector<EmbeddingDataset> systems;
    for (const auto& path : config.dataset_paths)
        systems.push_back(load_dataset(path, config.format.value_or(dataset_format_from_path(path))));
    if (systems.size() == 2)
        systems[1] = align_to(systems[0], systems[1]);
    return systems;
}

namespace {

void validate_config(const ExperimentConfig& config)
{
    if (config.fmr_targets.empty())
        throw UsageError("at least one FMR target is required");
    for (double f : config.fmr_targets)
        if (!(f > 0.0 && f < 1.0))
            throw UsageError("FMR targets must lie in (0, 1)");
    if (!(config.fit_fmr > 0.0 && config.fit_fmr < 1.0))
        throw UsageError("--fmr must lie in (0, 1)");
    if (config.k < 1)
        throw UsageError("k must be at least 1");
    if (config.n_folds < 2)
        throw UsageError("at least 2 folds are required");
}

struct PreparedFold {
    FoldData data;
    std::vector<ScorePair> train_pairs;
    std::vector<ScorePair> test_pairs;
};

std::uint64_t fingerprint(const EmbeddingDataset& ds)
{
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const void* data, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t b = 0; b < n; ++b) {
            h ^= bytes[b];
            h *= 1099511628211ull;
        }
    };
    for (const auto& s : ds.samples()) {
        mix(s.sample_id.data(), s.sample_id.size() + 1);
        mix(s.subject_id.data(), s.subject_id.size() + 1);
    }
    mix(ds.vectors().data(), sizeof(float) * static_cast<std::size_t>(ds.vectors().size()));
    return h;
}

std::vector<ScorePair> cached_pairs(const EmbeddingDataset& ds, const ExperimentConfig& config)
{
    if (!config.cache_dir)
        return score_all_pairs(ds, config.workers);
    std::filesystem::create_directories(*config.cache_dir);
    std::ostringstream name;
    name << "scores_" << std::hex << fingerprint(ds) << ".fns";
    const auto path = *config.cache_dir / name.str();
    if (std::filesystem::exists(path))
        return load_score_cache(path, ds);
    auto pairs = score_all_pairs(ds, config.workers);
    save_score_cache(pairs, path);
    return pairs;
}

PreparedFold prepare(const EmbeddingDataset& ds, const FoldSplit& split, const ExperimentConfig& config)
{
    PreparedFold fold{materialize_fold(ds, split), {}, {}};
    fold.train_pairs = cached_pairs(fold.data.train.data(), config);
    fold.test_pairs = cached_pairs(fold.data.test, config);
    return fold;
}

std::vector<double> train_thresholds(std::span<const ScorePair> pairs, ScoreField field,
                                     std::span<const double> targets)
{
    std::vector<double> impostors;
    for (const auto& p : pairs)
        if (!p.genuine)
            impostors.push_back(field_score(p, field));
    std::vector<double> out;
    for (double f : targets)
        out.push_back(threshold_at_fmr(impostors, f));
    return out;
}

EvalReport eval_global(const PreparedFold& fold, const ExperimentConfig& config)
{
    std::optional<std::vector<double>> fixed;
    if (config.threshold_source == ThresholdSource::train)
        fixed = train_thresholds(fold.train_pairs, ScoreField::raw, config.fmr_targets);
    return evaluate(fold.test_pairs, fold.data.test, config.fmr_targets, ScoreField::raw, fixed, config.workers);
}

EvalReport eval_fair(const PreparedFold& fold, const ExperimentConfig& config, int k)
{
    FairFitOptions options;
    options.kmeans.k = k;
    options.kmeans.seed = config.seed;
    options.kmeans.max_iters = config.max_iters;
    options.kmeans.tol = config.tol;
    options.fmr_target = config.fit_fmr;
    options.min_impostor_count = config.min_impostor_count;
    options.workers = config.workers;
    const FairNormModel model = fit_fair_model(fold.data.train, options, fold.train_pairs);

    std::optional<std::vector<double>> fixed;
    if (config.threshold_source == ThresholdSource::train) {
        auto train = fold.train_pairs;
        normalize_pairs(model, fold.data.train.data(), train, config.workers);
        fixed = train_thresholds(train, ScoreField::normalized, config.fmr_targets);
    }
    auto test = fold.test_pairs;
    normalize_pairs(model, fold.data.test, test, config.workers);
    return evaluate(test, fold.data.test, config.fmr_targets, ScoreField::normalized, fixed, config.workers);
}

// Writes fused scores into `normalized_score` of a copy of system A's pairs.
std::vector<ScorePair> fuse(std::span<const ScorePair> a, std::span<const ScorePair> b,
                            std::span<const MinMaxStats> stats)
{
    if (a.size() != b.size())
        throw DataError("fusion systems produced different pair sets");
    std::vector<ScorePair> out(a.begin(), a.end());
    for (std::size_t p = 0; p < out.size(); ++p) {
        if (a[p].i != b[p].i || a[p].j != b[p].j || a[p].genuine != b[p].genuine)
            throw DataError("fusion systems are not aligned");
        const double scores[2] = {a[p].raw_score, b[p].raw_score};
        out[p].normalized_score = slf_fuse(scores, stats);
    }
    return out;
}

EvalReport eval_slf(const PreparedFold& a, const PreparedFold& b, const ExperimentConfig& config)
{
    auto raw_scores = [](std::span<const ScorePair> pairs) {
        std::vector<double> s;
        s.reserve(pairs.size());
        for (const auto& p : pairs)
            s.push_back(p.raw_score);
        return s;
    };
    const MinMaxStats stats[2] = {fit_minmax(raw_scores(a.train_pairs)), fit_minmax(raw_scores(b.train_pairs))};
    std::optional<std::vector<double>> fixed;
    if (config.threshold_source == ThresholdSource::train)
        fixed = train_thresholds(fuse(a.train_pairs, b.train_pairs, stats), ScoreField::normalized,
                                 config.fmr_targets);
    const auto test = fuse(a.test_pairs, b.test_pairs, stats);
    return evaluate(test, a.data.test, config.fmr_targets, ScoreField::normalized, fixed, config.workers);
}

}  // namespace

AggregatedReport run_experiment(const ExperimentConfig& config)
{
    const auto systems = load_systems(config);
    return run_experiment(systems, config);
}

AggregatedReport run_experiment(std::span<const EmbeddingDataset> systems, const ExperimentConfig& config)
{
    validate_config(config);
    const std::size_t expected = config.method == Method::slf ? 2 : 1;
    if (systems.size() != expected)
        throw UsageError(std::string("method ") + to_string(config.method) + " needs " + std::to_string(expected) +
                         " embedding system(s)");
    std::optional<EmbeddingDataset> aligned;
    if (expected == 2)
        aligned = align_to(systems[0], systems[1]);

    const auto splits = make_subject_disjoint_folds(systems[0], config.n_folds, config.seed);
    std::vector<EvalReport> reports;
    for (std::size_t f = 0; f < splits.size(); ++f) {
        try {
            const auto fold = prepare(systems[0], splits[f], config);
            switch (config.method) {
            case Method::global: reports.push_back(eval_global(fold, config)); break;
            case Method::fair: reports.push_back(eval_fair(fold, config, config.k)); break;
            case Method::slf: reports.push_back(eval_slf(fold, prepare(*aligned, splits[f], config), config)); break;
            }
        } catch (const Error& e) {
            rethrow_with_context(e, "fold " + std::to_string(f));
        }
    }
    return aggregate(std::move(reports));
}

std::vector<int> default_sweep_grid(int max_k)
{
    std::vector<int> grid;
    for (int k : {1, 2, 5, 10, 20, 50, 100, 200, 500, 1000})
        if (k <= max_k)
            grid.push_back(k);
    return grid;
}

std::size_t min_train_size(const EmbeddingDataset& dataset, const ExperimentConfig& config)
{
    const auto splits = make_subject_disjoint_folds(dataset, config.n_folds, config.seed);
    std::size_t smallest = dataset.size();
    for (const auto& s : splits) {
        const std::set<std::string> train(s.train_subject_ids.begin(), s.train_subject_ids.end());
        std::size_t n = 0;
        for (const auto& sample : dataset.samples())
            n += train.contains(sample.subject_id) ? 1 : 0;
        smallest = std::min(smallest, n);
    }
    return smallest;
}

SweepResult sweep_k(const EmbeddingDataset& dataset, const ExperimentConfig& config, std::vector<int> ks)
{
    validate_config(config);
    std::sort(ks.begin(), ks.end());
    ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
    if (ks.empty())
        throw UsageError("sweep_k: no k values given");
    if (ks.front() < 1)
        throw UsageError("sweep_k: k values must be at least 1");

    const auto splits = make_subject_disjoint_folds(dataset, config.n_folds, config.seed);
    const std::size_t n_targets = config.fmr_targets.size();
    std::vector<std::vector<std::vector<double>>> fnmr(ks.size(), std::vector<std::vector<double>>(n_targets));
    std::vector<std::vector<double>> baseline(n_targets);

    for (std::size_t f = 0; f < splits.size(); ++f) {
        try {
            const auto fold = prepare(dataset, splits[f], config);
            if (static_cast<std::size_t>(ks.back()) > fold.data.train.data().size())
                throw DataError("k=" + std::to_string(ks.back()) + " exceeds the train split size (" +
                                std::to_string(fold.data.train.data().size()) + ")");
            const auto base = eval_global(fold, config);
            for (std::size_t t = 0; t < n_targets; ++t)
                baseline[t].push_back(base.overall_fnmr[t]);
            for (std::size_t i = 0; i < ks.size(); ++i) {
                const auto report = eval_fair(fold, config, ks[i]);
                for (std::size_t t = 0; t < n_targets; ++t)
                    fnmr[i][t].push_back(report.overall_fnmr[t]);
            }
        } catch (const Error& e) {
            rethrow_with_context(e, "fold " + std::to_string(f));
        }
    }

    SweepResult result;
    result.fmr_targets = config.fmr_targets;
    for (std::size_t i = 0; i < ks.size(); ++i) {
        SweepEntry entry{ks[i], {}};
        for (auto& col : fnmr[i])
            entry.fnmr.push_back(summarize(std::move(col)));
        result.entries.push_back(std::move(entry));
    }
    for (auto& col : baseline)
        result.baseline.push_back(summarize(std::move(col)));
    return result;
}

void write_sweep_csv(const SweepResult& result, std::ostream& out)
{
    out << "k,fmr_target,mean_fnmr,std_sample,std_population,baseline_mean,baseline_std_sample\n";
    out.precision(10);
    for (const auto& e : result.entries)
        for (std::size_t t = 0; t < result.fmr_targets.size(); ++t)
            out << e.k << ',' << result.fmr_targets[t] << ',' << e.fnmr[t].mean << ',' << e.fnmr[t].std_sample << ','
                << e.fnmr[t].std_population << ',' << result.baseline[t].mean << ','
                << result.baseline[t].std_sample << '\n';
}

std::vector<ThresholdRow> export_thresholds(const FairNormModel& model, const EmbeddingDataset& dataset)
{
    const auto labels = assign_all(model.clusters, dataset.vectors());
    std::vector<ThresholdRow> rows;
    rows.reserve(dataset.size());
    for (std::size_t i = 0; i < dataset.size(); ++i)
        rows.push_back({dataset.sample(i).sample_id, labels[i],
                        model.thresholds.local[static_cast<std::size_t>(labels[i])]});
    return rows;
}

void write_thresholds_csv(std::span<const ThresholdRow> rows, std::ostream& out)
{
    out << "sample_id,cluster_id,local_threshold\n";
    out.precision(17);
    for (const auto& r : rows)
        out << r.sample_id << ',' << r.cluster_id << ',' << r.local_threshold << '\n';
}

namespace {

nlohmann::json cell_json(const CellStats& c)
{
    return {{"mean", c.mean}, {"std_sample", c.std_sample}, {"std_population", c.std_population},
            {"per_fold", c.per_fold}};
}

nlohmann::json cells_json(const std::vector<CellStats>& cells)
{
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : cells)
        arr.push_back(cell_json(c));
    return arr;
}

nlohmann::json aggregated_json(const AggregatedReport& r)
{
    using nlohmann::json;
    json classes = json::array();
    for (const auto& [key, cells] : r.per_class_fnmr)
        classes.push_back({{"attribute", key.attribute}, {"class", key.label}, {"fnmr", cells_json(cells)}});
    json bias = json::object();
    for (const auto& [attr, cells] : r.bias_std)
        bias[attr] = cells_json(cells);
    return {{"fmr_targets", r.fmr_targets}, {"folds", r.folds.size()}, {"overall_fnmr", cells_json(r.overall_fnmr)},
            {"classes", std::move(classes)}, {"bias_std", std::move(bias)}};
}

std::string pct(const std::optional<double>& v)
{
    if (!v)
        return "n/a";
    std::ostringstream os;
    os << std::fixed << std::setprecision(1) << *v << '%';
    return os.str();
}

std::string mean_std(const CellStats& c)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(4) << c.mean << " +- " << c.std_sample;
    return os.str();
}

}  // namespace

std::string aggregated_to_json(const AggregatedReport& report, int indent)
{
    return aggregated_json(report).dump(indent);
}

std::string format_aggregated(const AggregatedReport& report)
{
    std::ostringstream os;
    os << std::left;
    os << std::setw(14) << "Attribute" << std::setw(14) << "Class";
    for (double f : report.fmr_targets) {
        std::ostringstream label;
        label << "FNMR@" << std::setprecision(3) << f;
        os << std::setw(22) << label.str();
    }
    os << '\n' << std::setw(28) << "(overall)";
    for (const auto& c : report.overall_fnmr)
        os << std::setw(22) << mean_std(c);
    os << '\n';
    for (const auto& [key, cells] : report.per_class_fnmr) {
        os << std::setw(14) << key.attribute << std::setw(14) << key.label;
        for (const auto& c : cells)
            os << std::setw(22) << mean_std(c);
        os << '\n';
    }
    for (const auto& [attr, cells] : report.bias_std) {
        os << std::setw(14) << attr << std::setw(14) << "Bias (STD)";
        for (const auto& c : cells)
            os << std::setw(22) << mean_std(c);
        os << '\n';
    }
    os << "(mean +- sample std over " << report.folds.size() << " folds)\n";
    return os.str();
}

std::string format_comparison(const AggregatedReport& baseline, const AggregatedReport& treated,
                              const std::string& treated_name)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    for (std::size_t t = 0; t < baseline.fmr_targets.size() && t < treated.fmr_targets.size(); ++t) {
        os << "FNMR at FMR " << std::defaultfloat << baseline.fmr_targets[t] << std::fixed << '\n';
        os << std::left << std::setw(14) << "Attribute" << std::setw(14) << "Class" << std::right << std::setw(10)
           << "Baseline" << std::setw(10) << treated_name << std::setw(12) << "Change" << '\n';
        const double b = baseline.overall_fnmr[t].mean;
        const double o = treated.overall_fnmr[t].mean;
        os << std::left << std::setw(28) << "(overall)" << std::right << std::setw(10) << b << std::setw(10) << o
           << std::setw(12) << pct(performance_change(b, o)) << '\n';
        for (const auto& [key, cells] : baseline.per_class_fnmr) {
            auto it = treated.per_class_fnmr.find(key);
            if (it == treated.per_class_fnmr.end())
                continue;
            const double cb = cells[t].mean;
            const double co = it->second[t].mean;
            os << std::left << std::setw(14) << key.attribute << std::setw(14) << key.label << std::right
               << std::setw(10) << cb << std::setw(10) << co << std::setw(12) << pct(performance_change(cb, co))
               << '\n';
        }
        for (const auto& [attr, cells] : baseline.bias_std) {
            auto it = treated.bias_std.find(attr);
            if (it == treated.bias_std.end())
                continue;
            const double sb = cells[t].mean;
            const double so = it->second[t].mean;
            os << std::left << std::setw(14) << attr << std::setw(14) << "Bias (STD)" << std::right << std::setw(10)
               << sb << std::setw(10) << so << std::setw(12) << pct(bias_reduction(sb, so)) << '\n';
        }
        os << '\n';
    }
    return os.str();
}

std::string comparison_to_json(const AggregatedReport& baseline, const AggregatedReport& treated, int indent)
{
    using nlohmann::json;
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
    json changes = json::array();
    json reductions = json::object();
    for (std::size_t t = 0; t < baseline.fmr_targets.size(); ++t)
        changes.push_back(opt(performance_change(baseline.overall_fnmr[t].mean, treated.overall_fnmr[t].mean)));
    for (const auto& [attr, cells] : baseline.bias_std) {
        auto it = treated.bias_std.find(attr);
        if (it == treated.bias_std.end())
            continue;
        json arr = json::array();
        for (std::size_t t = 0; t < cells.size(); ++t)
            arr.push_back(opt(bias_reduction(cells[t].mean, it->second[t].mean)));
        reductions[attr] = std::move(arr);
    }
    json doc = {{"baseline", aggregated_json(baseline)},
                {"treated", aggregated_json(treated)},
                {"overall_performance_change_pct", std::move(changes)},
                {"bias_reduction_pct", std::move(reductions)}};
    return doc.dump(indent);
}

}  // namespace fairnorm
