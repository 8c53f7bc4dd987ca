#include "fairnorm/metrics.hpp"

#include "fairnorm/error.hpp"
#include "fairnorm/thresholds.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>
#include <thread>

namespace fairnorm {

ScoreField parse_score_field(const std::string& name)
{
    if (name == "raw")
        return ScoreField::raw;
    if (name == "normalized")
        return ScoreField::normalized;
    throw UsageError("unknown score field '" + name + "' (expected raw or normalized)");
}

bool EvalReport::low_reliability(const ClassKey& key) const
{
    auto it = pair_counts.find(key);
    return it == pair_counts.end() || it->second.genuine < kMinReliableGenuinePairs;
}

double field_score(const ScorePair& pair, ScoreField field)
{
    if (field == ScoreField::raw)
        return pair.raw_score;
    if (!pair.normalized_score)
        throw UsageError("pair (" + std::to_string(pair.i) + "," + std::to_string(pair.j) +
                         ") has no normalized score");
    return *pair.normalized_score;
}

namespace {

struct ClassIndex {
    std::vector<ClassKey> keys;
    std::vector<std::vector<int>> of_sample;  // class ids per sample, one per attribute it carries
};

ClassIndex index_classes(const EmbeddingDataset& dataset)
{
    std::map<ClassKey, int> ids;
    for (const auto& s : dataset.samples())
        for (const auto& [attr, label] : s.attributes)
            ids.emplace(ClassKey{attr, label}, 0);
    ClassIndex index;
    for (auto& [key, id] : ids) {
        id = static_cast<int>(index.keys.size());
        index.keys.push_back(key);
    }
    index.of_sample.reserve(dataset.size());
    for (const auto& s : dataset.samples()) {
        std::vector<int> classes;
        for (const auto& [attr, label] : s.attributes)
            classes.push_back(ids.at(ClassKey{attr, label}));
        index.of_sample.push_back(std::move(classes));
    }
    return index;
}

struct Tally {
    std::size_t targets = 0;
    std::vector<std::size_t> genuine, impostor;
    std::vector<std::size_t> misses;  // class-major, target-minor
    std::size_t total_genuine = 0, total_impostor = 0;
    std::vector<std::size_t> total_misses, total_false_matches;

    Tally(std::size_t n_classes, std::size_t n_targets)
        : targets(n_targets), genuine(n_classes), impostor(n_classes), misses(n_classes * n_targets),
          total_misses(n_targets), total_false_matches(n_targets)
    {
    }

    void merge(const Tally& o)
    {
        auto add = [](std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
            for (std::size_t x = 0; x < a.size(); ++x)
                a[x] += b[x];
        };
        add(genuine, o.genuine);
        add(impostor, o.impostor);
        add(misses, o.misses);
        add(total_misses, o.total_misses);
        add(total_false_matches, o.total_false_matches);
        total_genuine += o.total_genuine;
        total_impostor += o.total_impostor;
    }
};

void tally_range(Tally& t, std::span<const ScorePair> pairs, std::span<const double> scores,
                 std::span<const double> thresholds, const ClassIndex& classes, std::size_t lo, std::size_t hi)
{
    std::vector<int> touched;
    for (std::size_t p = lo; p < hi; ++p) {
        const auto& pair = pairs[p];
        const double s = scores[p];
        touched = classes.of_sample[pair.i];
        for (int c : classes.of_sample[pair.j])
            if (std::find(touched.begin(), touched.end(), c) == touched.end())
                touched.push_back(c);

        if (pair.genuine) {
            ++t.total_genuine;
            for (std::size_t f = 0; f < t.targets; ++f)
                if (s < thresholds[f])
                    ++t.total_misses[f];
        } else {
            ++t.total_impostor;
            for (std::size_t f = 0; f < t.targets; ++f)
                if (s >= thresholds[f])
                    ++t.total_false_matches[f];
        }
        for (int c : touched) {
            const auto cu = static_cast<std::size_t>(c);
            if (pair.genuine) {
                ++t.genuine[cu];
                for (std::size_t f = 0; f < t.targets; ++f)
                    if (s < thresholds[f])
                        ++t.misses[cu * t.targets + f];
            } else {
                ++t.impostor[cu];
            }
        }
    }
}

}  // namespace

EvalReport evaluate(std::span<const ScorePair> pairs, const EmbeddingDataset& dataset,
                    std::span<const double> fmr_targets, ScoreField field,
                    std::optional<std::vector<double>> fixed_thresholds, int workers)
{
    if (fmr_targets.empty())
        throw UsageError("evaluate: at least one FMR target is required");
    if (fixed_thresholds && fixed_thresholds->size() != fmr_targets.size())
        throw UsageError("evaluate: need one fixed threshold per FMR target");

    std::vector<double> scores;
    std::vector<double> impostors;
    scores.reserve(pairs.size());
    std::size_t genuine = 0;
    for (const auto& p : pairs) {
        if (p.i >= dataset.size() || p.j >= dataset.size())
            throw DataError("evaluate: pair references a sample outside the dataset");
        scores.push_back(field_score(p, field));
        if (p.genuine)
            ++genuine;
        else
            impostors.push_back(scores.back());
    }
    if (impostors.empty())
        throw NumericError("evaluate: no impostor pairs");
    if (genuine == 0)
        throw NumericError("evaluate: no genuine pairs");

    EvalReport report;
    report.fmr_targets.assign(fmr_targets.begin(), fmr_targets.end());
    if (fixed_thresholds) {
        report.thresholds = *fixed_thresholds;
    } else {
        for (double f : fmr_targets)
            report.thresholds.push_back(threshold_at_fmr(impostors, f));
    }

    const auto classes = index_classes(dataset);
    const std::size_t n_targets = fmr_targets.size();
    const auto w = std::clamp<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), 1,
                                           std::max<std::size_t>(pairs.size() / 4096, 1));
    std::vector<Tally> tallies(w, Tally(classes.keys.size(), n_targets));
    if (w == 1) {
        tally_range(tallies[0], pairs, scores, report.thresholds, classes, 0, pairs.size());
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < w; ++t)
            pool.emplace_back([&, t] {
                tally_range(tallies[t], pairs, scores, report.thresholds, classes, pairs.size() * t / w,
                            pairs.size() * (t + 1) / w);
            });
    }
    for (std::size_t t = 1; t < w; ++t)
        tallies[0].merge(tallies[t]);
    const Tally& tally = tallies[0];

    report.genuine_count = tally.total_genuine;
    report.impostor_count = tally.total_impostor;
    report.overall_misses = tally.total_misses;
    for (std::size_t f = 0; f < n_targets; ++f) {
        report.overall_fnmr.push_back(static_cast<double>(tally.total_misses[f]) /
                                      static_cast<double>(tally.total_genuine));
        report.overall_fmr.push_back(static_cast<double>(tally.total_false_matches[f]) /
                                     static_cast<double>(tally.total_impostor));
    }

    std::map<std::string, std::vector<std::vector<double>>> by_attribute;
    for (std::size_t c = 0; c < classes.keys.size(); ++c) {
        const auto& key = classes.keys[c];
        report.pair_counts[key] = ClassCounts{tally.genuine[c], tally.impostor[c]};
        if (tally.genuine[c] == 0)
            continue;
        std::vector<std::size_t> misses(tally.misses.begin() + static_cast<std::ptrdiff_t>(c * n_targets),
                                        tally.misses.begin() + static_cast<std::ptrdiff_t>((c + 1) * n_targets));
        std::vector<double> fnmr;
        for (auto m : misses)
            fnmr.push_back(static_cast<double>(m) / static_cast<double>(tally.genuine[c]));
        auto& per_attr = by_attribute[key.attribute];
        per_attr.resize(n_targets);
        for (std::size_t f = 0; f < n_targets; ++f)
            per_attr[f].push_back(fnmr[f]);
        report.per_class_misses[key] = std::move(misses);
        report.per_class_fnmr[key] = std::move(fnmr);
    }
    for (const auto& [attr, columns] : by_attribute) {
        std::vector<double> stds;
        for (const auto& column : columns)
            stds.push_back(population_std(column));
        report.bias_std[attr] = std::move(stds);
    }
    return report;
}

double population_std(std::span<const double> values)
{
    if (values.empty())
        throw NumericError("standard deviation of an empty set");
    double mean = 0.0;
    for (double v : values)
        mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values)
        ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size()));
}

double sample_std(std::span<const double> values)
{
    if (values.size() < 2)
        return 0.0;
    double mean = 0.0;
    for (double v : values)
        mean += v;
    mean /= static_cast<double>(values.size());
    double ss = 0.0;
    for (double v : values)
        ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(values.size() - 1));
}

std::optional<double> bias_reduction(double baseline_std, double treated_std)
{
    if (!(baseline_std > 0.0))
        return std::nullopt;
    return 100.0 * (baseline_std - treated_std) / baseline_std;
}

std::optional<double> performance_change(double baseline_fnmr, double treated_fnmr)
{
    if (!(baseline_fnmr > 0.0))
        return std::nullopt;
    return 100.0 * (baseline_fnmr - treated_fnmr) / baseline_fnmr;
}

std::string report_to_json(const EvalReport& report, int indent)
{
    using nlohmann::json;
    json classes = json::array();
    for (const auto& [key, counts] : report.pair_counts) {
        json entry = {{"attribute", key.attribute},
                      {"class", key.label},
                      {"genuine_pairs", counts.genuine},
                      {"impostor_pairs", counts.impostor},
                      {"low_reliability", report.low_reliability(key)}};
        if (auto it = report.per_class_fnmr.find(key); it != report.per_class_fnmr.end())
            entry["fnmr"] = it->second;
        classes.push_back(std::move(entry));
    }
    json doc = {{"fmr_targets", report.fmr_targets},
                {"thresholds", report.thresholds},
                {"overall_fnmr", report.overall_fnmr},
                {"overall_fmr", report.overall_fmr},
                {"genuine_pairs", report.genuine_count},
                {"impostor_pairs", report.impostor_count},
                {"classes", std::move(classes)},
                {"bias_std", report.bias_std}};
    return doc.dump(indent);
}

namespace {

std::string fmr_label(double f)
{
    std::ostringstream os;
    os << "FNMR@" << std::setprecision(3) << f;
    return os.str();
}

}  // namespace

std::string format_report(const EvalReport& report)
{
    std::ostringstream os;
    os << std::fixed << std::setprecision(4);
    os << std::left << std::setw(14) << "Attribute" << std::setw(14) << "Class" << std::right << std::setw(9)
       << "Genuine";
    for (double f : report.fmr_targets)
        os << std::setw(14) << fmr_label(f);
    os << '\n';
    os << std::left << std::setw(14) << "(overall)" << std::setw(14) << "" << std::right << std::setw(9)
       << report.genuine_count;
    for (double v : report.overall_fnmr)
        os << std::setw(14) << v;
    os << '\n';
    for (const auto& [key, fnmr] : report.per_class_fnmr) {
        os << std::left << std::setw(14) << key.attribute << std::setw(14)
           << (key.label + (report.low_reliability(key) ? "*" : "")) << std::right << std::setw(9)
           << report.pair_counts.at(key).genuine;
        for (double v : fnmr)
            os << std::setw(14) << v;
        os << '\n';
    }
    for (const auto& [attr, stds] : report.bias_std) {
        os << std::left << std::setw(14) << attr << std::setw(14) << "Bias (STD)" << std::right << std::setw(9)
           << "";
        for (double v : stds)
            os << std::setw(14) << v;
        os << '\n';
    }
    os << std::left << std::setw(37) << "threshold";
    os << std::right;
    for (double t : report.thresholds)
        os << std::setw(14) << t;
    os << '\n';
    if (std::any_of(report.pair_counts.begin(), report.pair_counts.end(),
                    [&](const auto& kv) { return report.low_reliability(kv.first); }))
        os << "* fewer than " << kMinReliableGenuinePairs << " genuine pairs\n";
    return os.str();
}

}  // namespace fairnorm
