#pragma once

// Randomized invariant checks shared by the unit test runner and the acceptance binary.
// Each suite draws `cases` independent inputs from its own seeded generator.

#include "oracles.hpp"

#include "fairnorm/baselines.hpp"
#include "fairnorm/clustering.hpp"
#include "fairnorm/experiment.hpp"
#include "fairnorm/metrics.hpp"
#include "fairnorm/model_io.hpp"
#include "fairnorm/normalization.hpp"
#include "fairnorm/pairs.hpp"
#include "fairnorm/synth.hpp"
#include "fairnorm/thresholds.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace props {

using Rng = std::mt19937_64;

struct SuiteResult {
    std::string name;
    int cases = 0;  ///< executed cases, excluding discarded draws
    int failures = 0;
    std::string first_failure;
};

/// Thrown by `expect` to abort the current case.
struct CaseFailure {
    std::string message;
};

inline void expect(bool ok, const std::string& what)
{
    if (!ok)
        throw CaseFailure{what};
}

/// Runs `body` until `cases` draws were accepted. A body returns false to discard a draw
/// whose input does not meet the property's precondition.
inline SuiteResult run_suite(const std::string& name, int cases, std::uint64_t seed,
                             const std::function<bool(Rng&)>& body)
{
    SuiteResult result{name, 0, 0, {}};
    Rng rng(seed);
    for (int attempt = 0; result.cases < cases && attempt < 20 * cases; ++attempt) {
        try {
            if (!body(rng))
                continue;
        } catch (const CaseFailure& f) {
            if (result.failures++ == 0)
                result.first_failure = "case " + std::to_string(result.cases) + ": " + f.message;
        } catch (const std::exception& e) {
            if (result.failures++ == 0)
                result.first_failure = "case " + std::to_string(result.cases) + ": unexpected exception: " + e.what();
        }
        ++result.cases;
    }
    return result;
}

// ---------------------------------------------------------------------------
// Generators

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline Eigen::VectorXd gaussian_vector(Rng& rng, int dim)
{
    std::normal_distribution<double> normal;
    Eigen::VectorXd v(dim);
    for (int d = 0; d < dim; ++d)
        v(d) = normal(rng);
    return v;
}

/// Impostor-like multiset with deliberate ties: values drawn from a small grid half the time.
inline std::vector<double> score_multiset(Rng& rng, int n)
{
    std::vector<double> values(static_cast<std::size_t>(n));
    const bool coarse = uniform_int(rng, 0, 1) == 0;
    const int levels = uniform_int(rng, 1, 12);
    for (auto& v : values)
        v = coarse ? uniform_int(rng, 0, levels) / static_cast<double>(levels) : uniform(rng, -1.0, 1.0);
    return values;
}

inline std::string random_token(Rng& rng)
{
    static const std::string alphabet = "abcXYZ019_-.:;|/\\\"'() \t#\xc3\xa9";
    const int len = uniform_int(rng, 1, 8);
    std::string s;
    for (int c = 0; c < len; ++c)
        s += alphabet[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(alphabet.size()) - 1))];
    // Keep tokens representable in CSV: no surrounding blanks and no leading comment marker.
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '#'))
        s.erase(0, 1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
        s.pop_back();
    return s.empty() ? "t" : s;
}

/// Finite float with an arbitrary bit pattern (covers subnormals, signed zero and extreme exponents).
inline float random_finite_float(Rng& rng)
{
    while (true) {
        const auto bits = static_cast<std::uint32_t>(rng());
        const float f = std::bit_cast<float>(bits);
        if (std::isfinite(f))
            return f;
    }
}

inline fairnorm::EmbeddingDataset random_serializable_dataset(Rng& rng)
{
    const int n = uniform_int(rng, 1, 12);
    const int dim = uniform_int(rng, 1, 6);
    const int n_attrs = uniform_int(rng, 0, 3);
    std::vector<std::string> attr_names;
    for (int a = 0; a < n_attrs; ++a)
        attr_names.push_back(random_token(rng) + std::to_string(a));
    std::vector<fairnorm::Sample> samples;
    fairnorm::EmbeddingMatrix m(n, dim);
    for (int r = 0; r < n; ++r) {
        fairnorm::Sample s{random_token(rng) + "_" + std::to_string(r), random_token(rng), {}};
        for (const auto& name : attr_names)
            if (uniform_int(rng, 0, 3) != 0)
                s.attributes[name] = random_token(rng);
        samples.push_back(std::move(s));
        for (int d = 0; d < dim; ++d)
            m(r, d) = uniform_int(rng, 0, 1) ? random_finite_float(rng) : static_cast<float>(uniform(rng, -1, 1));
    }
    return fairnorm::EmbeddingDataset(std::move(samples), std::move(m));
}

/// Random but internally consistent model: deltas come from arbitrary local thresholds.
inline fairnorm::FairNormModel random_model(Rng& rng, int k, int dim)
{
    fairnorm::FairNormModel model;
    model.clusters.centroids.resize(k, dim);
    for (int c = 0; c < k; ++c)
        model.clusters.centroids.row(c) = gaussian_vector(rng, dim).normalized().transpose();
    model.clusters.seed = rng();
    model.clusters.iterations_run = uniform_int(rng, 1, 300);
    model.clusters.converged = uniform_int(rng, 0, 1) == 1;
    model.thresholds.fmr_target = std::pow(10.0, -uniform(rng, 0.5, 6.0));
    model.thresholds.global_thr = uniform(rng, -1.0, 1.0);
    model.thresholds.min_impostor_count = uniform_int(rng, 1, 100000);
    for (int c = 0; c < k; ++c) {
        const bool fallback = uniform_int(rng, 0, 3) == 0;
        model.thresholds.fallback.push_back(fallback);
        model.thresholds.local.push_back(fallback ? model.thresholds.global_thr : uniform(rng, -1.0, 1.0));
    }
    return model;
}

inline fairnorm::EmbeddingDataset random_population(Rng& rng, int max_subjects = 12, int max_per_subject = 4,
                                                    int max_dim = 6)
{
    return oracle::random_dataset(rng, uniform_int(rng, 2, max_subjects), max_per_subject,
                                  uniform_int(rng, 2, max_dim));
}

// ---------------------------------------------------------------------------
// Suites

inline std::vector<SuiteResult> run_all(int cases)
{
    using namespace fairnorm;
    std::vector<SuiteResult> out;

    out.push_back(run_suite("cosine symmetry and range", cases, 101, [](Rng& rng) -> bool {
        const int dim = uniform_int(rng, 1, 32);
        const auto a = gaussian_vector(rng, dim);
        const auto b = uniform_int(rng, 0, 4) == 0 ? Eigen::VectorXd(a * uniform(rng, 0.1, 10)) : gaussian_vector(rng, dim);
        const double ab = cosine_similarity(a, b);
        expect(ab == cosine_similarity(b, a), "cosine(a,b) != cosine(b,a)");
        expect(ab >= -1.0 && ab <= 1.0, "cosine outside [-1,1]");
        return true;
    }));

    out.push_back(run_suite("cosine scale invariance", cases, 102, [](Rng& rng) -> bool {
        const int dim = uniform_int(rng, 1, 32);
        const auto a = gaussian_vector(rng, dim);
        const auto b = gaussian_vector(rng, dim);
        const double lambda = std::pow(10.0, uniform(rng, -3.0, 3.0));
        expect(std::abs(cosine_similarity(Eigen::VectorXd(lambda * a), b) - cosine_similarity(a, b)) <= 1e-9,
               "scaling changed the cosine by more than 1e-9");
        return true;
    }));

    out.push_back(run_suite("pair enumeration and cluster sets vs brute force", cases, 103, [](Rng& rng) -> bool {
        const auto ds = random_population(rng, 15, 4, 4);
        const int k = uniform_int(rng, 1, 5);
        const auto pairs = score_all_pairs(ds, uniform_int(rng, 1, 4));
        const std::size_t n = ds.size();
        expect(pairs.size() == n * (n - 1) / 2, "pair count != C(n,2)");
        std::vector<int> assignment(n), subject(n);
        std::vector<std::vector<double>> scores(n, std::vector<double>(n));
        for (std::size_t i = 0; i < n; ++i) {
            assignment[i] = uniform_int(rng, 0, k - 1);
            subject[i] = ds.subject_index(i);
        }
        std::size_t intra = 0, cross = 0;
        for (const auto& p : pairs) {
            scores[p.i][p.j] = p.raw_score;
            expect(p.genuine == (subject[p.i] == subject[p.j]), "genuine flag mismatch");
            (assignment[p.i] == assignment[p.j] ? intra : cross) += 1;
        }
        const auto expected = oracle::cluster_sets(assignment, subject, scores, k);
        const auto sets = collect_cluster_score_sets(pairs, assignment, k);
        std::size_t total = 0;
        for (int c = 0; c < k; ++c) {
            auto gen = sets[static_cast<std::size_t>(c)].genuine_scores;
            auto imp = sets[static_cast<std::size_t>(c)].impostor_scores;
            std::sort(gen.begin(), gen.end());
            std::sort(imp.begin(), imp.end());
            expect(gen == expected.genuine[static_cast<std::size_t>(c)], "genuine set differs from brute force");
            expect(imp == expected.impostor[static_cast<std::size_t>(c)], "impostor set differs from brute force");
            total += gen.size() + imp.size();
        }
        expect(total == intra + 2 * cross, "cross-cluster pairs not counted twice");
        return true;
    }));

    out.push_back(run_suite("threshold oracle, achievement and minimality", cases, 104, [](Rng& rng) -> bool {
        const auto scores = score_multiset(rng, uniform_int(rng, 1, 200));
        const double f = std::pow(10.0, -uniform(rng, 0.0, 3.0)) * 0.999;
        const double t = threshold_at_fmr(scores, f);
        expect(t == oracle::threshold(scores, f), "threshold differs from brute-force scan");
        expect(oracle::fmr(scores, t) <= f, "achieved FMR above target");
        for (double s : scores)
            if (s < t)
                expect(oracle::fmr(scores, s) > f, "a smaller score value also achieves the target");
        const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
        expect(t >= *lo && t <= std::nextafter(*hi, std::numeric_limits<double>::infinity()),
               "threshold outside [min, sentinel]");
        return true;
    }));

    out.push_back(run_suite("threshold monotone in the FMR target", cases, 105, [](Rng& rng) -> bool {
        const auto scores = score_multiset(rng, uniform_int(rng, 1, 300));
        double f1 = uniform(rng, 1e-4, 0.999), f2 = uniform(rng, 1e-4, 0.999);
        if (f1 > f2)
            std::swap(f1, f2);
        if (f1 == f2)
            return false;
        expect(threshold_at_fmr(scores, f1) >= threshold_at_fmr(scores, f2), "f1 < f2 but t(f1) < t(f2)");
        return true;
    }));

    out.push_back(run_suite("fnmr non-decreasing in t and equal to a count", cases, 106, [](Rng& rng) -> bool {
        const auto genuine = score_multiset(rng, uniform_int(rng, 1, 300));
        double t1 = uniform(rng, -1.2, 1.2), t2 = uniform(rng, -1.2, 1.2);
        if (uniform_int(rng, 0, 1))
            t1 = genuine[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(genuine.size()) - 1))];
        if (t1 > t2)
            std::swap(t1, t2);
        expect(fnmr_at_threshold(genuine, t1) <= fnmr_at_threshold(genuine, t2), "fnmr decreased as t grew");
        expect(fnmr_at_threshold(genuine, t1) == oracle::fnmr(genuine, t1), "fnmr differs from count");
        return true;
    }));

    out.push_back(run_suite("k-means determinism, nearest-centroid and inertia", cases, 107, [](Rng& rng) -> bool {
        const int n = uniform_int(rng, 4, 30);
        const int dim = uniform_int(rng, 2, 5);
        EmbeddingMatrixT<double> data(n, dim);
        for (int r = 0; r < n; ++r)
            data.row(r) = gaussian_vector(rng, dim).transpose();
        KMeansOptions options;
        options.k = uniform_int(rng, 1, std::min(n, 5));
        options.seed = rng();
        options.max_iters = uniform_int(rng, 1, 50);
        const auto a = fit_kmeans(data, options);
        options.workers = uniform_int(rng, 2, 4);
        const auto b = fit_kmeans(data, options);
        expect(a.centroids == b.centroids && a.inertia_history == b.inertia_history,
               "same inputs gave different centroids");
        for (std::size_t t = 1; t < a.inertia_history.size(); ++t)
            expect(a.inertia_history[t] <= a.inertia_history[t - 1] * (1 + 1e-12) + 1e-15,
                   "inertia increased between iterations");
        const auto unit = l2_normalize_rows(data);
        std::vector<int> used(static_cast<std::size_t>(a.k()), 0);
        for (Eigen::Index r = 0; r < n; ++r) {
            const int c = nearest_centroid(a, &unit(r, 0));
            used[static_cast<std::size_t>(c)] = 1;
            expect(oracle::nearest_is(a.centroids, c, unit, r), "sample closer to another centroid");
            const double lambda = std::pow(10.0, uniform(rng, -2.0, 2.0));
            expect(assign(a, Eigen::RowVectorXd(lambda * data.row(r))) == assign(a, data.row(r)),
                   "assign not scale invariant");
        }
        expect(std::find(used.begin(), used.end(), 0) == used.end(), "a cluster has no training sample");
        return true;
    }));

    out.push_back(run_suite("worker-count independence", cases, 108, [](Rng& rng) -> bool {
        const auto ds = random_population(rng, 16, 4, 5);
        const int w = uniform_int(rng, 2, 6);
        const auto pairs = score_all_pairs(ds, 1);
        expect(score_all_pairs(ds, w) == pairs, "pair scores depend on worker count");
        const auto model = random_model(rng, uniform_int(rng, 1, 4), static_cast<int>(ds.dim()));
        expect(assign_all(model.clusters, ds.vectors(), 1) == assign_all(model.clusters, ds.vectors(), w),
               "assignments depend on worker count");
        auto one = pairs, many = pairs;
        normalize_pairs(model, ds, one, 1);
        normalize_pairs(model, ds, many, w);
        expect(one == many, "normalized scores depend on worker count");
        bool has_gen = false, has_imp = false;
        for (const auto& p : pairs)
            (p.genuine ? has_gen : has_imp) = true;
        if (has_gen && has_imp) {
            const std::vector<double> targets{0.1, 0.01};
            expect(evaluate(one, ds, targets, ScoreField::normalized, std::nullopt, 1) ==
                       evaluate(one, ds, targets, ScoreField::normalized, std::nullopt, w),
                   "evaluation depends on worker count");
        }
        return true;
    }));

    out.push_back(run_suite("dataset csv and binary round-trip", cases, 109, [](Rng& rng) -> bool {
        const auto ds = random_serializable_dataset(rng);
        std::stringstream csv, bin;
        write_csv_dataset(ds, csv);
        write_binary_dataset(ds, bin);
        expect(read_csv_dataset(csv) == ds, "csv round-trip changed the dataset");
        expect(read_binary_dataset(bin) == ds, "binary round-trip changed the dataset");
        return true;
    }));

    out.push_back(run_suite("model json round-trip", cases, 110, [](Rng& rng) -> bool {
        const auto model = random_model(rng, uniform_int(rng, 1, 6), uniform_int(rng, 1, 8));
        const auto back = model_from_json(model_to_json(model));
        expect(back.clusters.centroids == model.clusters.centroids, "centroids changed");
        expect(back.thresholds.local == model.thresholds.local, "local thresholds changed");
        expect(back.thresholds.global_thr == model.thresholds.global_thr, "global threshold changed");
        expect(back.thresholds.fallback == model.thresholds.fallback, "fallback flags changed");
        expect(back.thresholds.fmr_target == model.thresholds.fmr_target, "fmr target changed");
        expect(back.thresholds.min_impostor_count == model.thresholds.min_impostor_count, "min count changed");
        expect(back.clusters.seed == model.clusters.seed, "seed changed");
        expect(back.k() == model.k() && back.dim() == model.dim(), "shape changed");
        return true;
    }));

    out.push_back(run_suite("normalization symmetry and affine shift", cases, 111, [](Rng& rng) -> bool {
        const int dim = uniform_int(rng, 2, 8);
        const auto model = random_model(rng, uniform_int(rng, 1, 6), dim);
        const auto a = gaussian_vector(rng, dim), b = gaussian_vector(rng, dim);
        const double s1 = uniform(rng, -1, 1), s2 = uniform(rng, -1, 1);
        expect(normalize_score(model, s1, a, b) == normalize_score(model, s1, b, a), "normalization not symmetric");
        const double h1 = normalize_score(model, s1, a, b), h2 = normalize_score(model, s2, a, b);
        expect(std::abs((h1 - s1) - (h2 - s2)) <= 1e-12, "shift depends on the raw score");
        expect((s1 < s2) <= (h1 <= h2), "ordering within a cluster pair changed");
        const Eigen::VectorXd scaled = uniform(rng, 0.01, 100.0) * a;
        expect(normalize_score(model, s1, scaled, b) == h1, "normalization depends on the vector scale");
        return true;
    }));

    out.push_back(run_suite("normalized rule equals shifted raw threshold rule", cases, 112, [](Rng& rng) -> bool {
        // Exact on dyadic inputs; on arbitrary reals both forms agree away from the rounding boundary.
        const bool dyadic = uniform_int(rng, 0, 1) == 0;
        auto draw = [&] { return dyadic ? uniform_int(rng, -256, 256) / 256.0 : uniform(rng, -1, 1); };
        const double s = draw(), thr_g = draw(), di = draw() / 2, dj = draw() / 2;
        const double s_hat = normalize_with_deltas(s, di, dj);
        const bool normalized = decide_at(s_hat, thr_g) == Decision::match;
        const bool shifted = decide_at(s, thr_g + 0.5 * (di + dj)) == Decision::match;
        if (dyadic || std::abs(s_hat - thr_g) > 1e-12)
            expect(normalized == shifted, "the two decision forms disagree");
        return true;
    }));

    out.push_back(run_suite("single-cluster model is the identity", cases, 113, [](Rng& rng) -> bool {
        const auto ds = random_population(rng, 8, 3, 4);
        auto model = random_model(rng, 1, static_cast<int>(ds.dim()));
        model.thresholds.local[0] = model.thresholds.global_thr;
        auto pairs = score_all_pairs(ds);
        normalize_pairs(model, ds, pairs);
        for (const auto& p : pairs) {
            expect(*p.normalized_score == p.raw_score, "k=1 changed a score");
            expect(decide_at(*p.normalized_score, model.thresholds.global_thr) ==
                       baseline_decide(p.raw_score, model.thresholds.global_thr),
                   "k=1 changed a decision");
        }
        return true;
    }));

    out.push_back(run_suite("fitted single-cluster model reproduces the raw report", cases, 114,
                            [](Rng& rng) -> bool {
        const auto ds = random_population(rng, 10, 3, 4);
        FairFitOptions options;
        options.kmeans.k = 1;
        options.kmeans.seed = rng();
        options.fmr_target = uniform(rng, 0.01, 0.5);
        const auto train = TrainSplit::whole(ds);
        const auto model = fit_fair_model(train, options);
        auto pairs = score_all_pairs(ds);
        normalize_pairs(model, ds, pairs);
        bool has_gen = false;
        for (const auto& p : pairs)
            has_gen = has_gen || p.genuine;
        if (!has_gen)
            return false;
        const std::vector<double> targets{options.fmr_target};
        auto normalized = evaluate(pairs, ds, targets, ScoreField::normalized);
        expect(normalized == evaluate(pairs, ds, targets, ScoreField::raw), "k=1 report differs from raw report");
        return true;
    }));

    out.push_back(run_suite("bias std ordering and duplication", cases, 115, [](Rng& rng) -> bool {
        const int n = uniform_int(rng, 1, 10);
        std::vector<double> fnmr(static_cast<std::size_t>(n));
        for (auto& v : fnmr)
            v = uniform(rng, 0, 1);
        const double base = population_std(fnmr);
        expect(base >= 0.0, "negative std");
        auto shuffled = fnmr;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        expect(std::abs(population_std(shuffled) - base) <= 1e-12, "std depends on class order");
        double mean = 0.0;
        for (double v : fnmr)
            mean += v;
        mean /= n;
        auto with_mean = fnmr;
        with_mean.push_back(mean);
        expect(population_std(with_mean) <= base + 1e-12, "adding a class at the mean FNMR raised the std");
        auto doubled = fnmr;
        doubled.insert(doubled.end(), fnmr.begin(), fnmr.end());
        expect(std::abs(population_std(doubled) - base) <= 1e-12, "duplicating every class changed the std");
        return true;
    }));

    out.push_back(run_suite("evaluation counts are consistent", cases, 116, [](Rng& rng) -> bool {
        const auto ds = random_population(rng, 10, 4, 3);
        const auto pairs = score_all_pairs(ds);
        std::size_t gen = 0;
        for (const auto& p : pairs)
            gen += p.genuine ? 1 : 0;
        if (gen == 0 || gen == pairs.size())
            return false;
        const std::vector<double> targets{uniform(rng, 0.01, 0.9)};
        const auto report = evaluate(pairs, ds, targets, ScoreField::raw);
        expect(report.genuine_count + report.impostor_count == pairs.size(), "counts do not cover all pairs");
        expect(std::abs(report.overall_fnmr[0] - static_cast<double>(report.overall_misses[0]) /
                                                     static_cast<double>(report.genuine_count)) <= 1e-12,
               "overall FNMR not recomputable from counts");
        expect(report.overall_fmr[0] <= targets[0], "evaluation threshold misses the FMR target");
        for (const auto& [key, values] : report.per_class_fnmr) {
            expect(report.pair_counts.at(key).genuine >= 1, "class without genuine pairs reported");
            expect(values[0] >= 0.0 && values[0] <= 1.0, "FNMR outside [0,1]");
        }
        return true;
    }));

    out.push_back(run_suite("subject-disjoint folds partition the subjects", cases, 117, [](Rng& rng) -> bool {
        const int subjects = uniform_int(rng, 2, 40);
        const int folds = uniform_int(rng, 2, subjects);
        std::vector<Sample> samples;
        for (int s = 0; s < subjects; ++s)
            for (int r = uniform_int(rng, 1, 3); r > 0; --r)
                samples.push_back({"x" + std::to_string(samples.size()), "s" + std::to_string(s), {}});
        const auto n = static_cast<Eigen::Index>(samples.size());
        const EmbeddingDataset ds(std::move(samples), EmbeddingMatrix::Ones(n, 1));
        const auto seed = rng();
        const auto splits = make_subject_disjoint_folds(ds, folds, seed);
        const auto again = make_subject_disjoint_folds(ds, folds, seed);
        std::multiset<std::string> tested;
        std::size_t smallest = ds.subject_count(), largest = 0;
        for (std::size_t f = 0; f < splits.size(); ++f) {
            const auto& split = splits[f];
            expect(split.test_subject_ids == again[f].test_subject_ids, "folds not deterministic");
            std::set<std::string> train(split.train_subject_ids.begin(), split.train_subject_ids.end());
            for (const auto& t : split.test_subject_ids)
                expect(train.count(t) == 0, "subject in both train and test");
            expect(train.size() + split.test_subject_ids.size() == ds.subject_count(), "split misses subjects");
            tested.insert(split.test_subject_ids.begin(), split.test_subject_ids.end());
            smallest = std::min(smallest, split.test_subject_ids.size());
            largest = std::max(largest, split.test_subject_ids.size());
        }
        expect(tested.size() == ds.subject_count() &&
                   std::set<std::string>(tested.begin(), tested.end()).size() == ds.subject_count(),
               "a subject is not tested exactly once");
        expect(largest - smallest <= 1, "fold sizes differ by more than one");
        return true;
    }));

    out.push_back(run_suite("synthetic data is deterministic and unit-norm", cases, 118, [](Rng& rng) -> bool {
        SynthConfig config;
        config.dim = uniform_int(rng, 2, 12);
        config.n_groups = uniform_int(rng, 1, std::min(config.dim, 3));
        config.subjects_per_group = uniform_int(rng, 1, 4);
        config.samples_per_subject = uniform_int(rng, 1, 3);
        config.intra_noise.clear();
        for (int g = 0; g < config.n_groups; ++g)
            config.intra_noise.push_back(uniform(rng, 0.01, 1.0));
        config.group_dispersion = uniform(rng, 0.01, 1.0);
        config.seed = rng();
        const auto ds = generate(config);
        expect(ds == generate(config), "same seed produced different data");
        expect(ds.size() == static_cast<std::size_t>(config.n_groups * config.subjects_per_group *
                                                     config.samples_per_subject),
               "wrong sample count");
        for (std::size_t i = 0; i < ds.size(); ++i)
            expect(std::abs(ds.vector(i).cast<double>().norm() - 1.0) <= 1e-6, "vector not unit-norm");
        return true;
    }));

    out.push_back(run_suite("fusion strictly increasing in each score", cases, 119, [](Rng& rng) -> bool {
        const int systems = uniform_int(rng, 2, 4);
        std::vector<MinMaxStats> stats;
        std::vector<double> scores;
        for (int s = 0; s < systems; ++s) {
            const double lo = uniform(rng, -1, 0.5);
            stats.push_back({lo, lo + uniform(rng, 0.01, 1)});
            scores.push_back(uniform(rng, -1, 1));
        }
        const auto which = static_cast<std::size_t>(uniform_int(rng, 0, systems - 1));
        auto higher = scores;
        higher[which] += uniform(rng, 1e-6, 0.5);
        expect(slf_fuse(higher, stats) > slf_fuse(scores, stats), "fusion not strictly increasing");
        return true;
    }));

    out.push_back(run_suite("fold aggregation mean", cases, 120, [](Rng& rng) -> bool {
        std::vector<double> values(static_cast<std::size_t>(uniform_int(rng, 1, 10)));
        for (auto& v : values)
            v = uniform(rng, 0, 1);
        const auto cell = summarize(values);
        double mean = 0.0;
        for (double v : values)
            mean += v;
        mean /= static_cast<double>(values.size());
        expect(std::abs(cell.mean - mean) <= 1e-12, "aggregated mean differs");
        expect(cell.std_sample >= cell.std_population - 1e-15, "sample std below population std");
        return true;
    }));

    return out;
}

}  // namespace props
