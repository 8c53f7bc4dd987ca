#include "fairnorm/model_io.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

namespace fairnorm {

using nlohmann::json;

std::string model_to_json(const FairNormModel& model)
{
    validate(model);
    json centroids = json::array();
    for (Eigen::Index c = 0; c < model.clusters.centroids.rows(); ++c) {
        json row = json::array();
        for (Eigen::Index d = 0; d < model.clusters.centroids.cols(); ++d)
            row.push_back(model.clusters.centroids(c, d));
        centroids.push_back(std::move(row));
    }
    json fallback = json::array();
    for (bool f : model.thresholds.fallback)
        fallback.push_back(f);

    json doc = {
        {"format_version", kModelFormatVersion},
        {"k", model.k()},
        {"dim", model.dim()},
        {"fmr_target", model.thresholds.fmr_target},
        {"centroids", std::move(centroids)},
        {"local_thresholds", model.thresholds.local},
        {"global_threshold", model.thresholds.global_thr},
        {"fallback_flags", std::move(fallback)},
        {"min_impostor_count", model.thresholds.min_impostor_count},
        {"seed", model.clusters.seed},
        {"iterations_run", model.clusters.iterations_run},
        {"converged", model.clusters.converged},
        {"embedding_normalized", model.embedding_normalized},
    };
    return doc.dump(2);
}

FairNormModel model_from_json(const std::string& text)
{
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        throw DataError(std::string("corrupted model file: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("format_version"))
        throw DataError("corrupted model file: missing format_version");
    if (!doc["format_version"].is_number_integer() || doc["format_version"].get<int>() != kModelFormatVersion)
        throw DataError("unsupported model format_version " + doc["format_version"].dump() + " (expected " +
                        std::to_string(kModelFormatVersion) + ")");

    FairNormModel model;
    try {
        const int k = doc.at("k").get<int>();
        const Eigen::Index dim = doc.at("dim").get<Eigen::Index>();
        const auto& rows = doc.at("centroids");
        if (k < 1 || dim < 1 || !rows.is_array() || rows.size() != static_cast<std::size_t>(k))
            throw DataError("corrupted model file: centroid table does not match k");
        model.clusters.centroids.resize(k, dim);
        for (int c = 0; c < k; ++c) {
            const auto& row = rows.at(static_cast<std::size_t>(c));
            if (!row.is_array() || row.size() != static_cast<std::size_t>(dim))
                throw DataError("corrupted model file: centroid " + std::to_string(c) + " does not match dim");
            for (Eigen::Index d = 0; d < dim; ++d)
                model.clusters.centroids(c, d) = row.at(static_cast<std::size_t>(d)).get<double>();
        }
        model.clusters.seed = doc.at("seed").get<std::uint64_t>();
        model.clusters.iterations_run = doc.value("iterations_run", 0);
        model.clusters.converged = doc.value("converged", false);
        model.thresholds.fmr_target = doc.at("fmr_target").get<double>();
        model.thresholds.local = doc.at("local_thresholds").get<std::vector<double>>();
        model.thresholds.global_thr = doc.at("global_threshold").get<double>();
        model.thresholds.fallback = doc.at("fallback_flags").get<std::vector<bool>>();
        model.thresholds.min_impostor_count =
            doc.value("min_impostor_count", default_min_impostor_count(model.thresholds.fmr_target));
        model.embedding_normalized = doc.at("embedding_normalized").get<bool>();
    } catch (const json::exception& e) {
        throw DataError(std::string("corrupted model file: ") + e.what());
    }
    validate(model);
    return model;
}

void save_model(const FairNormModel& model, const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out)
        throw DataError("cannot open '" + path.string() + "' for writing");
    out << model_to_json(model) << '\n';
    if (!out)
        throw DataError("write failed for '" + path.string() + "'");
}

FairNormModel load_model(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw DataError("cannot open model file '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return model_from_json(buf.str());
    } catch (const Error& e) {
        rethrow_with_context(e, path.string());
    }
}

}  // namespace fairnorm
