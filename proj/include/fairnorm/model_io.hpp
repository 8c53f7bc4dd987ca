#pragma once

#include "fairnorm/normalization.hpp"

#include <filesystem>
#include <string>

namespace fairnorm {

inline constexpr int kModelFormatVersion = 1;

/// Versioned JSON document; doubles are written with round-trip precision.
std::string model_to_json(const FairNormModel& model);
FairNormModel model_from_json(const std::string& text);

void save_model(const FairNormModel& model, const std::filesystem::path& path);
FairNormModel load_model(const std::filesystem::path& path);

}  // namespace fairnorm
