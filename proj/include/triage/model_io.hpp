#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "triage/classifiers.hpp"
#include "triage/features.hpp"

namespace triage {

/// A trained model together with the feature schema its rows were encoded
/// with. Serialized as versioned JSON tagged with the schema fingerprint.
struct ModelFile {
  Model model;
  FeatureSchema schema;

  friend bool operator==(const ModelFile&, const ModelFile&) = default;
};

inline constexpr int kModelFormatVersion = 1;

std::string serialize_model(const ModelFile& file);
ModelFile parse_model(std::string_view text);  // throws Error{format}

void save_model(const std::filesystem::path& path, const ModelFile& file);
ModelFile load_model(const std::filesystem::path& path);

std::string serialize_schema(const FeatureSchema& schema);
FeatureSchema parse_schema(std::string_view text);

}  // namespace triage
