#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "triage/merge.hpp"
#include "triage/timeutil.hpp"

namespace triage {

/// Where the creation time used for the age features came from.
enum class CrtimeSource { metadata, earliest_event, reference };

/// Raw per-artefact feature row (the scenario feature matrix).
struct FeatureVector {
  std::uint64_t depth_of_dir = 0;
  std::string file_extension;
  std::uint64_t name_length = 0;
  std::uint64_t age_years = 0;
  std::uint64_t age_months = 0;
  std::uint64_t age_days = 0;
  std::uint64_t age_hours = 0;
  std::uint64_t size_kb = 0;
  std::uint64_t event_count = 0;
  std::optional<int> class_label;  // 0 benign, 1 illegal
  CrtimeSource crtime_source = CrtimeSource::metadata;

  // Flagged: no creation time and no events to fall back on.
  bool flagged() const { return crtime_source == CrtimeSource::reference; }

  // The eight numeric columns in encoding order.
  std::array<double, 8> numerics() const;

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
};

inline constexpr std::size_t kNumericFeatureCount = 8;
inline constexpr std::array<std::string_view, kNumericFeatureCount> kNumericFeatureNames{
    "depth", "name_len", "age_y", "age_m", "age_d", "age_h", "size_kb", "event_count"};
inline constexpr std::string_view kOtherExtension = "OTHER";

struct MinMax {
  double min = 0;
  double max = 0;
  friend bool operator==(const MinMax&, const MinMax&) = default;
};

struct FeatureSchema {
  std::vector<std::string> extension_vocabulary;  // top-k extensions, then OTHER
  Instant reference_time{};
  std::array<MinMax, kNumericFeatureCount> minmax_ranges{};

  std::size_t width() const { return extension_vocabulary.size() + kNumericFeatureCount; }
  std::size_t extension_index(std::string_view ext) const;  // OTHER slot when unseen
  std::string fingerprint() const;                           // 16 hex chars, stable

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;
};

struct NumericRow {
  std::vector<double> values;  // one-hot extension block, then normalised numerics
  std::optional<int> class_label;
};

std::uint64_t directory_depth(std::string_view path);
std::string file_extension(std::string_view name);
std::uint64_t utf8_length(std::string_view text);

FeatureVector extract(const ArtifactRecord& record, Instant reference_time);
FeatureSchema build_schema(std::span<const FeatureVector> training, std::size_t k, Instant reference_time = {});
NumericRow encode(const FeatureVector& v, const FeatureSchema& schema);

// Dataset CSV: depth,ext,name_len,age_y,age_m,age_d,age_h,size_kb,event_count,class
void write_feature_csv(std::ostream& out, std::span<const FeatureVector> rows);
std::vector<FeatureVector> read_feature_csv(std::istream& in);

}  // namespace triage
