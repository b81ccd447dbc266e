#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "triage/features.hpp"
#include "triage/ingest.hpp"
#include "triage/timeutil.hpp"

namespace triage {

/// Class ratios of the two reference datasets (illegal / total).
inline constexpr double kDataset1IllegalRatio = 987.0 / 42326.0;
inline constexpr double kDataset2IllegalRatio = 5968.0 / 55296.0;

struct ClusterSpec {
  std::uint64_t size_kb_center = 2048;
  std::uint64_t size_kb_spread = 512;
  Instant crtime_center{};
  seconds crtime_spread{6 * 3600};
};

struct ExtensionWeight {
  std::string extension;
  double weight = 1.0;
};

/// One planted case: background wear-and-tear plus clustered illegal files
/// (shared directory, similar sizes, close creation times).
struct ScenarioParams {
  std::size_t n_benign = 100;
  std::size_t n_illegal = 10;
  std::vector<ClusterSpec> clusters;  // cluster_count = clusters.size()
  std::size_t cluster_dir_depth = 5;
  double event_rate_benign = 3.0;   // mean events per artefact, >= 1
  double event_rate_illegal = 5.0;
  std::vector<ExtensionWeight> extension_mix{{"jpg", 0.55}, {"png", 0.2}, {"mp4", 0.15}, {"avi", 0.1}};
  double known_fraction = 0.5;
  std::string source_id = "img1";
  std::string user = "kim";
  std::string host = "WIN7-PC";
  Instant system_install_time{};  // background activity starts here
  Instant acquisition_time{};     // nothing is later than this
  std::uint64_t seed = 1;

  void validate() const;  // throws Error{generation}
};

/// Total `total` artefacts with round(total * illegal_fraction) illegal ones
/// spread over `cluster_count` clusters placed inside the activity period.
ScenarioParams scenario_with_ratio(std::size_t total, double illegal_fraction, std::size_t cluster_count,
                                   std::uint64_t seed);

struct GeneratedCase {
  std::vector<FileMetadata> metadata;
  std::vector<TimelineEvent> events;  // chronological
  std::map<std::string, int> ground_truth;        // hash -> class
  std::set<std::string> known_fraction_hashes;    // subset designated previously known
  std::string source_id;
  Instant acquisition_time{};
};

GeneratedCase generate(const ScenarioParams& params);

/// Collates the case and extracts one feature vector per artefact, labelled
/// from the ground truth, with the acquisition time as reference.
std::vector<FeatureVector> labelled_vectors(const GeneratedCase& c);

struct EmittedFiles {
  std::filesystem::path artifacts;     // native artifact CSV
  std::filesystem::path timeline;      // l2tcsv
  std::filesystem::path ground_truth;  // hash,class
  std::filesystem::path known_base;    // known-base seed
};

EmittedFiles emit(const GeneratedCase& c, const std::filesystem::path& out_dir);

}  // namespace triage
