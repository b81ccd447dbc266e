#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "triage/classifiers.hpp"
#include "triage/eval.hpp"
#include "triage/features.hpp"
#include "triage/knownbase.hpp"
#include "triage/merge.hpp"
#include "triage/model_io.hpp"

namespace triage {

enum class MetadataFormat { automatic, artifact_csv, bodyfile };

std::optional<MetadataFormat> parse_metadata_format(std::string_view text);

/// Options for Steps 2-4 (filtering, training, prediction).
struct AnalysisOptions {
  TrainConfig train;
  std::size_t top_k_extensions = 20;
  double holdout_fraction = 0.3;
  double threshold = 0.5;
  std::uint64_t seed = 42;  // overrides train.seed and drives the holdout split
};

struct PipelineConfig {
  std::filesystem::path timeline_path;
  std::filesystem::path metadata_path;
  MetadataFormat metadata_format = MetadataFormat::automatic;
  std::optional<std::string> source_id;  // defaults to the first metadata row's source
  std::filesystem::path known_base_path;
  std::optional<std::filesystem::path> extra_training_path;  // labelled dataset CSV appended to Step 3
  std::optional<Instant> reference_time;                     // defaults to the latest observed instant
  std::optional<std::filesystem::path> output_dir;
  AnalysisOptions analysis;
};

/// Output of Step 1: parsed, collated records for one source.
struct CaseData {
  std::string source_id;
  std::vector<ArtifactRecord> records;
  std::size_t orphan_events = 0;
  std::size_t duplicate_metadata = 0;
  std::vector<ParseDiagnostic> metadata_diagnostics;
  std::vector<ParseDiagnostic> timeline_diagnostics;
  Instant reference_time{};
};

struct RankedEntry {
  ArtifactKey key;
  std::string path;
  std::string hash;
  double score = 0.0;
  int predicted = 0;

  friend bool operator==(const RankedEntry&, const RankedEntry&) = default;
};

struct CaseCounts {
  std::size_t total = 0;
  std::size_t known_benign = 0;
  std::size_t known_illegal = 0;
  std::size_t unknown = 0;
  std::size_t orphan_events = 0;
  std::size_t duplicate_metadata = 0;
  std::size_t metadata_diagnostics = 0;
  std::size_t timeline_diagnostics = 0;
  std::size_t flagged_crtime = 0;
  std::size_t predicted_suspicious = 0;
};

struct ModelSummary {
  Algorithm algorithm = Algorithm::tree;
  std::size_t training_rows = 0;
  std::size_t training_positives = 0;
  std::size_t extra_training_rows = 0;
  std::size_t width = 0;
  std::string schema_fingerprint;
};

/// Metrics from the internal stratified holdout over the known artefacts.
struct HoldoutMetrics {
  bool available = false;
  std::string note;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  ConfusionCounts counts;
  Prf scores;
  double average_precision = 0.0;
};

struct CaseReport {
  CaseCounts counts;
  ModelSummary model;
  HoldoutMetrics holdout;
  double threshold = 0.5;
  std::uint64_t seed = 0;
  Instant reference_time{};
  std::vector<RankedEntry> ranking;  // score descending, then path ascending
};

CaseData load_case(std::istream& timeline, std::istream& metadata, MetadataFormat format,
                   const std::optional<std::string>& source_id, const std::optional<Instant>& reference_time);

/// Steps 2-4. `model_out`, when given, receives the final model.
CaseReport analyze_case(const CaseData& data, const KnownBase& known, const AnalysisOptions& options,
                        std::span<const FeatureVector> extra_training = {}, ModelFile* model_out = nullptr);

/// The whole four-step flow from files on disk; writes report.json,
/// ranking.csv, model.json, dataset.csv and merged.csv when output_dir is set.
CaseReport run_case(const PipelineConfig& config);

/// First min(top_n, size) ranked entries.
std::vector<RankedEntry> rank_unknown(const CaseReport& report, long long top_n);

/// Sorts by score descending, ties by path then key.
void sort_ranking(std::vector<RankedEntry>& ranking);

std::string serialize_report(const CaseReport& report);
CaseReport parse_report(std::string_view json_text);  // throws Error{format}
void write_ranking_csv(std::ostream& out, std::span<const RankedEntry> ranking);

/// Feature vectors for every record, labelled where the record is.
std::vector<FeatureVector> extract_all(std::span<const ArtifactRecord> records, Instant reference_time);

/// Holds out a stratified `options.holdout_fraction` of `rows`, builds the
/// schema on the remainder and scores each algorithm on the held-out part.
std::vector<EvalEntry> evaluate_dataset(std::span<const FeatureVector> rows, const std::string& dataset,
                                        std::span<const Algorithm> algorithms, const AnalysisOptions& options);

/// Latest instant among metadata timestamps and events.
Instant latest_instant(std::span<const FileMetadata> metadata, std::span<const TimelineEvent> events);

}  // namespace triage
