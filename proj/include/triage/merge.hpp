#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "triage/ingest.hpp"

namespace triage {

enum class Label { benign, illegal };

std::string_view to_string(Label label);
std::optional<Label> parse_label(std::string_view text);
inline int class_of(Label label) { return label == Label::illegal ? 1 : 0; }

/// Identifies a file artefact: the inode is unique within one image or
/// partition, named by source_id.
struct ArtifactKey {
  std::string source_id;
  std::uint64_t inode = 0;

  friend auto operator<=>(const ArtifactKey&, const ArtifactKey&) = default;
  friend bool operator==(const ArtifactKey&, const ArtifactKey&) = default;
};

struct ArtifactRecord {
  ArtifactKey key;
  FileMetadata metadata;
  std::vector<TimelineEvent> events;  // chronological, ties in input order
  std::optional<Label> label;

  friend bool operator==(const ArtifactRecord&, const ArtifactRecord&) = default;
};

struct CollateResult {
  std::vector<ArtifactRecord> records;  // first-seen metadata order
  std::size_t orphan_count = 0;         // events with no inode or no matching record
  std::vector<ArtifactKey> duplicate_keys;  // later metadata rows dropped in favour of the first
};

CollateResult collate(std::span<const FileMetadata> metadata, std::span<const TimelineEvent> events,
                      std::string_view source_id);

/// Half-open [start, end).
struct TimeWindow {
  Instant start;
  Instant end;
};

struct EventSummary {
  std::size_t total_count = 0;
  std::vector<std::size_t> count_in_window;  // one per requested window
  std::string top_type;
  std::string top_source;
};

EventSummary summarize_events(const ArtifactRecord& record, std::span<const TimeWindow> windows);

/// Native artifact CSV with a trailing event_count column.
void write_merged_csv(std::ostream& out, std::span<const ArtifactRecord> records);

}  // namespace triage
