#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "triage/timeutil.hpp"

namespace triage {

/// Four-character MACB flag set, each position either its letter or '.'.
class Macb {
 public:
  Macb() = default;
  static std::optional<Macb> parse(std::string_view text);

  std::string_view str() const { return {flags_.data(), flags_.size()}; }
  bool modified() const { return flags_[0] == 'M'; }
  bool accessed() const { return flags_[1] == 'A'; }
  bool changed() const { return flags_[2] == 'C'; }
  bool born() const { return flags_[3] == 'B'; }

  friend bool operator==(const Macb&, const Macb&) = default;

 private:
  std::array<char, 4> flags_{'.', '.', '.', '.'};
};

/// One super-timeline row. `instant` is the UTC resolution of
/// date + time_of_day + timezone.
struct TimelineEvent {
  std::chrono::year_month_day date{};
  seconds time_of_day{0};
  std::string timezone;
  Macb macb;
  std::string source;
  std::string sourcetype;
  std::string event_type;
  std::string user;
  std::string host;
  std::string short_desc;
  std::string desc;
  std::string version;
  std::string filename;
  std::optional<std::uint64_t> inode;
  std::string notes;
  std::string format;
  std::string extra;
  Instant instant{};

  friend bool operator==(const TimelineEvent&, const TimelineEvent&) = default;
};

struct FileMetadata {
  std::string source_id;
  std::string path;
  std::string name;
  std::uint64_t size_bytes = 0;
  std::uint64_t inode = 0;
  std::string hash;  // lowercase hex (32/40/64) or empty
  std::string owner;
  std::optional<Instant> crtime;
  std::optional<Instant> atime;
  std::optional<Instant> mtime;
  std::optional<Instant> ctime;

  friend bool operator==(const FileMetadata&, const FileMetadata&) = default;
};

// bad_header is never emitted by the line parsers (a bad header is fatal);
// it labels that fatal case in upload diagnostics.
enum class DiagnosticReason { bad_field_count, bad_timestamp, bad_integer, bad_hash, bad_header };

std::string_view to_string(DiagnosticReason reason);

struct ParseDiagnostic {
  std::size_t line_number = 0;
  DiagnosticReason reason = DiagnosticReason::bad_field_count;
  std::string raw_line;
};

template <class T>
struct ParseResult {
  std::vector<T> records;
  std::vector<ParseDiagnostic> diagnostics;
};

template <class T>
using RecordSink = std::function<void(T&&)>;
using DiagnosticSink = std::function<void(ParseDiagnostic&&)>;

inline constexpr std::array<std::string_view, 17> kL2tCsvHeader{
    "date", "time",  "timezone", "MACB",     "source", "sourcetype", "type",  "user",  "host",
    "short", "desc", "version",  "filename", "inode",  "notes",      "format", "extra"};

inline constexpr std::array<std::string_view, 10> kArtifactCsvHeader{
    "source_id", "path", "size_bytes", "inode", "hash", "owner", "crtime", "atime", "mtime", "ctime"};

// Streaming parsers: each data record is handed to exactly one sink, in input
// order. A missing or wrong header throws Error{format}.
void stream_l2tcsv(std::istream& in, const RecordSink<TimelineEvent>& on_event,
                   const DiagnosticSink& on_diagnostic);
void stream_bodyfile(std::istream& in, std::string_view source_id,
                     const RecordSink<FileMetadata>& on_record, const DiagnosticSink& on_diagnostic);
void stream_artifact_csv(std::istream& in, const RecordSink<FileMetadata>& on_record,
                         const DiagnosticSink& on_diagnostic);

ParseResult<TimelineEvent> parse_l2tcsv(std::istream& in);
ParseResult<FileMetadata> parse_bodyfile(std::istream& in, std::string_view source_id);
ParseResult<FileMetadata> parse_artifact_csv(std::istream& in);

void write_l2tcsv(std::ostream& out, std::span<const TimelineEvent> events);
void write_l2tcsv_row(std::ostream& out, const TimelineEvent& event);
void write_artifact_csv(std::ostream& out, std::span<const FileMetadata> records);
void write_artifact_csv_row(std::ostream& out, const FileMetadata& record);

// Shared field helpers.
bool is_valid_hash(std::string_view hex);
std::string lowercase(std::string_view text);
std::string final_path_component(std::string_view path);

}  // namespace triage
