#include "triage/ingest.hpp"

#include <algorithm>
#include <charconv>

#include "triage/csv.hpp"
#include "triage/error.hpp"

namespace triage {
namespace {

std::optional<std::uint64_t> parse_uint(std::string_view text) {
  if (text.empty()) return std::nullopt;
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

std::optional<std::int64_t> parse_int(std::string_view text) {
  if (text.empty()) return std::nullopt;
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

// Empty, "0" (no digest computed) or a valid digest.
std::optional<std::string> normalize_hash(std::string_view text, bool zero_means_empty) {
  if (text.empty() || (zero_means_empty && text == "0")) return std::string{};
  if (!is_valid_hash(text)) return std::nullopt;
  return lowercase(text);
}

ParseDiagnostic diagnostic(const csv::Record& rec, DiagnosticReason reason) {
  return {rec.line_number, reason, rec.raw};
}

template <std::size_t N>
bool header_matches(const csv::Record& rec, const std::array<std::string_view, N>& expected,
                    bool allow_extra) {
  if (rec.malformed || rec.fields.size() < N || (!allow_extra && rec.fields.size() != N)) return false;
  for (std::size_t i = 0; i < N; ++i)
    if (rec.fields[i] != expected[i]) return false;
  return true;
}

std::optional<Instant> parse_optional_iso(std::string_view text, bool& ok) {
  ok = true;
  if (text.empty()) return std::nullopt;
  auto t = parse_iso8601_utc(text);
  if (!t) ok = false;
  return t;
}

std::string optional_iso(const std::optional<Instant>& t) { return t ? format_iso8601_utc(*t) : std::string{}; }

}  // namespace

std::optional<Macb> Macb::parse(std::string_view text) {
  static constexpr std::string_view letters = "MACB";
  if (text.size() != 4) return std::nullopt;
  Macb m;
  for (std::size_t i = 0; i < 4; ++i) {
    if (text[i] != letters[i] && text[i] != '.') return std::nullopt;
    m.flags_[i] = text[i];
  }
  return m;
}

std::string_view to_string(DiagnosticReason reason) {
  switch (reason) {
    case DiagnosticReason::bad_field_count: return "bad-field-count";
    case DiagnosticReason::bad_timestamp: return "bad-timestamp";
    case DiagnosticReason::bad_integer: return "bad-integer";
    case DiagnosticReason::bad_hash: return "bad-hash";
    case DiagnosticReason::bad_header: return "bad-header";
  }
  return "unknown";
}

bool is_valid_hash(std::string_view hex) {
  if (hex.size() != 32 && hex.size() != 40 && hex.size() != 64) return false;
  return std::all_of(hex.begin(), hex.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
}

std::string lowercase(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string final_path_component(std::string_view path) {
  auto pos = path.find_last_of("/\\");
  return std::string(pos == std::string_view::npos ? path : path.substr(pos + 1));
}

// ---- l2tcsv -------------------------------------------------------------

void stream_l2tcsv(std::istream& in, const RecordSink<TimelineEvent>& on_event,
                   const DiagnosticSink& on_diagnostic) {
  csv::Reader reader(in);
  csv::Record rec;
  if (!reader.next(rec) || !header_matches(rec, kL2tCsvHeader, false))
    throw Error(ErrorCode::format, "l2tcsv: missing or mismatched 17-column header");

  while (reader.next(rec)) {
    if (rec.malformed || rec.fields.size() != kL2tCsvHeader.size()) {
      on_diagnostic(diagnostic(rec, DiagnosticReason::bad_field_count));
      continue;
    }
    auto& f = rec.fields;
    auto date = parse_us_date(f[0]);
    auto tod = parse_time_of_day(f[1]);
    auto macb = Macb::parse(f[3]);
    std::optional<Instant> instant;
    if (date && tod) instant = resolve_local_time(*date, *tod, f[2]);
    if (!instant || !macb) {
      on_diagnostic(diagnostic(rec, DiagnosticReason::bad_timestamp));
      continue;
    }
    std::optional<std::uint64_t> inode;
    if (!f[13].empty() && f[13] != "-") {
      inode = parse_uint(f[13]);
      if (!inode) {
        on_diagnostic(diagnostic(rec, DiagnosticReason::bad_integer));
        continue;
      }
    }

    TimelineEvent ev;
    ev.date = *date;
    ev.time_of_day = *tod;
    ev.timezone = std::move(f[2]);
    ev.macb = *macb;
    ev.source = std::move(f[4]);
    ev.sourcetype = std::move(f[5]);
    ev.event_type = std::move(f[6]);
    ev.user = std::move(f[7]);
    ev.host = std::move(f[8]);
    ev.short_desc = std::move(f[9]);
    ev.desc = std::move(f[10]);
    ev.version = std::move(f[11]);
    ev.filename = std::move(f[12]);
    ev.inode = inode;
    ev.notes = std::move(f[14]);
    ev.format = std::move(f[15]);
    ev.extra = std::move(f[16]);
    ev.instant = *instant;
    on_event(std::move(ev));
  }
}

ParseResult<TimelineEvent> parse_l2tcsv(std::istream& in) {
  ParseResult<TimelineEvent> out;
  stream_l2tcsv(
      in, [&](TimelineEvent&& e) { out.records.push_back(std::move(e)); },
      [&](ParseDiagnostic&& d) { out.diagnostics.push_back(std::move(d)); });
  return out;
}

void write_l2tcsv_row(std::ostream& out, const TimelineEvent& e) {
  const std::array<std::string, 17> fields{
      format_us_date(e.date), format_time_of_day(e.time_of_day), e.timezone, std::string(e.macb.str()),
      e.source, e.sourcetype, e.event_type, e.user, e.host, e.short_desc, e.desc, e.version, e.filename,
      e.inode ? std::to_string(*e.inode) : std::string("-"), e.notes, e.format, e.extra};
  csv::write_row(out, fields);
}

void write_l2tcsv(std::ostream& out, std::span<const TimelineEvent> events) {
  const std::vector<std::string> header(kL2tCsvHeader.begin(), kL2tCsvHeader.end());
  csv::write_row(out, header);
  for (const auto& e : events) write_l2tcsv_row(out, e);
}

// ---- bodyfile -----------------------------------------------------------

void stream_bodyfile(std::istream& in, std::string_view source_id, const RecordSink<FileMetadata>& on_record,
                     const DiagnosticSink& on_diagnostic) {
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto report = [&](DiagnosticReason r) { on_diagnostic({line_number, r, line}); };

    // MD5|name|inode|mode|UID|GID|size|atime|mtime|ctime|crtime
    auto f = csv::split_plain(line, '|');
    if (f.size() != 11) {
      report(DiagnosticReason::bad_field_count);
      continue;
    }
    auto hash = normalize_hash(f[0], true);
    if (!hash) {
      report(DiagnosticReason::bad_hash);
      continue;
    }
    auto inode = parse_uint(f[2]);
    auto size = parse_uint(f[6]);
    if (!inode || !size) {
      report(DiagnosticReason::bad_integer);
      continue;
    }
    std::array<std::optional<Instant>, 4> times;  // atime mtime ctime crtime
    bool times_ok = true;
    for (std::size_t i = 0; i < 4; ++i) {
      auto v = parse_int(f[7 + i]);
      if (!v || *v < 0) {
        times_ok = false;
        break;
      }
      if (*v != 0) times[i] = Instant{seconds{*v}};
    }
    if (!times_ok) {
      report(DiagnosticReason::bad_timestamp);
      continue;
    }

    FileMetadata m;
    m.source_id = std::string(source_id);
    m.path = std::string(f[1]);
    m.name = final_path_component(m.path);
    m.size_bytes = *size;
    m.inode = *inode;
    m.hash = std::move(*hash);
    m.owner = std::string(f[4]);
    m.atime = times[0];
    m.mtime = times[1];
    m.ctime = times[2];
    m.crtime = times[3];
    on_record(std::move(m));
  }
}

ParseResult<FileMetadata> parse_bodyfile(std::istream& in, std::string_view source_id) {
  ParseResult<FileMetadata> out;
  stream_bodyfile(
      in, source_id, [&](FileMetadata&& m) { out.records.push_back(std::move(m)); },
      [&](ParseDiagnostic&& d) { out.diagnostics.push_back(std::move(d)); });
  return out;
}

// ---- native artifact CSV ------------------------------------------------

void stream_artifact_csv(std::istream& in, const RecordSink<FileMetadata>& on_record,
                         const DiagnosticSink& on_diagnostic) {
  csv::Reader reader(in);
  csv::Record rec;
  // Extra trailing columns (block addresses, event_count, ...) are accepted and ignored.
  if (!reader.next(rec) || !header_matches(rec, kArtifactCsvHeader, true))
    throw Error(ErrorCode::format, "artifact csv: missing or mismatched header");
  const std::size_t width = rec.fields.size();

  while (reader.next(rec)) {
    if (rec.malformed || rec.fields.size() != width) {
      on_diagnostic(diagnostic(rec, DiagnosticReason::bad_field_count));
      continue;
    }
    auto& f = rec.fields;
    auto size = parse_uint(f[2]);
    auto inode = parse_uint(f[3]);
    if (!size || !inode) {
      on_diagnostic(diagnostic(rec, DiagnosticReason::bad_integer));
      continue;
    }
    auto hash = normalize_hash(f[4], false);
    if (!hash) {
      on_diagnostic(diagnostic(rec, DiagnosticReason::bad_hash));
      continue;
    }
    std::array<std::optional<Instant>, 4> times;  // crtime atime mtime ctime
    bool times_ok = true;
    for (std::size_t i = 0; i < 4 && times_ok; ++i) times[i] = parse_optional_iso(f[6 + i], times_ok);
    if (!times_ok) {
      on_diagnostic(diagnostic(rec, DiagnosticReason::bad_timestamp));
      continue;
    }

    FileMetadata m;
    m.source_id = std::move(f[0]);
    m.path = std::move(f[1]);
    m.name = final_path_component(m.path);
    m.size_bytes = *size;
    m.inode = *inode;
    m.hash = std::move(*hash);
    m.owner = std::move(f[5]);
    m.crtime = times[0];
    m.atime = times[1];
    m.mtime = times[2];
    m.ctime = times[3];
    on_record(std::move(m));
  }
}

ParseResult<FileMetadata> parse_artifact_csv(std::istream& in) {
  ParseResult<FileMetadata> out;
  stream_artifact_csv(
      in, [&](FileMetadata&& m) { out.records.push_back(std::move(m)); },
      [&](ParseDiagnostic&& d) { out.diagnostics.push_back(std::move(d)); });
  return out;
}

void write_artifact_csv_row(std::ostream& out, const FileMetadata& m) {
  const std::array<std::string, 10> fields{m.source_id,           m.path,
                                           std::to_string(m.size_bytes), std::to_string(m.inode),
                                           m.hash,                m.owner,
                                           optional_iso(m.crtime), optional_iso(m.atime),
                                           optional_iso(m.mtime),  optional_iso(m.ctime)};
  csv::write_row(out, fields);
}

void write_artifact_csv(std::ostream& out, std::span<const FileMetadata> records) {
  const std::vector<std::string> header(kArtifactCsvHeader.begin(), kArtifactCsvHeader.end());
  csv::write_row(out, header);
  for (const auto& m : records) write_artifact_csv_row(out, m);
}

}  // namespace triage
