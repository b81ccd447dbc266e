#include "triage/merge.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include "triage/csv.hpp"
#include "triage/error.hpp"

namespace triage {
namespace {

// Modal value, lexicographically smallest among ties. Empty input yields "".
template <class Proj>
std::string modal(const std::vector<TimelineEvent>& events, Proj proj) {
  std::map<std::string_view, std::size_t> counts;
  for (const auto& e : events) ++counts[proj(e)];
  std::string_view best;
  std::size_t best_count = 0;
  for (const auto& [value, n] : counts) {
    if (n > best_count) {  // map order makes the first maximum the smallest
      best = value;
      best_count = n;
    }
  }
  return std::string(best);
}

}  // namespace

std::string_view to_string(Label label) { return label == Label::illegal ? "illegal" : "benign"; }

std::optional<Label> parse_label(std::string_view text) {
  if (text == "benign" || text == "0") return Label::benign;
  if (text == "illegal" || text == "1") return Label::illegal;
  return std::nullopt;
}

CollateResult collate(std::span<const FileMetadata> metadata, std::span<const TimelineEvent> events,
                      std::string_view source_id) {
  CollateResult out;
  std::map<ArtifactKey, std::size_t> index;
  for (const auto& m : metadata) {
    ArtifactKey key{m.source_id, m.inode};
    if (index.contains(key)) {
      out.duplicate_keys.push_back(std::move(key));
      continue;
    }
    index.emplace(key, out.records.size());
    out.records.push_back(ArtifactRecord{std::move(key), m, {}, std::nullopt});
  }

  ArtifactKey probe{std::string(source_id), 0};
  for (const auto& e : events) {
    if (!e.inode) {
      ++out.orphan_count;
      continue;
    }
    probe.inode = *e.inode;
    auto it = index.find(probe);
    if (it == index.end()) {
      ++out.orphan_count;
      continue;
    }
    out.records[it->second].events.push_back(e);
  }

  for (auto& r : out.records)
    std::stable_sort(r.events.begin(), r.events.end(),
                     [](const TimelineEvent& a, const TimelineEvent& b) { return a.instant < b.instant; });
  return out;
}

EventSummary summarize_events(const ArtifactRecord& record, std::span<const TimeWindow> windows) {
  for (const auto& w : windows)
    if (w.end <= w.start) throw Error(ErrorCode::invalid_window, "window end must be after start");

  EventSummary s;
  s.total_count = record.events.size();
  s.count_in_window.reserve(windows.size());
  for (const auto& w : windows) {
    s.count_in_window.push_back(static_cast<std::size_t>(
        std::count_if(record.events.begin(), record.events.end(),
                      [&](const TimelineEvent& e) { return e.instant >= w.start && e.instant < w.end; })));
  }
  s.top_type = modal(record.events, [](const TimelineEvent& e) -> std::string_view { return e.event_type; });
  s.top_source = modal(record.events, [](const TimelineEvent& e) -> std::string_view { return e.source; });
  return s;
}

void write_merged_csv(std::ostream& out, std::span<const ArtifactRecord> records) {
  std::vector<std::string> header(kArtifactCsvHeader.begin(), kArtifactCsvHeader.end());
  header.emplace_back("event_count");
  csv::write_row(out, header);
  for (const auto& r : records) {
    std::ostringstream row;
    write_artifact_csv_row(row, r.metadata);
    std::string line = row.str();
    line.pop_back();  // newline
    out << line << ',' << r.events.size() << '\n';
  }
}

}  // namespace triage
