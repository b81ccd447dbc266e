#include "triage/features.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <map>

#include "triage/csv.hpp"
#include "triage/error.hpp"
#include "triage/ingest.hpp"

namespace triage {
namespace {

constexpr std::array<std::string_view, 10> kDatasetHeader{
    "depth", "ext", "name_len", "age_y", "age_m", "age_d", "age_h", "size_kb", "event_count", "class"};

std::optional<std::uint64_t> parse_count(std::string_view text) {
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return v;
}

}  // namespace

std::array<double, 8> FeatureVector::numerics() const {
  return {static_cast<double>(depth_of_dir), static_cast<double>(name_length), static_cast<double>(age_years),
          static_cast<double>(age_months),   static_cast<double>(age_days),    static_cast<double>(age_hours),
          static_cast<double>(size_kb),      static_cast<double>(event_count)};
}

std::size_t FeatureSchema::extension_index(std::string_view ext) const {
  // the vocabulary is small (k + 1); linear scan keeps ordering explicit
  for (std::size_t i = 0; i + 1 < extension_vocabulary.size(); ++i)
    if (extension_vocabulary[i] == ext) return i;
  return extension_vocabulary.size() - 1;
}

std::string FeatureSchema::fingerprint() const {
  std::string canonical;
  for (const auto& e : extension_vocabulary) {
    canonical += e;
    canonical.push_back('\x1f');
  }
  canonical += std::to_string(reference_time.time_since_epoch().count());
  char buf[64];
  for (const auto& r : minmax_ranges) {
    std::snprintf(buf, sizeof buf, "|%.17g,%.17g", r.min, r.max);
    canonical += buf;
  }
  std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (unsigned char c : canonical) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::uint64_t directory_depth(std::string_view path) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    auto pos = path.find_first_of("/\\", start);
    if (pos == std::string_view::npos) pos = path.size();
    if (pos > start) parts.push_back(path.substr(start, pos - start));
    start = pos + 1;
  }
  if (!parts.empty() && parts.front().size() == 2 && parts.front()[1] == ':') parts.erase(parts.begin());
  return parts.empty() ? 0 : parts.size() - 1;
}

std::string file_extension(std::string_view name) {
  auto dot = name.rfind('.');
  if (dot == std::string_view::npos) return {};
  return lowercase(name.substr(dot + 1));
}

std::uint64_t utf8_length(std::string_view text) {
  return static_cast<std::uint64_t>(
      std::count_if(text.begin(), text.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

FeatureVector extract(const ArtifactRecord& record, Instant reference_time) {
  FeatureVector v;
  const auto& m = record.metadata;
  v.depth_of_dir = directory_depth(m.path);
  v.file_extension = file_extension(m.name);
  v.name_length = utf8_length(m.name);
  v.size_kb = m.size_bytes / 1024;
  v.event_count = record.events.size();

  Instant created = reference_time;
  if (m.crtime) {
    created = *m.crtime;
    v.crtime_source = CrtimeSource::metadata;
  } else if (!record.events.empty()) {
    created = std::min_element(record.events.begin(), record.events.end(),
                               [](const auto& a, const auto& b) { return a.instant < b.instant; })
                  ->instant;
    v.crtime_source = CrtimeSource::earliest_event;
  } else {
    v.crtime_source = CrtimeSource::reference;
  }

  const auto delta = std::max<std::int64_t>(0, (reference_time - created).count());
  v.age_hours = static_cast<std::uint64_t>(delta / 3600);
  v.age_days = v.age_hours / 24;
  v.age_months = v.age_days / 30;
  v.age_years = v.age_days / 365;

  if (record.label) v.class_label = class_of(*record.label);
  return v;
}

FeatureSchema build_schema(std::span<const FeatureVector> training, std::size_t k, Instant reference_time) {
  if (training.empty()) throw Error(ErrorCode::invalid_argument, "build_schema: empty training set");
  if (k < 1) throw Error(ErrorCode::invalid_argument, "build_schema: k must be at least 1");

  std::map<std::string, std::size_t> counts;
  for (const auto& v : training) ++counts[v.file_extension];
  std::vector<std::pair<std::string, std::size_t>> ranked(counts.begin(), counts.end());
  // map order is lexicographic, so a stable sort by count keeps ties alphabetical
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  FeatureSchema schema;
  schema.reference_time = reference_time;
  for (std::size_t i = 0; i < ranked.size() && i < k; ++i) schema.extension_vocabulary.push_back(ranked[i].first);
  schema.extension_vocabulary.emplace_back(kOtherExtension);

  auto first = training.front().numerics();
  for (std::size_t j = 0; j < kNumericFeatureCount; ++j) schema.minmax_ranges[j] = {first[j], first[j]};
  for (const auto& v : training) {
    auto x = v.numerics();
    for (std::size_t j = 0; j < kNumericFeatureCount; ++j) {
      schema.minmax_ranges[j].min = std::min(schema.minmax_ranges[j].min, x[j]);
      schema.minmax_ranges[j].max = std::max(schema.minmax_ranges[j].max, x[j]);
    }
  }
  return schema;
}

NumericRow encode(const FeatureVector& v, const FeatureSchema& schema) {
  NumericRow row;
  row.values.assign(schema.width(), 0.0);
  row.values[schema.extension_index(v.file_extension)] = 1.0;
  const std::size_t offset = schema.extension_vocabulary.size();
  auto x = v.numerics();
  for (std::size_t j = 0; j < kNumericFeatureCount; ++j) {
    const auto [lo, hi] = schema.minmax_ranges[j];
    double scaled = hi > lo ? (x[j] - lo) / (hi - lo) : 0.0;
    row.values[offset + j] = std::clamp(scaled, 0.0, 1.0);
  }
  row.class_label = v.class_label;
  return row;
}

void write_feature_csv(std::ostream& out, std::span<const FeatureVector> rows) {
  const std::vector<std::string> header(kDatasetHeader.begin(), kDatasetHeader.end());
  csv::write_row(out, header);
  for (const auto& v : rows) {
    const std::vector<std::string> fields{
        std::to_string(v.depth_of_dir), v.file_extension,           std::to_string(v.name_length),
        std::to_string(v.age_years),    std::to_string(v.age_months), std::to_string(v.age_days),
        std::to_string(v.age_hours),    std::to_string(v.size_kb),    std::to_string(v.event_count),
        v.class_label ? std::to_string(*v.class_label) : std::string{}};
    csv::write_row(out, fields);
  }
}

std::vector<FeatureVector> read_feature_csv(std::istream& in) {
  csv::Reader reader(in);
  csv::Record rec;
  if (!reader.next(rec) || rec.fields.size() != kDatasetHeader.size() ||
      !std::equal(kDatasetHeader.begin(), kDatasetHeader.end(), rec.fields.begin()))
    throw Error(ErrorCode::format, "dataset csv: missing or mismatched header");

  std::vector<FeatureVector> rows;
  while (reader.next(rec)) {
    auto fail = [&] {
      return Error(ErrorCode::format, "dataset csv line " + std::to_string(rec.line_number) + ": malformed row");
    };
    if (rec.malformed || rec.fields.size() != kDatasetHeader.size()) throw fail();
    const auto& f = rec.fields;
    FeatureVector v;
    std::array<std::uint64_t*, 8> targets{&v.depth_of_dir, &v.name_length, &v.age_years, &v.age_months,
                                          &v.age_days,     &v.age_hours,   &v.size_kb,   &v.event_count};
    const std::array<std::size_t, 8> columns{0, 2, 3, 4, 5, 6, 7, 8};
    for (std::size_t i = 0; i < targets.size(); ++i) {
      auto n = parse_count(f[columns[i]]);
      if (!n) throw fail();
      *targets[i] = *n;
    }
    v.file_extension = f[1];
    if (f[9] == "0" || f[9] == "1") {
      v.class_label = f[9] == "1" ? 1 : 0;
    } else if (!f[9].empty()) {
      throw fail();
    }
    rows.push_back(std::move(v));
  }
  return rows;
}

}  // namespace triage
