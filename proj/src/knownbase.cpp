#include "triage/knownbase.hpp"

#include <array>
#include <fstream>
#include <mutex>

#include "triage/csv.hpp"
#include "triage/error.hpp"
#include "triage/ingest.hpp"

namespace triage {
namespace {

constexpr std::array<std::string_view, 4> kHeader{"hash", "label", "case_id", "recorded_at"};

std::vector<std::string> entry_row(const KnownEntry& e) {
  return {e.hash, std::string(to_string(e.label)), e.case_id, format_iso8601_utc(e.recorded_at)};
}

void write_header(std::ostream& out) {
  const std::vector<std::string> header(kHeader.begin(), kHeader.end());
  csv::write_row(out, header);
}

std::string checked_hash(std::string_view hash) {
  if (!is_valid_hash(hash)) throw Error(ErrorCode::invalid_argument, "malformed hash: " + std::string(hash));
  return lowercase(hash);
}

}  // namespace

struct KnownBase::State {
  mutable std::shared_mutex mutex;
  std::map<std::string, KnownEntry> entries;
  std::vector<KnownEntry> history;
  std::optional<std::filesystem::path> journal;
};

KnownBase::KnownBase() : state_(std::make_unique<State>()) {}
KnownBase::~KnownBase() = default;
KnownBase::KnownBase(KnownBase&&) noexcept = default;
KnownBase& KnownBase::operator=(KnownBase&&) noexcept = default;

KnownBase KnownBase::load(const std::filesystem::path& path) {
  KnownBase base;
  std::ifstream in(path);
  if (!in) {
    if (std::filesystem::exists(path)) throw Error(ErrorCode::persistence, "cannot read " + path.string());
    return base;
  }
  csv::Reader reader(in);
  csv::Record rec;
  bool first = true;
  while (reader.next(rec)) {
    if (first) {
      first = false;
      if (rec.fields.size() == 4 && rec.fields[0] == kHeader[0]) continue;
    }
    auto bad = [&] {
      return Error(ErrorCode::format, path.string() + ":" + std::to_string(rec.line_number) + ": bad known-base row");
    };
    if (rec.malformed || rec.fields.size() != 4 || !is_valid_hash(rec.fields[0])) throw bad();
    auto label = parse_label(rec.fields[1]);
    auto at = parse_iso8601_utc(rec.fields[3]);
    if (!label || !at) throw bad();
    KnownEntry e{lowercase(rec.fields[0]), *label, rec.fields[2], *at};
    base.state_->entries.insert_or_assign(e.hash, std::move(e));
  }
  return base;
}

KnownBase KnownBase::open(const std::filesystem::path& path) {
  KnownBase base = load(path);
  if (!std::filesystem::exists(path)) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::persistence, "cannot create " + path.string());
    write_header(out);
  }
  base.state_->journal = path;
  return base;
}

LookupResult KnownBase::lookup(std::string_view hash) const {
  const std::string key = checked_hash(hash);
  std::shared_lock lock(state_->mutex);
  auto it = state_->entries.find(key);
  if (it == state_->entries.end()) return LookupResult::unknown;
  return it->second.label == Label::illegal ? LookupResult::illegal : LookupResult::benign;
}

std::optional<KnownEntry> KnownBase::find(std::string_view hash) const {
  const std::string key = checked_hash(hash);
  std::shared_lock lock(state_->mutex);
  auto it = state_->entries.find(key);
  if (it == state_->entries.end()) return std::nullopt;
  return it->second;
}

UpsertOutcome KnownBase::upsert(KnownEntry entry) {
  entry.hash = checked_hash(entry.hash);
  std::unique_lock lock(state_->mutex);
  if (state_->journal) {
    std::ofstream out(*state_->journal, std::ios::app);
    csv::write_row(out, entry_row(entry));
    out.flush();
    if (!out) throw Error(ErrorCode::persistence, "cannot append to " + state_->journal->string());
  }
  state_->history.push_back(entry);
  auto [it, inserted] = state_->entries.insert_or_assign(entry.hash, std::move(entry));
  return inserted ? UpsertOutcome::inserted : UpsertOutcome::replaced;
}

std::size_t KnownBase::import_hash_list(std::istream& in, Label label, std::string_view case_id,
                                        Instant recorded_at) {
  std::size_t n = 0;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    auto last = line.find_last_not_of(" \t\r");
    std::string_view hash(line.data() + first, last - first + 1);
    if (!is_valid_hash(hash))
      throw Error(ErrorCode::format, "hash list line " + std::to_string(line_number) + ": malformed hash");
    upsert(KnownEntry{std::string(hash), label, std::string(case_id), recorded_at});
    ++n;
  }
  return n;
}

FilterSplit KnownBase::filter_split(std::vector<ArtifactRecord> records) const {
  FilterSplit split;
  std::shared_lock lock(state_->mutex);
  for (auto& r : records) {
    const auto& hash = r.metadata.hash;
    auto it = hash.empty() || !is_valid_hash(hash) ? state_->entries.end() : state_->entries.find(lowercase(hash));
    if (it == state_->entries.end()) {
      r.label.reset();
      split.unknown.push_back(std::move(r));
    } else {
      r.label = it->second.label;
      split.known.push_back(std::move(r));
    }
  }
  return split;
}

void KnownBase::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error(ErrorCode::persistence, "cannot write " + path.string());
  write_header(out);
  std::shared_lock lock(state_->mutex);
  for (const auto& [hash, e] : state_->entries) csv::write_row(out, entry_row(e));
  out.flush();
  if (!out) throw Error(ErrorCode::persistence, "write failed for " + path.string());
}

std::size_t KnownBase::size() const {
  std::shared_lock lock(state_->mutex);
  return state_->entries.size();
}

std::vector<KnownEntry> KnownBase::entries() const {
  std::shared_lock lock(state_->mutex);
  std::vector<KnownEntry> out;
  out.reserve(state_->entries.size());
  for (const auto& [hash, e] : state_->entries) out.push_back(e);
  return out;
}

std::vector<KnownEntry> KnownBase::history() const {
  std::shared_lock lock(state_->mutex);
  return state_->history;
}

std::string_view to_string(LookupResult r) {
  switch (r) {
    case LookupResult::benign: return "benign";
    case LookupResult::illegal: return "illegal";
    case LookupResult::unknown: return "unknown";
  }
  return "unknown";
}

}  // namespace triage
