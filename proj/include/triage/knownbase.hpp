#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "triage/merge.hpp"
#include "triage/timeutil.hpp"

namespace triage {

struct KnownEntry {
  std::string hash;
  Label label = Label::benign;
  std::string case_id;
  Instant recorded_at{};

  friend bool operator==(const KnownEntry&, const KnownEntry&) = default;
};

enum class LookupResult { benign, illegal, unknown };
enum class UpsertOutcome { inserted, replaced };

struct FilterSplit {
  std::vector<ArtifactRecord> known;    // label set from the base
  std::vector<ArtifactRecord> unknown;  // label absent
};

/// Hash whitelist/blacklist carried across cases.
///
/// When opened on a file, every upsert is appended as a
/// `hash,label,case_id,recorded_at` row, so the file doubles as the label
/// history; loading replays it with last-write-wins. Lookups take a shared
/// lock, upserts an exclusive one.
class KnownBase {
 public:
  KnownBase();  // in-memory only
  ~KnownBase();
  KnownBase(KnownBase&&) noexcept;
  KnownBase& operator=(KnownBase&&) noexcept;

  /// Loads `path` (missing file = empty base) and appends future upserts to it.
  static KnownBase open(const std::filesystem::path& path);
  /// Read-only snapshot of a file; upserts stay in memory.
  static KnownBase load(const std::filesystem::path& path);

  /// Exact case-insensitive digest match. Throws invalid_argument on a
  /// malformed digest.
  LookupResult lookup(std::string_view hash) const;
  std::optional<KnownEntry> find(std::string_view hash) const;

  UpsertOutcome upsert(KnownEntry entry);

  /// Imports a newline-separated digest list (blank lines and `#` comments
  /// skipped). Returns the number of digests upserted.
  std::size_t import_hash_list(std::istream& in, Label label, std::string_view case_id, Instant recorded_at);

  FilterSplit filter_split(std::vector<ArtifactRecord> records) const;

  /// Writes one compacted row per hash, sorted by hash.
  void save(const std::filesystem::path& path) const;

  std::size_t size() const;
  std::vector<KnownEntry> entries() const;  // sorted by hash
  std::vector<KnownEntry> history() const;  // every upsert in order, this session

 private:
  struct State;
  std::unique_ptr<State> state_;
};

std::string_view to_string(LookupResult r);

}  // namespace triage
