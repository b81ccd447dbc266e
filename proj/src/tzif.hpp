#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace triage::detail {

// Transition table read from a compiled TZif file.
// TODO: evaluate the POSIX TZ footer for instants past the last transition;
// "slim" zoneinfo builds stop listing transitions early and rely on it.
struct ZoneRules {
  std::vector<std::int64_t> transitions;   // UTC seconds, ascending
  std::vector<std::int32_t> offset_after;  // offset in effect from transitions[i]
  std::int32_t initial_offset = 0;         // offset before the first transition

  std::int32_t offset_at(std::int64_t utc) const;

  // Every UTC instant whose local reading equals `local`; zero entries for a
  // gap, two for a fold.
  std::vector<std::int64_t> local_to_utc(std::int64_t local) const;
};

std::optional<ZoneRules> parse_tzif(std::string_view bytes);

// Cached lookup under $TZDIR or /usr/share/zoneinfo. Null when the name is
// not a readable zone.
std::shared_ptr<const ZoneRules> find_zone(const std::string& name);

}  // namespace triage::detail
