#include "tzif.hpp"

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>

namespace triage::detail {
namespace {

std::int64_t read_be(std::string_view bytes, std::size_t pos, int width) {
  std::uint64_t v = 0;
  for (int i = 0; i < width; ++i) v = (v << 8) | static_cast<unsigned char>(bytes[pos + i]);
  if (width == 4) return static_cast<std::int32_t>(static_cast<std::uint32_t>(v));
  return static_cast<std::int64_t>(v);
}

struct Header {
  std::size_t isutcnt, isstdcnt, leapcnt, timecnt, typecnt, charcnt;
};

std::optional<Header> read_header(std::string_view bytes, std::size_t pos) {
  if (bytes.size() < pos + 44 || bytes.substr(pos, 4) != "TZif") return std::nullopt;
  auto count = [&](int i) { return static_cast<std::size_t>(read_be(bytes, pos + 20 + 4 * i, 4)); };
  return Header{count(0), count(1), count(2), count(3), count(4), count(5)};
}

std::size_t block_size(const Header& h, int time_width) {
  return h.timecnt * time_width + h.timecnt + h.typecnt * 6 + h.charcnt +
         h.leapcnt * (time_width + 4) + h.isstdcnt + h.isutcnt;
}

bool valid_zone_name(const std::string& name) {
  if (name.empty() || name.front() == '/' || name.find("..") != std::string::npos) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '/' || c == '_' || c == '-' || c == '+';
  });
}

}  // namespace

std::int32_t ZoneRules::offset_at(std::int64_t utc) const {
  auto it = std::upper_bound(transitions.begin(), transitions.end(), utc);
  if (it == transitions.begin()) return initial_offset;
  return offset_after[static_cast<std::size_t>(it - transitions.begin()) - 1];
}

std::vector<std::int64_t> ZoneRules::local_to_utc(std::int64_t local) const {
  std::set<std::int32_t> offsets(offset_after.begin(), offset_after.end());
  offsets.insert(initial_offset);
  std::vector<std::int64_t> out;
  for (std::int32_t off : offsets) {
    std::int64_t utc = local - off;
    if (offset_at(utc) == off) out.push_back(utc);
  }
  return out;
}

std::optional<ZoneRules> parse_tzif(std::string_view bytes) {
  auto v1 = read_header(bytes, 0);
  if (!v1) return std::nullopt;
  std::size_t pos = 44;
  int width = 4;
  Header h = *v1;
  const char version = bytes[4];
  if (version >= '2') {
    pos += block_size(*v1, 4);
    auto v2 = read_header(bytes, pos);
    if (!v2) return std::nullopt;
    h = *v2;
    pos += 44;
    width = 8;
  }
  if (bytes.size() < pos + block_size(h, width) || h.typecnt == 0) return std::nullopt;

  ZoneRules rules;
  std::vector<std::int64_t> times(h.timecnt);
  for (std::size_t i = 0; i < h.timecnt; ++i) times[i] = read_be(bytes, pos + i * width, width);
  pos += h.timecnt * width;
  std::vector<std::size_t> idx(h.timecnt);
  for (std::size_t i = 0; i < h.timecnt; ++i) idx[i] = static_cast<unsigned char>(bytes[pos + i]);
  pos += h.timecnt;
  std::vector<std::int32_t> type_offsets(h.typecnt);
  for (std::size_t i = 0; i < h.typecnt; ++i)
    type_offsets[i] = static_cast<std::int32_t>(read_be(bytes, pos + i * 6, 4));

  rules.initial_offset = type_offsets[0];
  for (std::size_t i = 0; i < h.timecnt; ++i) {
    if (idx[i] >= h.typecnt) return std::nullopt;
    rules.transitions.push_back(times[i]);
    rules.offset_after.push_back(type_offsets[idx[i]]);
  }
  return rules;
}

std::shared_ptr<const ZoneRules> find_zone(const std::string& name) {
  static std::mutex mutex;
  static std::map<std::string, std::shared_ptr<const ZoneRules>> cache;

  std::lock_guard lock(mutex);
  if (auto it = cache.find(name); it != cache.end()) return it->second;

  std::shared_ptr<const ZoneRules> rules;
  if (valid_zone_name(name)) {
    const char* env = std::getenv("TZDIR");
    std::filesystem::path root = env && *env ? env : "/usr/share/zoneinfo";
    std::ifstream in(root / name, std::ios::binary);
    if (in) {
      std::ostringstream buf;
      buf << in.rdbuf();
      if (auto parsed = parse_tzif(buf.str())) rules = std::make_shared<const ZoneRules>(std::move(*parsed));
    }
  }
  cache.emplace(name, rules);
  return rules;
}

}  // namespace triage::detail
