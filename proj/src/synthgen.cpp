#include "triage/synthgen.hpp"

#include "triage/merge.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <string_view>

#include "triage/csv.hpp"
#include "triage/error.hpp"

namespace triage {
namespace {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// 64 hex chars derived from (seed, index); stands in for a SHA-256 of content
// that does not exist.
std::string synthetic_digest(std::uint64_t seed, std::uint64_t index) {
  std::string out;
  char buf[17];
  std::uint64_t state = splitmix64(seed ^ 0x5eedULL) ^ splitmix64(index + 0x1234567ULL);
  for (int lane = 0; lane < 4; ++lane) {
    state = splitmix64(state + static_cast<std::uint64_t>(lane));
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(state));
    out += buf;
  }
  return out;
}

template <class T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  std::uniform_int_distribution<std::size_t> d(0, items.size() - 1);
  return items[d(rng)];
}

template <class T, std::size_t N>
const T& pick(Rng& rng, const std::array<T, N>& items) {
  std::uniform_int_distribution<std::size_t> d(0, N - 1);
  return items[d(rng)];
}

std::string pick_weighted(Rng& rng, const std::vector<ExtensionWeight>& mix) {
  std::vector<double> w;
  for (const auto& e : mix) w.push_back(e.weight);
  std::discrete_distribution<std::size_t> d(w.begin(), w.end());
  return mix[d(rng)].extension;
}

std::int64_t uniform_int(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

std::string random_token(Rng& rng, std::size_t len, std::string_view alphabet) {
  std::string s;
  std::uniform_int_distribution<std::size_t> d(0, alphabet.size() - 1);
  for (std::size_t i = 0; i < len; ++i) s.push_back(alphabet[d(rng)]);
  return s;
}

constexpr std::string_view kAlnum = "abcdefghijklmnopqrstuvwxyz0123456789";
constexpr std::string_view kUpperAlnum = "ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";

constexpr std::array<std::string_view, 24> kWords{
    "update", "setup",  "config", "report", "photo",  "invoice", "notes",  "backup",
    "data",   "driver", "media",  "player", "client", "service", "sample", "library",
    "cache",  "index",  "theme",  "icon",   "plugin", "session", "profile", "resource"};

std::string word_name(Rng& rng) {
  std::string name(pick(rng, kWords));
  const auto extra = uniform_int(rng, 0, 2);
  for (std::int64_t i = 0; i < extra; ++i) {
    name += pick(rng, std::array<std::string_view, 3>{"_", "-", ""});
    name += pick(rng, kWords);
  }
  if (uniform_int(rng, 0, 2) == 0) name += std::to_string(uniform_int(rng, 1, 999));
  return name;
}

std::uint64_t lognormal_bytes(Rng& rng, double median_kb, double sigma) {
  std::lognormal_distribution<double> d(std::log(median_kb * 1024.0), sigma);
  return static_cast<std::uint64_t>(std::min(d(rng), 4.0e9));
}

struct Artifact {
  std::string path;
  std::uint64_t size_bytes = 0;
  Instant crtime{};
  int klass = 0;
  double event_rate = 1.0;
  bool downloaded = false;
};

struct Period {
  Instant start;
  Instant end;
  Instant uniform(Rng& rng) const {
    return Instant{seconds{uniform_int(rng, start.time_since_epoch().count(), end.time_since_epoch().count())}};
  }
};

// ---- background wear-and-tear profiles ------------------------------------

Artifact windows_system(Rng& rng, const ScenarioParams& p, const Period& period) {
  static const std::vector<ExtensionWeight> exts{{"dll", 45}, {"exe", 10}, {"mui", 15}, {"sys", 5},
                                                 {"dat", 5},  {"inf", 5},  {"xml", 5},  {"manifest", 10}};
  Artifact a;
  std::string dir{pick(rng, std::array<std::string_view, 4>{"/Windows/System32", "/Windows/SysWOW64",
                                                              "/Windows/System32/drivers", "/Windows/System32/en-US"})};
  if (uniform_int(rng, 0, 3) == 0)
    dir = "/Windows/WinSxS/x86_microsoft-windows-" + word_name(rng) + "_31bf3856ad364e35_6.1.7601." +
          std::to_string(uniform_int(rng, 17000, 24000)) + "_none_" + random_token(rng, 16, "0123456789abcdef");
  a.path = dir + "/" + word_name(rng) + "." + pick_weighted(rng, exts);
  a.size_bytes = lognormal_bytes(rng, 200, 1.3);
  // most system files land at install time; the rest arrive with updates
  a.crtime = uniform_int(rng, 0, 4) ? p.system_install_time + seconds{uniform_int(rng, 0, 3 * 3600)}
                                    : period.uniform(rng);
  a.event_rate = p.event_rate_benign * 0.8;
  return a;
}

Artifact program_files(Rng& rng, const ScenarioParams& p, const Period& period, const std::vector<Instant>& installs) {
  static const std::vector<ExtensionWeight> exts{{"dll", 35}, {"exe", 10}, {"pak", 10}, {"dat", 10},
                                                 {"json", 10}, {"png", 10}, {"ico", 5},  {"xml", 10}};
  Artifact a;
  const auto product = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(installs.size()) - 1));
  std::string dir = std::string(pick(rng, std::array<std::string_view, 2>{"/Program Files", "/Program Files (x86)"})) +
                    "/Vendor" + std::to_string(product) + "/Product" + std::to_string(product);
  const auto sub = uniform_int(rng, 0, 2);
  for (std::int64_t i = 0; i < sub; ++i) dir += "/" + std::string(pick(rng, kWords));
  a.path = dir + "/" + word_name(rng) + "." + pick_weighted(rng, exts);
  a.size_bytes = lognormal_bytes(rng, 120, 1.5);
  a.crtime = std::min(installs[product] + seconds{uniform_int(rng, 0, 600)}, period.end);
  a.event_rate = p.event_rate_benign;
  return a;
}

Artifact appdata_cache(Rng& rng, const ScenarioParams& p, const Period& period) {
  static const std::vector<ExtensionWeight> exts{{"", 40}, {"tmp", 15}, {"db", 10}, {"log", 15}, {"json", 10}, {"dat", 10}};
  Artifact a;
  std::string dir = "/Users/" + p.user + "/AppData/Local/" + std::string(pick(rng, kWords)) + "/" +
                    std::string(pick(rng, kWords)) + "/Cache";
  const auto sub = uniform_int(rng, 0, 2);
  for (std::int64_t i = 0; i < sub; ++i) dir += "/" + random_token(rng, 2, "0123456789abcdef");
  const std::string ext = pick_weighted(rng, exts);
  a.path = dir + "/" + (ext.empty() ? "f_" + random_token(rng, 6, "0123456789abcdef")
                                    : word_name(rng) + "." + ext);
  a.size_bytes = lognormal_bytes(rng, 20, 1.6);
  a.crtime = period.uniform(rng);
  a.event_rate = p.event_rate_benign * 1.3;
  return a;
}

Artifact browser_cache(Rng& rng, const ScenarioParams& p, const Period& period) {
  static const std::vector<ExtensionWeight> exts{{"jpg", 35}, {"png", 20}, {"gif", 15}, {"js", 15}, {"css", 5}, {"htm", 10}};
  Artifact a;
  a.path = "/Users/" + p.user + "/AppData/Local/Microsoft/Windows/Temporary Internet Files/Content.IE5/" +
           random_token(rng, 8, kUpperAlnum) + "/" + random_token(rng, static_cast<std::size_t>(uniform_int(rng, 6, 14)), kAlnum) +
           "[1]." + pick_weighted(rng, exts);
  a.size_bytes = lognormal_bytes(rng, 15, 1.4);
  a.crtime = period.uniform(rng);
  a.event_rate = p.event_rate_benign * 0.7;
  a.downloaded = true;
  return a;
}

Artifact user_documents(Rng& rng, const ScenarioParams& p, const Period& period) {
  static const std::vector<ExtensionWeight> exts{{"docx", 30}, {"pdf", 30}, {"xlsx", 15}, {"txt", 15}, {"pptx", 10}};
  Artifact a;
  std::string dir = "/Users/" + p.user + "/Documents";
  if (uniform_int(rng, 0, 1)) dir += "/" + std::string(pick(rng, kWords));
  a.path = dir + "/" + word_name(rng) + "." + pick_weighted(rng, exts);
  a.size_bytes = lognormal_bytes(rng, 150, 1.2);
  a.crtime = period.uniform(rng);
  a.event_rate = p.event_rate_benign * 1.6;
  return a;
}

// Personal photos and videos: the benign look-alikes of the planted material.
Artifact user_media(Rng& rng, const ScenarioParams& p, const Period& period, std::vector<Instant>& albums) {
  static const std::vector<ExtensionWeight> exts{{"jpg", 60}, {"png", 15}, {"mp4", 15}, {"avi", 5}, {"zip", 5}};
  Artifact a;
  const auto album = static_cast<std::size_t>(uniform_int(rng, 0, static_cast<std::int64_t>(albums.size()) - 1));
  std::string dir = "/Users/" + p.user + "/" +
                    std::string(pick(rng, std::array<std::string_view, 3>{"Pictures", "Videos", "Downloads"}));
  if (uniform_int(rng, 0, 2)) dir += "/Album" + std::to_string(album);
  a.path = dir + "/" + (uniform_int(rng, 0, 1) ? "IMG_" + std::to_string(uniform_int(rng, 1000, 9999))
                                               : word_name(rng)) +
           "." + pick_weighted(rng, exts);
  a.size_bytes = lognormal_bytes(rng, 1800, 1.0);
  a.crtime = uniform_int(rng, 0, 3) ? std::min(albums[album] + seconds{uniform_int(rng, 0, 4 * 3600)}, period.end)
                                    : period.uniform(rng);
  a.event_rate = p.event_rate_benign * 1.2;
  a.downloaded = dir.find("Downloads") != std::string::npos;
  return a;
}

Artifact temp_logs(Rng& rng, const ScenarioParams& p, const Period& period) {
  static const std::vector<ExtensionWeight> exts{{"log", 40}, {"tmp", 30}, {"etl", 15}, {"txt", 15}};
  Artifact a;
  std::string dir(pick(rng, std::array<std::string_view, 3>{"/Windows/Temp", "/Windows/Logs/CBS", "/Windows/Prefetch"}));
  if (uniform_int(rng, 0, 1)) dir = "/Users/" + p.user + "/AppData/Local/Temp";
  a.path = dir + "/" + word_name(rng) + "." + pick_weighted(rng, exts);
  a.size_bytes = lognormal_bytes(rng, 40, 1.8);
  a.crtime = period.uniform(rng);
  a.event_rate = p.event_rate_benign;
  return a;
}

std::string cluster_directory(Rng& rng, const ScenarioParams& p, std::size_t cluster) {
  std::vector<std::string> parts{"Users", p.user, "AppData", "Roaming"};
  parts.resize(std::min(parts.size(), p.cluster_dir_depth));
  while (parts.size() < p.cluster_dir_depth)
    parts.push_back(std::string(pick(rng, kWords)) + random_token(rng, 3, "0123456789") + "_" + std::to_string(cluster));
  std::string dir;
  for (const auto& part : parts) dir += "/" + part;
  return dir;
}

// ---- events ----------------------------------------------------------------

struct EventKind {
  std::string_view macb, source, sourcetype, type;
};

constexpr EventKind kCreated{"...B", "FILE", "NTFS $MFT", "Creation Time"};
constexpr std::array<EventKind, 5> kFollowUp{{
    {".A..", "FILE", "NTFS $MFT", "Last Access Time"},
    {"M...", "FILE", "NTFS $MFT", "Content Modification Time"},
    {"..C.", "FILE", "NTFS $MFT", "Metadata Modification Time"},
    {".A..", "LNK", "Windows Shortcut", "Last Access Time"},
    {"M...", "RECBIN", "Recycle Bin", "Content Modification Time"},
}};
constexpr EventKind kDownloaded{"...B", "WEBHIST", "MSIE Cache File URL record", "File Downloaded"};

TimelineEvent make_event(const EventKind& kind, Instant at, const ScenarioParams& p, const std::string& filename,
                         std::optional<std::uint64_t> inode, std::string desc) {
  TimelineEvent e;
  const auto day_point = std::chrono::floor<std::chrono::days>(at);
  e.date = std::chrono::year_month_day{day_point};
  e.time_of_day = at - day_point;
  e.timezone = "UTC";
  e.macb = *Macb::parse(kind.macb);
  e.source = kind.source;
  e.sourcetype = kind.sourcetype;
  e.event_type = kind.type;
  e.user = p.user;
  e.host = p.host;
  e.short_desc = std::string(kind.type);
  e.desc = std::move(desc);
  e.version = "2";
  e.filename = filename;
  e.inode = inode;
  e.notes = "-";
  e.format = kind.source == "FILE" ? "filestat" : "-";
  e.extra = "-";
  e.instant = at;
  return e;
}

void write_text(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::persistence, "cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw Error(ErrorCode::persistence, "write failed for " + path.string());
}

}  // namespace

void ScenarioParams::validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::generation, "infeasible scenario: " + why); };
  if (n_benign == 0 || n_illegal == 0) fail("n_benign and n_illegal must be positive");
  if (clusters.empty()) fail("at least one cluster is required");
  if (clusters.size() > n_illegal) fail("more clusters than illegal artefacts");
  if (cluster_dir_depth < 1 || cluster_dir_depth > 32) fail("cluster_dir_depth must be in [1, 32]");
  if (!(event_rate_benign >= 1.0) || !(event_rate_illegal >= 1.0)) fail("event rates must be >= 1");
  if (extension_mix.empty()) fail("extension_mix is empty");
  for (const auto& e : extension_mix)
    if (!(e.weight > 0)) fail("extension weights must be positive");
  if (!(known_fraction >= 0.0 && known_fraction <= 1.0)) fail("known_fraction must be in [0, 1]");
  if (acquisition_time <= system_install_time) fail("acquisition_time must follow system_install_time");
  if (source_id.empty()) fail("source_id is empty");
  for (const auto& c : clusters) {
    if (c.crtime_spread.count() < 0) fail("negative crtime spread");
    if (c.crtime_center - c.crtime_spread < system_install_time || c.crtime_center + c.crtime_spread > acquisition_time)
      fail("cluster creation window falls outside the activity period");
    if (c.size_kb_spread > c.size_kb_center) fail("size spread exceeds its centre");
    // each planted file needs a distinct size when the cluster is degenerate
    const auto per_cluster = (n_illegal + clusters.size() - 1) / clusters.size();
    if (c.size_kb_spread == 0 && c.crtime_spread.count() == 0 && per_cluster > 1024)
      fail("zero spreads cannot give distinct planted files");
  }
}

ScenarioParams scenario_with_ratio(std::size_t total, double illegal_fraction, std::size_t cluster_count,
                                   std::uint64_t seed) {
  using namespace std::chrono;
  ScenarioParams p;
  p.seed = seed;
  p.n_illegal = static_cast<std::size_t>(std::llround(static_cast<double>(total) * illegal_fraction));
  p.n_illegal = std::clamp<std::size_t>(p.n_illegal, 1, total - 1);
  p.n_benign = total - p.n_illegal;
  p.system_install_time = sys_days{year{2019} / 1 / 10} + hours{9};
  p.acquisition_time = sys_days{year{2019} / 6 / 1} + hours{12};

  Rng rng(splitmix64(seed ^ 0xc1a57e5ULL));
  const std::int64_t lo = (p.system_install_time + days{14}).time_since_epoch().count();
  const std::int64_t hi = (p.acquisition_time - days{7}).time_since_epoch().count();
  for (std::size_t i = 0; i < std::max<std::size_t>(1, cluster_count); ++i) {
    ClusterSpec c;
    c.size_kb_center = static_cast<std::uint64_t>(uniform_int(rng, 600, 3000));
    c.size_kb_spread = c.size_kb_center / 4;
    c.crtime_center = Instant{seconds{uniform_int(rng, lo, hi)}};
    c.crtime_spread = hours{3};
    p.clusters.push_back(c);
  }
  return p;
}

GeneratedCase generate(const ScenarioParams& p) {
  p.validate();
  Rng rng(p.seed);
  const Period period{p.system_install_time, p.acquisition_time};

  std::vector<Instant> installs(12), albums(20);
  for (auto& t : installs) t = period.uniform(rng);
  installs.front() = p.system_install_time + std::chrono::hours{4};
  for (auto& t : albums) t = period.uniform(rng);

  std::vector<Artifact> artifacts;
  artifacts.reserve(p.n_benign + p.n_illegal);
  const std::vector<double> profile_weights{30, 15, 20, 15, 8, 7, 5};
  std::discrete_distribution<int> profile(profile_weights.begin(), profile_weights.end());
  for (std::size_t i = 0; i < p.n_benign; ++i) {
    switch (profile(rng)) {
      case 0: artifacts.push_back(windows_system(rng, p, period)); break;
      case 1: artifacts.push_back(program_files(rng, p, period, installs)); break;
      case 2: artifacts.push_back(appdata_cache(rng, p, period)); break;
      case 3: artifacts.push_back(browser_cache(rng, p, period)); break;
      case 4: artifacts.push_back(user_documents(rng, p, period)); break;
      case 5: artifacts.push_back(user_media(rng, p, period, albums)); break;
      default: artifacts.push_back(temp_logs(rng, p, period)); break;
    }
  }

  std::vector<std::string> cluster_dirs;
  for (std::size_t c = 0; c < p.clusters.size(); ++c) cluster_dirs.push_back(cluster_directory(rng, p, c));
  for (std::size_t i = 0; i < p.n_illegal; ++i) {
    const std::size_t c = i % p.clusters.size();
    const auto& spec = p.clusters[c];
    Artifact a;
    a.klass = 1;
    const auto kb = uniform_int(rng, static_cast<std::int64_t>(spec.size_kb_center - spec.size_kb_spread),
                                static_cast<std::int64_t>(spec.size_kb_center + spec.size_kb_spread));
    a.size_bytes = static_cast<std::uint64_t>(kb) * 1024 + static_cast<std::uint64_t>(uniform_int(rng, 0, 1023));
    a.crtime = spec.crtime_center + seconds{uniform_int(rng, -spec.crtime_spread.count(), spec.crtime_spread.count())};
    a.path = cluster_dirs[c] + "/" + random_token(rng, static_cast<std::size_t>(uniform_int(rng, 8, 12)), kAlnum) + "." +
             pick_weighted(rng, p.extension_mix);
    a.event_rate = p.event_rate_illegal;
    artifacts.push_back(std::move(a));
  }

  // interleave planted files with the background so inode order carries no signal
  std::shuffle(artifacts.begin(), artifacts.end(), rng);

  GeneratedCase out;
  out.source_id = p.source_id;
  out.acquisition_time = p.acquisition_time;
  std::set<std::string> paths;
  std::uint64_t next_inode = 64;
  std::vector<TimelineEvent> events;
  for (std::size_t i = 0; i < artifacts.size(); ++i) {
    auto& a = artifacts[i];
    // keep full paths unique
    if (!paths.insert(a.path).second) {
      auto dot = a.path.rfind('.');
      auto slash = a.path.rfind('/');
      const std::string suffix = " (" + std::to_string(i) + ")";
      if (dot != std::string::npos && dot > slash) a.path.insert(dot, suffix);
      else a.path += suffix;
      paths.insert(a.path);
    }
    next_inode += static_cast<std::uint64_t>(uniform_int(rng, 1, 3));

    FileMetadata m;
    m.source_id = p.source_id;
    m.path = a.path;
    m.name = final_path_component(a.path);
    m.size_bytes = a.size_bytes;
    m.inode = next_inode;
    m.hash = synthetic_digest(p.seed, i);
    m.owner = a.path.rfind("/Users/", 0) == 0 ? p.user : "SYSTEM";
    m.crtime = a.crtime;

    std::poisson_distribution<int> extra(std::max(0.0, a.event_rate - 1.0));
    const int n_events = 1 + extra(rng);
    events.push_back(make_event(a.downloaded ? kDownloaded : kCreated, a.crtime, p, a.path, m.inode,
                                std::string(a.downloaded ? "URL: http://" : "File: ") + a.path));
    Instant last_modified = a.crtime, last_access = a.crtime, last_change = a.crtime;
    for (int k = 1; k < n_events; ++k) {
      const auto& kind = pick(rng, kFollowUp);
      const Instant at{seconds{uniform_int(rng, a.crtime.time_since_epoch().count(),
                                           p.acquisition_time.time_since_epoch().count())}};
      if (kind.macb == "M...") last_modified = std::max(last_modified, at);
      if (kind.macb == ".A..") last_access = std::max(last_access, at);
      if (kind.macb == "..C.") last_change = std::max(last_change, at);
      events.push_back(make_event(kind, at, p, a.path, m.inode, std::string(kind.type) + ", " + m.name));
    }
    m.mtime = last_modified;
    m.atime = last_access;
    m.ctime = last_change;

    out.ground_truth.emplace(m.hash, a.klass);
    if (out.ground_truth.size() != i + 1) throw Error(ErrorCode::generation, "synthetic digest collision");
    out.metadata.push_back(std::move(m));
  }

  // registry activity and deleted-file traces that belong to no listed artefact
  const std::size_t orphans = std::max<std::size_t>(1, events.size() / 12);
  constexpr EventKind kRegistry{"M...", "REG", "Registry Key", "Key Last Written"};
  for (std::size_t i = 0; i < orphans; ++i) {
    const Instant at = period.uniform(rng);
    if (i % 10 == 9) {
      events.push_back(make_event(kCreated, at, p, "/Users/" + p.user + "/deleted_" + std::to_string(i) + ".tmp",
                                  next_inode + 1000 + i, "File: deleted entry"));
    } else {
      const std::string key = "HKCU\\Software\\" + std::string(pick(rng, kWords)) + "\\" + std::string(pick(rng, kWords));
      events.push_back(make_event(kRegistry, at, p, "/Users/" + p.user + "/NTUSER.DAT", std::nullopt,
                                  "[" + key + "] Value: \"" + std::to_string(uniform_int(rng, 0, 99)) + "\", type: REG_SZ"));
    }
  }
  std::stable_sort(events.begin(), events.end(),
                   [](const TimelineEvent& a, const TimelineEvent& b) { return a.instant < b.instant; });
  out.events = std::move(events);

  // previously known subset: the same fraction of each class
  std::array<std::vector<std::string>, 2> by_class;
  for (const auto& m : out.metadata) by_class[out.ground_truth.at(m.hash)].push_back(m.hash);
  for (auto& hashes : by_class) {
    std::shuffle(hashes.begin(), hashes.end(), rng);
    const auto n_known =
        static_cast<std::size_t>(std::floor(p.known_fraction * static_cast<double>(hashes.size()) + 1e-9));
    out.known_fraction_hashes.insert(hashes.begin(), hashes.begin() + static_cast<std::ptrdiff_t>(n_known));
  }
  return out;
}

EmittedFiles emit(const GeneratedCase& c, const std::filesystem::path& out_dir) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::persistence, "cannot create " + out_dir.string() + ": " + ec.message());

  EmittedFiles files{out_dir / "artifacts.csv", out_dir / "timeline.csv", out_dir / "ground_truth.csv",
                     out_dir / "known_base.csv"};
  write_text(files.artifacts, [&](std::ostream& out) { write_artifact_csv(out, c.metadata); });
  write_text(files.timeline, [&](std::ostream& out) { write_l2tcsv(out, c.events); });
  write_text(files.ground_truth, [&](std::ostream& out) {
    out << "hash,class\n";
    for (const auto& [hash, klass] : c.ground_truth) out << hash << ',' << klass << '\n';
  });
  write_text(files.known_base, [&](std::ostream& out) {
    out << "hash,label,case_id,recorded_at\n";
    const std::string at = format_iso8601_utc(c.acquisition_time);
    for (const auto& hash : c.known_fraction_hashes)
      out << hash << ',' << (c.ground_truth.at(hash) ? "illegal" : "benign") << ",seed," << at << '\n';
  });
  return files;
}

std::vector<FeatureVector> labelled_vectors(const GeneratedCase& c) {
  auto collated = collate(c.metadata, c.events, c.source_id);
  std::vector<FeatureVector> out;
  out.reserve(collated.records.size());
  for (const auto& r : collated.records) {
    auto v = extract(r, c.acquisition_time);
    const auto it = c.ground_truth.find(r.metadata.hash);
    if (it != c.ground_truth.end()) v.class_label = it->second;
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace triage
