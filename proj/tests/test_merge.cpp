#include <doctest.h>

#include <map>

#include "support.hpp"
#include "triage/error.hpp"
#include "triage/merge.hpp"

using namespace triage;
using namespace testsupport;

namespace {

FileMetadata meta(std::uint64_t inode, std::string source = "img1") {
  FileMetadata m;
  m.source_id = std::move(source);
  m.inode = inode;
  m.path = "/d/f" + std::to_string(inode);
  m.name = "f" + std::to_string(inode);
  return m;
}

TimelineEvent event(std::optional<std::uint64_t> inode, std::int64_t at = 0, std::string type = "t",
                    std::string source = "FILE") {
  TimelineEvent e;
  e.inode = inode;
  e.instant = Instant{seconds{1'500'000'000 + at}};
  e.event_type = std::move(type);
  e.source = std::move(source);
  return e;
}

}  // namespace

TEST_SUITE("merge") {
  TEST_CASE("events attach to their inode") {
    const std::vector<FileMetadata> m{meta(5), meta(7)};
    const std::vector<TimelineEvent> e{event(5), event(5), event(7), event(5)};
    const auto r = collate(m, e, "img1");
    REQUIRE(r.records.size() == 2);
    CHECK(r.records[0].key == ArtifactKey{"img1", 5});
    CHECK(r.records[0].events.size() == 3);
    CHECK(r.records[1].events.size() == 1);
    CHECK(r.orphan_count == 0);
  }

  TEST_CASE("unmatched and inode-less events are orphans") {
    const std::vector<FileMetadata> m{meta(5), meta(7)};
    const std::vector<TimelineEvent> e{event(9), event(std::nullopt), event(5)};
    const auto r = collate(m, e, "img1");
    CHECK(r.orphan_count == 2);
    CHECK(r.records[0].events.size() == 1);
  }

  TEST_CASE("no events leaves every record empty") {
    const std::vector<FileMetadata> m{meta(1), meta(2)};
    const auto r = collate(m, {}, "img1");
    for (const auto& rec : r.records) {
      CHECK(rec.events.empty());
      CHECK(summarize_events(rec, {}).total_count == 0);
    }
  }

  TEST_CASE("duplicate metadata keeps the first row") {
    auto second = meta(5);
    second.path = "/other";
    const std::vector<FileMetadata> m{meta(5), second, meta(5, "img2")};
    const auto r = collate(m, {}, "img1");
    REQUIRE(r.records.size() == 2);
    CHECK(r.records[0].metadata.path == "/d/f5");
    REQUIRE(r.duplicate_keys.size() == 1);
    CHECK(r.duplicate_keys[0] == ArtifactKey{"img1", 5});
  }

  TEST_CASE("events are chronological with ties in input order") {
    const std::vector<FileMetadata> m{meta(1)};
    const std::vector<TimelineEvent> e{event(1, 30, "c"), event(1, 10, "a"), event(1, 30, "d"), event(1, 10, "b")};
    const auto r = collate(m, e, "img1");
    std::vector<std::string> order;
    for (const auto& ev : r.records[0].events) order.push_back(ev.event_type);
    CHECK(order == std::vector<std::string>{"a", "b", "c", "d"});
  }

  TEST_CASE("summary counts within half-open windows") {
    const std::int64_t day = 86400;
    ArtifactRecord rec;
    rec.events = {event(1, 0), event(1, 3600), event(1, 7 * day)};
    const Instant start{seconds{1'500'000'000}};
    const std::vector<TimeWindow> windows{{start, start + seconds{day}}, {start + seconds{3600}, start + seconds{7 * day}}};
    const auto s = summarize_events(rec, windows);
    CHECK(s.total_count == 3);
    CHECK(s.count_in_window == std::vector<std::size_t>{2, 1});
  }

  TEST_CASE("modal type and source with lexicographic tie-break") {
    ArtifactRecord rec;
    rec.events = {event(1, 0, "A", "WEBHIST"), event(1, 1, "A", "FILE"), event(1, 2, "B", "FILE")};
    CHECK(summarize_events(rec, {}).top_type == "A");
    CHECK(summarize_events(rec, {}).top_source == "FILE");
    rec.events = {event(1, 0, "B"), event(1, 1, "A")};
    CHECK(summarize_events(rec, {}).top_type == "A");
  }

  TEST_CASE("empty or inverted window is rejected") {
    ArtifactRecord rec;
    const Instant t{seconds{100}};
    const std::vector<TimeWindow> bad{{t, t}};
    try {
      summarize_events(rec, bad);
      FAIL("expected invalid_window");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::invalid_window);
    }
  }

  TEST_CASE("property: conservation, idempotence and brute-force counts") {
    Rng rng(31);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<FileMetadata> m;
      const auto n_meta = uniform(rng, 0, 40);
      for (int i = 0; i < n_meta; ++i) m.push_back(meta(static_cast<std::uint64_t>(uniform(rng, 0, 60))));
      std::vector<TimelineEvent> e;
      const auto n_events = uniform(rng, 0, 200);
      for (int i = 0; i < n_events; ++i) {
        std::optional<std::uint64_t> inode;
        if (uniform(rng, 0, 9)) inode = static_cast<std::uint64_t>(uniform(rng, 0, 70));
        e.push_back(event(inode, uniform(rng, 0, 50)));
      }

      const auto r = collate(m, e, "img1");
      std::size_t attached = 0;
      for (const auto& rec : r.records) attached += rec.events.size();
      CHECK(attached + r.orphan_count == e.size());

      // naive O(n*m) scan
      std::map<std::uint64_t, std::size_t> naive;
      for (const auto& rec : r.records) {
        std::size_t count = 0;
        for (const auto& ev : e)
          if (ev.inode && *ev.inode == rec.key.inode) ++count;
        naive[rec.key.inode] = count;
      }
      for (const auto& rec : r.records) CHECK(rec.events.size() == naive[rec.key.inode]);

      std::set<std::uint64_t> distinct;
      for (const auto& x : m) distinct.insert(x.inode);
      CHECK(r.records.size() == distinct.size());

      std::vector<FileMetadata> again_meta;
      std::vector<TimelineEvent> again_events;
      for (const auto& rec : r.records) {
        again_meta.push_back(rec.metadata);
        again_events.insert(again_events.end(), rec.events.begin(), rec.events.end());
      }
      const auto again = collate(again_meta, again_events, "img1");
      CHECK(again.records == r.records);
      CHECK(again.orphan_count == 0);
    }
  }

  TEST_CASE("merged export appends event_count") {
    const std::vector<FileMetadata> m{meta(5)};
    const std::vector<TimelineEvent> e{event(5), event(5)};
    const auto r = collate(m, e, "img1");
    std::ostringstream out;
    write_merged_csv(out, r.records);
    CHECK(out.str() ==
          "source_id,path,size_bytes,inode,hash,owner,crtime,atime,mtime,ctime,event_count\n"
          "img1,/d/f5,0,5,,,,,,,2\n");
  }

  TEST_CASE("labels parse") {
    CHECK(parse_label("benign") == Label::benign);
    CHECK(parse_label("illegal") == Label::illegal);
    CHECK(parse_label("1") == Label::illegal);
    CHECK_FALSE(parse_label("maybe"));
    CHECK(class_of(Label::illegal) == 1);
  }
}
