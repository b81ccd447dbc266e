#include <doctest.h>

#include <fstream>

#include "support.hpp"
#include "triage/error.hpp"
#include "triage/knownbase.hpp"
#include "triage/synthgen.hpp"

using namespace triage;
using namespace testsupport;

namespace {

std::string parent_dir(const std::string& path) { return path.substr(0, path.rfind('/')); }

std::string case_bytes(const GeneratedCase& c) {
  std::ostringstream out;
  write_artifact_csv(out, c.metadata);
  write_l2tcsv(out, c.events);
  for (const auto& [h, k] : c.ground_truth) out << h << k;
  for (const auto& h : c.known_fraction_hashes) out << h;
  return out.str();
}

}  // namespace

TEST_SUITE("synthgen") {
  TEST_CASE("planted files share one directory") {
    const auto c = generate(scenario_with_ratio(110, 10.0 / 110.0, 1, 3));
    CHECK(c.metadata.size() == 110);
    std::set<std::string> illegal_dirs;
    std::size_t illegal = 0;
    for (const auto& m : c.metadata) {
      REQUIRE(c.ground_truth.count(m.hash) == 1);
      if (c.ground_truth.at(m.hash) == 1) {
        ++illegal;
        illegal_dirs.insert(parent_dir(m.path));
      }
    }
    CHECK(illegal == 10);
    CHECK(illegal_dirs.size() == 1);
    CHECK(directory_depth(*illegal_dirs.begin() + "/x") == 5);
  }

  TEST_CASE("same seed gives identical output, another seed does not") {
    const auto p = scenario_with_ratio(300, 0.1, 2, 9);
    CHECK(case_bytes(generate(p)) == case_bytes(generate(p)));
    auto q = p;
    q.seed = 10;
    CHECK(case_bytes(generate(q)) != case_bytes(generate(p)));
  }

  TEST_CASE("property: class ratio is exact and invariants hold") {
    Rng rng(30);
    for (int trial = 0; trial < 20; ++trial) {
      ScenarioParams p = scenario_with_ratio(static_cast<std::size_t>(uniform(rng, 20, 400)), uniform_real(rng, 0.02, 0.3),
                                             static_cast<std::size_t>(uniform(rng, 1, 3)),
                                             static_cast<std::uint64_t>(uniform(rng, 0, 1'000'000)));
      p.known_fraction = uniform_real(rng, 0, 1);
      const auto c = generate(p);
      std::size_t illegal = 0;
      std::set<std::string> hashes;
      for (const auto& m : c.metadata) {
        illegal += static_cast<std::size_t>(c.ground_truth.at(m.hash));
        hashes.insert(m.hash);
        CHECK(m.crtime <= p.acquisition_time);
      }
      CHECK(illegal == p.n_illegal);
      CHECK(c.metadata.size() == p.n_benign + p.n_illegal);
      CHECK(hashes.size() == c.metadata.size());
      for (const auto& h : c.known_fraction_hashes) CHECK(c.ground_truth.count(h) == 1);
      for (const auto& e : c.events) CHECK(e.instant <= p.acquisition_time);
      CHECK(std::is_sorted(c.events.begin(), c.events.end(),
                           [](const auto& a, const auto& b) { return a.instant < b.instant; }));
    }
  }

  TEST_CASE("emitted files parse cleanly") {
    TempDir dir;
    auto p = scenario_with_ratio(110, 10.0 / 110.0, 1, 4);
    const auto c = generate(p);
    const auto files = emit(c, dir.path());

    std::ifstream artifacts(files.artifacts);
    const auto parsed = parse_artifact_csv(artifacts);
    CHECK(parsed.diagnostics.empty());
    CHECK(parsed.records.size() == 110);
    CHECK(parsed.records == c.metadata);

    std::ifstream timeline(files.timeline);
    const auto events = parse_l2tcsv(timeline);
    CHECK(events.diagnostics.empty());
    CHECK(events.records.size() == c.events.size());

    const auto base = KnownBase::load(files.known_base);
    CHECK(base.size() == c.known_fraction_hashes.size());
    CHECK(base.size() == 55);
    for (const auto& h : c.known_fraction_hashes)
      CHECK(base.lookup(h) == (c.ground_truth.at(h) ? LookupResult::illegal : LookupResult::benign));

    const auto truth = read_text(files.ground_truth);
    CHECK(truth.rfind("hash,class\n", 0) == 0);
    CHECK(std::count(truth.begin(), truth.end(), '\n') == 111);
  }

  TEST_CASE("planted sizes centre on the cluster") {
    auto p = scenario_with_ratio(1100, 1000.0 / 1100.0, 1, 5);
    REQUIRE(p.n_illegal == 1000);
    const auto c = generate(p);
    const auto& cluster = p.clusters[0];
    double sum = 0;
    std::size_t n = 0;
    for (const auto& m : c.metadata) {
      if (c.ground_truth.at(m.hash) != 1) continue;
      const auto kb = m.size_bytes / 1024;
      CHECK(kb >= cluster.size_kb_center - cluster.size_kb_spread);
      CHECK(kb <= cluster.size_kb_center + cluster.size_kb_spread);
      CHECK(m.crtime >= cluster.crtime_center - cluster.crtime_spread);
      CHECK(m.crtime <= cluster.crtime_center + cluster.crtime_spread);
      sum += static_cast<double>(kb);
      ++n;
    }
    REQUIRE(n == 1000);
    // discrete uniform over 2s+1 values
    const double width = 2.0 * static_cast<double>(cluster.size_kb_spread) + 1.0;
    const double sigma = std::sqrt((width * width - 1.0) / 12.0);
    const double mean = sum / static_cast<double>(n);
    CHECK(std::abs(mean - static_cast<double>(cluster.size_kb_center)) <= 3.0 * sigma / std::sqrt(1000.0));
  }

  TEST_CASE("labelled vectors carry ground truth") {
    const auto c = generate(scenario_with_ratio(200, 0.1, 1, 6));
    const auto rows = labelled_vectors(c);
    REQUIRE(rows.size() == 200);
    std::size_t positives = 0;
    for (const auto& v : rows) {
      REQUIRE(v.class_label);
      positives += static_cast<std::size_t>(*v.class_label);
      CHECK(v.event_count >= 1);
      CHECK_FALSE(v.flagged());
    }
    CHECK(positives == 20);
  }

  TEST_CASE("infeasible parameters are rejected") {
    auto p = scenario_with_ratio(100, 0.1, 1, 1);
    auto expect_generation = [](const ScenarioParams& bad) {
      try {
        generate(bad);
        FAIL("expected generation error");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::generation);
      }
    };
    auto no_clusters = p;
    no_clusters.clusters.clear();
    expect_generation(no_clusters);
    auto zero = p;
    zero.n_illegal = 0;
    expect_generation(zero);
    auto outside = p;
    outside.clusters[0].crtime_center = p.acquisition_time;
    expect_generation(outside);
    auto degenerate = p;
    degenerate.n_illegal = 2000;
    degenerate.clusters[0].size_kb_spread = 0;
    degenerate.clusters[0].crtime_spread = seconds{0};
    expect_generation(degenerate);
  }
}
