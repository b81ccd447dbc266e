#include <doctest.h>

#include <fstream>

#include "support.hpp"
#include "triage/error.hpp"
#include "triage/pipeline.hpp"
#include "triage/synthgen.hpp"

using namespace triage;
using namespace testsupport;

namespace {

struct Fixture {
  TempDir dir;
  GeneratedCase generated;
  EmittedFiles files;

  explicit Fixture(std::size_t total = 110, double fraction = 10.0 / 110.0, double known_fraction = 0.5,
                   std::uint64_t seed = 4) {
    auto p = scenario_with_ratio(total, fraction, 1, seed);
    p.known_fraction = known_fraction;
    generated = generate(p);
    files = emit(generated, dir / "input");
  }

  PipelineConfig config() const {
    PipelineConfig c;
    c.timeline_path = files.timeline;
    c.metadata_path = files.artifacts;
    c.known_base_path = files.known_base;
    return c;
  }
};

RankedEntry entry(std::string path, double score, std::uint64_t inode = 0) {
  return {{"img1", inode}, std::move(path), "", score, 0};
}

}  // namespace

TEST_SUITE("pipeline") {
  TEST_CASE("known and unknown bookkeeping") {
    Fixture f;
    const auto report = run_case(f.config());
    CHECK(report.counts.total == 110);
    CHECK(report.counts.known_benign + report.counts.known_illegal == 55);
    CHECK(report.counts.known_illegal == 5);
    CHECK(report.counts.unknown == 55);
    CHECK(report.ranking.size() == report.counts.unknown);
    CHECK(report.counts.known_benign + report.counts.known_illegal + report.counts.unknown == report.counts.total);
    CHECK(report.counts.timeline_diagnostics == 0);
    CHECK(report.counts.metadata_diagnostics == 0);
    CHECK(report.model.training_rows == 55);
    CHECK(report.holdout.available);

    const auto base = KnownBase::load(f.files.known_base);
    for (const auto& e : report.ranking) CHECK(base.lookup(e.hash) == LookupResult::unknown);
    for (std::size_t i = 1; i < report.ranking.size(); ++i) {
      const auto& a = report.ranking[i - 1];
      const auto& b = report.ranking[i];
      CHECK((a.score > b.score || (a.score == b.score && a.path <= b.path)));
    }
  }

  TEST_CASE("threshold above one predicts nothing") {
    Fixture f;
    auto c = f.config();
    c.analysis.threshold = 1.01;
    const auto report = run_case(c);
    CHECK(report.counts.predicted_suspicious == 0);
    for (const auto& e : report.ranking) CHECK(e.predicted == 0);
  }

  TEST_CASE("every algorithm runs the whole flow") {
    Fixture f(300, 0.1);
    for (auto a : kAllAlgorithms) {
      auto c = f.config();
      c.analysis.train.algorithm = a;
      const auto report = run_case(c);
      CHECK(report.model.algorithm == a);
      CHECK(report.ranking.size() == report.counts.unknown);
    }
  }

  TEST_CASE("identical runs write identical files") {
    Fixture f;
    auto c = f.config();
    c.output_dir = f.dir / "out1";
    const auto first = serialize_report(run_case(c));
    c.output_dir = f.dir / "out2";
    const auto second = serialize_report(run_case(c));
    CHECK(first == second);
    for (const auto* name : {"report.json", "ranking.csv", "model.json", "dataset.csv", "merged.csv"}) {
      CAPTURE(name);
      CHECK(std::filesystem::exists(f.dir / "out1" / name));
      CHECK(read_text(f.dir / "out1" / name) == read_text(f.dir / "out2" / name));
    }
    CHECK(read_text(f.dir / "out1" / "report.json") == first);
  }

  TEST_CASE("single-class known set is degenerate") {
    Fixture f;
    TempDir d;
    const auto benign_only = d / "kb.csv";
    {
      auto base = KnownBase::open(benign_only);
      for (const auto& [hash, klass] : f.generated.ground_truth)
        if (klass == 0) base.upsert({hash, Label::benign, "seed", f.generated.acquisition_time});
    }
    auto c = f.config();
    c.known_base_path = benign_only;
    for (auto a : {Algorithm::gnb, Algorithm::svm, Algorithm::logreg}) {
      c.analysis.train.algorithm = a;
      try {
        run_case(c);
        FAIL("expected degenerate_class");
      } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::degenerate_class);
      }
    }
    // an empty base leaves nothing to train on at all
    c.known_base_path = d / "missing.csv";
    c.analysis.train.algorithm = Algorithm::tree;
    try {
      run_case(c);
      FAIL("expected degenerate_class");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::degenerate_class);
    }
  }

  TEST_CASE("everything known gives an empty ranking") {
    Fixture f(110, 10.0 / 110.0, 1.0);
    const auto report = run_case(f.config());
    CHECK(report.counts.unknown == 0);
    CHECK(report.ranking.empty());
  }

  TEST_CASE("rank_unknown takes the head of the sorted ranking") {
    CaseReport report;
    report.ranking = {entry("a", 0.9, 1), entry("b", 0.2, 2), entry("c", 0.9, 3)};
    sort_ranking(report.ranking);
    const auto top = rank_unknown(report, 2);
    REQUIRE(top.size() == 2);
    CHECK(top[0].path == "a");
    CHECK(top[1].path == "c");
    CHECK(rank_unknown(report, 0).empty());
    CHECK(rank_unknown(report, 99).size() == 3);
    try {
      rank_unknown(report, -1);
      FAIL("expected invalid_argument");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::invalid_argument);
    }
  }

  TEST_CASE("equal score and path fall back to the key") {
    std::vector<RankedEntry> r{entry("x", 0.5, 9), entry("x", 0.5, 3)};
    sort_ranking(r);
    CHECK(r[0].key.inode == 3);
  }

  TEST_CASE("report json round-trips") {
    Fixture f;
    const auto text = serialize_report(run_case(f.config()));
    CHECK(serialize_report(parse_report(text)) == text);
    CHECK_THROWS_AS(parse_report("{}"), Error);
    CHECK_THROWS_AS(parse_report("not json"), Error);
  }

  TEST_CASE("extra training rows are appended") {
    Fixture f;
    auto c = f.config();
    const auto extra_path = f.dir / "extra.csv";
    {
      const auto other = labelled_vectors(generate(scenario_with_ratio(100, 0.1, 1, 77)));
      std::ofstream out(extra_path);
      write_feature_csv(out, other);
    }
    c.extra_training_path = extra_path;
    const auto report = run_case(c);
    CHECK(report.model.extra_training_rows == 100);
    CHECK(report.model.training_rows == 155);
  }

  TEST_CASE("metadata format detection") {
    CHECK(parse_metadata_format("bodyfile") == MetadataFormat::bodyfile);
    CHECK(parse_metadata_format("csv") == MetadataFormat::artifact_csv);
    CHECK(parse_metadata_format("auto") == MetadataFormat::automatic);
    CHECK_FALSE(parse_metadata_format("xml"));

    std::istringstream timeline(std::string(
        "date,time,timezone,MACB,source,sourcetype,type,user,host,short,desc,version,filename,inode,notes,format,extra\n"
        "04/25/2019,10:01:12,UTC,MACB,FILE,NTFS,Creation Time,kim,H,f,d,2,/docs/r.pdf,77,-,filestat,-\n"));
    std::istringstream body("d41d8cd98f00b204e9800998ecf8427e|/docs/r.pdf|77|r/rrwx|0|0|2048|1556100000|1556100000|1556100000|1556000000\n");
    const auto data = load_case(timeline, body, MetadataFormat::automatic, std::string("disk"), std::nullopt);
    REQUIRE(data.records.size() == 1);
    CHECK(data.source_id == "disk");
    CHECK(data.records[0].events.size() == 1);
    CHECK(data.reference_time == *parse_iso8601_utc("2019-04-25T10:01:12Z"));
  }
}
