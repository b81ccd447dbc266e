#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "triage/error.hpp"
#include "triage/eval.hpp"

using namespace triage;
using namespace testsupport;

namespace {

double round2(double x) { return std::round(x * 100.0) / 100.0; }

struct TableRow {
  const char* name;
  double precision, recall, f1;
};

// class-1 scores as published, dataset1 then dataset2 for each algorithm
const TableRow kPublished[] = {
    {"tree/d1", 0.99, 1.00, 0.99}, {"tree/d2", 1.00, 1.00, 1.00},  {"gnb/d1", 0.16, 0.97, 0.27},
    {"gnb/d2", 0.99, 1.00, 0.99},  {"knn/d1", 0.79, 0.71, 0.75},   {"knn/d2", 1.00, 1.00, 1.00},
    {"svm/d1", 0.82, 0.52, 0.64},  {"svm/d2", 1.00, 1.00, 1.00},   {"logreg/d1", 0.71, 0.67, 0.69},
    {"logreg/d2", 0.99, 1.00, 0.99},
};

}  // namespace

TEST_SUITE("eval") {
  TEST_CASE("confusion counts") {
    const std::vector<int> t{1, 1, 0, 0}, p{1, 0, 1, 0};
    CHECK(confusion(t, p, 1) == ConfusionCounts{1, 1, 1, 1});
    const auto same = confusion(t, t, 1);
    CHECK(same.fp == 0);
    CHECK(same.fn == 0);
    const std::vector<int> t2{1, 1, 1, 0}, p2{1, 0, 0, 0};
    const auto pos = confusion(t2, p2, 1), neg = confusion(t2, p2, 0);
    CHECK(neg.tp == pos.tn);
    CHECK(neg.tn == pos.tp);
    CHECK(neg.fp == pos.fn);
    CHECK(neg.fn == pos.fp);
    CHECK_THROWS_AS(confusion(t, std::vector<int>{1}, 1), Error);
  }

  TEST_CASE("f1 is the harmonic mean") {
    CHECK(prf(0.79, 0.71).f1 == doctest::Approx(0.7479).epsilon(1e-4));
    CHECK(prf(0.82, 0.52).f1 == doctest::Approx(0.6364).epsilon(1e-4));
    const auto zero = prf(ConfusionCounts{0, 0, 0, 5});
    CHECK(zero.precision == 0.0);
    CHECK(zero.recall == 0.0);
    CHECK(zero.f1 == 0.0);
    const auto c = prf(ConfusionCounts{3, 1, 2, 10});
    CHECK(c.precision == 0.75);
    CHECK(c.recall == 0.6);
    CHECK(c.f1 == doctest::Approx(2 * 0.75 * 0.6 / 1.35));
  }

  TEST_CASE("published precision/recall pairs reproduce the published f1") {
    for (const auto& row : kPublished) {
      CAPTURE(row.name);
      CHECK(std::abs(round2(prf(row.precision, row.recall).f1) - row.f1) <= 0.005 + 1e-12);
    }
  }

  TEST_CASE("pr curve on three samples") {
    const std::vector<int> y{1, 0, 1};
    const std::vector<double> s{0.9, 0.8, 0.7};
    const auto curve = pr_curve(y, s);
    REQUIRE(curve.size() == 3);
    CHECK(curve[0] == PrPoint{0.9, 1.0, 0.5});
    CHECK(curve[1] == PrPoint{0.8, 0.5, 0.5});
    CHECK(curve[2].threshold == 0.7);
    CHECK(curve[2].precision == doctest::Approx(2.0 / 3.0));
    CHECK(curve[2].recall == 1.0);
    CHECK(average_precision(y, s) == doctest::Approx(0.5 + 0.5 * 2.0 / 3.0));
    CHECK(average_precision(y, s) == doctest::Approx(0.8333).epsilon(1e-4));
  }

  TEST_CASE("pr curve edge cases") {
    const std::vector<int> perfect{1, 0};
    const std::vector<double> ranked{0.9, 0.1};
    const auto curve = pr_curve(perfect, ranked);
    CHECK(std::find(curve.begin(), curve.end(), PrPoint{0.9, 1.0, 1.0}) != curve.end());
    CHECK(average_precision(perfect, ranked) == 1.0);

    const std::vector<int> reversed{0, 1};
    CHECK(average_precision(reversed, ranked) == 0.5);

    const std::vector<int> y{1, 0, 0, 1};
    const std::vector<double> flat{0.4, 0.4, 0.4, 0.4};
    const auto single = pr_curve(y, flat);
    REQUIRE(single.size() == 1);
    CHECK(single[0].precision == 0.5);
    CHECK(single[0].recall == 1.0);
  }

  TEST_CASE("no positives leaves recall undefined") {
    try {
      pr_curve(std::vector<int>{0, 0}, std::vector<double>{0.1, 0.2});
      FAIL("expected undefined_recall");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::undefined_recall);
    }
  }

  TEST_CASE("property: pr curve and AP equal the full-rescan oracle") {
    Rng rng(23);
    for (int trial = 0; trial < 200; ++trial) {
      const auto n = static_cast<std::size_t>(uniform(rng, 1, 1000));
      std::vector<int> y(n);
      std::vector<double> s(n);
      const bool coarse = uniform(rng, 0, 1);
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = static_cast<int>(uniform(rng, 0, 1));
        s[i] = coarse ? static_cast<double>(uniform(rng, 0, 10)) / 10 : uniform_real(rng, 0, 1);
      }
      y[static_cast<std::size_t>(uniform(rng, 0, n - 1))] = 1;
      CHECK(pr_curve(y, s) == brute_force_pr(y, s));
      CHECK(average_precision(y, s) == brute_force_ap(y, s));
      const auto curve = pr_curve(y, s);
      for (std::size_t i = 1; i < curve.size(); ++i) {
        CHECK(curve[i].threshold < curve[i - 1].threshold);
        CHECK(curve[i].recall >= curve[i - 1].recall);
      }
    }
  }

  TEST_CASE("stratified split floors per class") {
    std::vector<int> labels(100, 0);
    for (int i = 0; i < 10; ++i) labels[static_cast<std::size_t>(i * 10)] = 1;
    const auto split = stratified_split(labels, 0.3, 42);
    CHECK(split.test.size() == 30);
    CHECK(split.train.size() == 70);
    std::size_t test_pos = 0;
    for (auto i : split.test) test_pos += static_cast<std::size_t>(labels[i]);
    CHECK(test_pos == 3);
    CHECK(std::is_sorted(split.train.begin(), split.train.end()));

    const auto again = stratified_split(labels, 0.3, 42);
    CHECK(again.test == split.test);
    CHECK(stratified_split(labels, 0.3, 43).test != split.test);
  }

  TEST_CASE("property: split partitions indices and preserves class proportions") {
    Rng rng(24);
    for (int trial = 0; trial < 200; ++trial) {
      const auto n = static_cast<std::size_t>(uniform(rng, 4, 300));
      std::vector<int> labels(n);
      for (auto& l : labels) l = static_cast<int>(uniform(rng, 0, 1));
      labels[0] = labels[1] = 0;
      labels[2] = labels[3] = 1;
      const double fraction = uniform_real(rng, 0.05, 0.95);
      const auto split = stratified_split(labels, fraction, static_cast<std::uint64_t>(trial));
      std::vector<std::size_t> all = split.train;
      all.insert(all.end(), split.test.begin(), split.test.end());
      std::sort(all.begin(), all.end());
      CHECK(std::adjacent_find(all.begin(), all.end()) == all.end());
      CHECK(all.size() == n);
      for (int c = 0; c < 2; ++c) {
        const auto members = static_cast<std::size_t>(std::count(labels.begin(), labels.end(), c));
        const auto in_test = static_cast<std::size_t>(
            std::count_if(split.test.begin(), split.test.end(), [&](std::size_t i) { return labels[i] == c; }));
        CHECK(in_test == static_cast<std::size_t>(std::floor(fraction * static_cast<double>(members) + 1e-9)));
      }
    }
  }

  TEST_CASE("split errors") {
    CHECK_THROWS_AS(stratified_split(std::vector<int>{0, 0, 1}, 0.3, 1), Error);
    try {
      stratified_split(std::vector<int>{0, 0, 1}, 0.3, 1);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::stratification);
    }
    try {
      stratified_split(std::vector<int>{0, 0, 1, 1}, 1.0, 1);
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::invalid_argument);
    }
  }

  TEST_CASE("csv exports") {
    EvalReport report;
    EvalEntry e;
    e.algorithm = Algorithm::gnb;
    e.dataset = "dataset1";
    e.scores = prf(0.16, 0.97);
    e.average_precision = 0.5;
    report.entries.push_back(e);
    std::ostringstream out;
    write_eval_csv(out, report);
    CHECK(out.str() == "algorithm,dataset,precision,recall,f1,ap\ngnb,dataset1,0.1600,0.9700,0.2747,0.5000\n");
    std::ostringstream curve;
    const std::vector<PrPoint> points{{0.9, 1.0, 0.5}};
    write_pr_curve_csv(curve, points);
    CHECK(curve.str().rfind("threshold,precision,recall\n", 0) == 0);
  }
}
