#include <doctest.h>

#include <numbers>

#include "support.hpp"
#include "triage/classifiers.hpp"
#include "triage/error.hpp"
#include "triage/model_io.hpp"

using namespace triage;
using namespace testsupport;

namespace {

TrainConfig config_for(Algorithm a, std::uint64_t seed = 1) {
  TrainConfig c;
  c.algorithm = a;
  c.seed = seed;
  return c;
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::state;
}

// Two Gaussian-ish blobs, one per class, in `d` dimensions.
std::pair<Matrix, std::vector<int>> blobs(Rng& rng, std::size_t n, std::size_t d, double gap) {
  Matrix x;
  std::vector<int> y;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = static_cast<int>(i % 2);
    std::vector<double> row(d);
    for (auto& v : row) v = uniform_real(rng, 0, 1) + label * gap;
    x.push_back(row);
    y.push_back(label);
  }
  return {x, y};
}

double log_normal_pdf(double x, double mean, double var) {
  return -0.5 * std::log(2 * std::numbers::pi * var) - (x - mean) * (x - mean) / (2 * var);
}

}  // namespace

TEST_SUITE("classifiers") {
  TEST_CASE("tree: root split lands midway between the classes") {
    const Matrix x{{1}, {2}, {10}, {11}};
    const std::vector<int> y{0, 0, 1, 1};
    const auto model = train(x, y, config_for(Algorithm::tree));
    const auto& tree = std::get<TreeModel>(model.params);
    REQUIRE(tree.nodes.size() == 3);
    CHECK(tree.nodes[0].feature == 0);
    CHECK(tree.nodes[0].threshold == 6.0);
    CHECK(tree.nodes[tree.nodes[0].left].positive_fraction == 0.0);
    CHECK(tree.nodes[tree.nodes[0].right].positive_fraction == 1.0);
    CHECK(brute_force_root_split(x, y).threshold == 6.0);
  }

  TEST_CASE("tree: single-class input is one leaf") {
    const Matrix x{{1}, {2}, {3}};
    const std::vector<int> y{0, 0, 0};
    const auto model = train(x, y, config_for(Algorithm::tree));
    const auto& tree = std::get<TreeModel>(model.params);
    REQUIRE(tree.nodes.size() == 1);
    CHECK(tree.nodes[0].is_leaf());
    CHECK(tree.nodes[0].positive_fraction == 0.0);
    CHECK(score(model, std::vector<double>{2}) == 0.0);
  }

  TEST_CASE("property: tree root split matches exhaustive enumeration") {
    Rng rng(12);
    for (int trial = 0; trial < 300; ++trial) {
      const auto n = static_cast<std::size_t>(uniform(rng, 2, 30));
      const auto d = static_cast<std::size_t>(uniform(rng, 1, 4));
      Matrix x(n, std::vector<double>(d));
      std::vector<int> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        for (auto& v : x[i]) v = static_cast<double>(uniform(rng, 0, 6)) / 2;
        y[i] = static_cast<int>(uniform(rng, 0, 1));
      }
      const auto oracle = brute_force_root_split(x, y);
      const auto model = train(x, y, config_for(Algorithm::tree));
      const auto& root = std::get<TreeModel>(model.params).nodes[0];
      const bool pure = std::all_of(y.begin(), y.end(), [&](int v) { return v == y[0]; });
      if (pure || oracle.feature < 0) {
        CHECK(root.is_leaf());
        continue;
      }
      CHECK(root.feature == oracle.feature);
      CHECK(root.threshold == oracle.threshold);
    }
  }

  TEST_CASE("tree: depth and leaf-size limits") {
    Rng rng(2);
    auto [x, y] = blobs(rng, 60, 3, 0.2);
    auto c = config_for(Algorithm::tree);
    c.tree_max_depth = 0;
    CHECK(std::get<TreeModel>(train(x, y, c).params).nodes.size() == 1);
    c.tree_max_depth.reset();
    c.tree_min_leaf = 10;
    for (const auto& node : std::get<TreeModel>(train(x, y, c).params).nodes) CHECK(node.samples >= 10);
  }

  TEST_CASE("property: unlimited tree fits any consistent dataset") {
    Rng rng(13);
    for (int trial = 0; trial < 100; ++trial) {
      const auto n = static_cast<std::size_t>(uniform(rng, 1, 60));
      Matrix x;
      std::vector<int> y;
      std::set<std::vector<double>> seen;
      while (x.size() < n) {
        std::vector<double> row{uniform_real(rng, 0, 1), static_cast<double>(uniform(rng, 0, 3))};
        if (!seen.insert(row).second) continue;
        x.push_back(row);
        y.push_back(static_cast<int>(uniform(rng, 0, 1)));
      }
      const auto model = train(x, y, config_for(Algorithm::tree));
      for (std::size_t i = 0; i < n; ++i) CHECK(predict(model, x[i]) == y[i]);
    }
  }

  TEST_CASE("gnb: priors and means are sample statistics") {
    const Matrix x{{0}, {0}, {10}, {10}};
    const std::vector<int> y{0, 0, 1, 1};
    const auto model = train(x, y, config_for(Algorithm::gnb));
    const auto& nb = std::get<GaussianNbModel>(model.params);
    CHECK(nb.priors[0] == 0.5);
    CHECK(nb.priors[1] == 0.5);
    CHECK(nb.means[0][0] == 0.0);
    CHECK(nb.means[1][0] == 10.0);
    CHECK(nb.variances[0][0] >= nb.var_floor);
    CHECK(score(model, std::vector<double>{10}) > 0.5);
  }

  TEST_CASE("gnb: posterior matches a hand computation") {
    // class 0: {0, 2} mean 1 var 1; class 1: {10, 14} mean 12 var 4
    const Matrix x{{0}, {2}, {10}, {14}};
    const std::vector<int> y{0, 0, 1, 1};
    const auto model = train(x, y, config_for(Algorithm::gnb));
    const auto& nb = std::get<GaussianNbModel>(model.params);
    // overall variance: mean 6.5, squared deviations 42.25+20.25+12.25+56.25 = 131 over 4
    const double floor = 1e-9 * 131.0 / 4.0;
    CHECK(nb.var_floor == doctest::Approx(floor).epsilon(1e-12));
    const double l0 = std::log(0.5) + log_normal_pdf(4, 1, 1 + floor);
    const double l1 = std::log(0.5) + log_normal_pdf(4, 12, 4 + floor);
    const double expected = 1.0 / (1.0 + std::exp(l0 - l1));
    CHECK(std::abs(score(model, std::vector<double>{4}) - expected) <= 1e-9);
    // without the floor this is 1 / (1 + 2e^3.5)
    CHECK(std::abs(expected - 1.0 / (1.0 + 2.0 * std::exp(3.5))) <= 1e-8);
  }

  TEST_CASE("gnb: symmetric classes put the boundary midway") {
    const Matrix x{{0}, {2}, {10}, {12}};
    const std::vector<int> y{0, 0, 1, 1};
    const auto model = train(x, y, config_for(Algorithm::gnb));
    CHECK(score(model, std::vector<double>{6}) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(score(model, std::vector<double>{6.01}) > 0.5);
    CHECK(score(model, std::vector<double>{5.99}) < 0.5);
  }

  TEST_CASE("property: gnb posteriors sum to one") {
    Rng rng(14);
    for (int trial = 0; trial < 100; ++trial) {
      auto [x, y] = blobs(rng, 40, 4, uniform_real(rng, 0, 3));
      const auto model = train(x, y, config_for(Algorithm::gnb));
      for (int q = 0; q < 10; ++q) {
        std::vector<double> row(4);
        for (auto& v : row) v = uniform_real(rng, -5, 10);
        const auto p = gnb_posteriors(std::get<GaussianNbModel>(model.params), row);
        CHECK(std::abs(p[0] + p[1] - 1.0) <= 1e-12);
      }
    }
  }

  TEST_CASE("knn: two of three nearest are positive") {
    const Matrix x{{0, 0}, {0, 1}, {1, 0}, {5, 5}, {5, 6}};
    const std::vector<int> y{0, 0, 0, 1, 1};
    auto c = config_for(Algorithm::knn);
    c.k_neighbors = 3;
    const auto model = train(x, y, c);
    CHECK(score(model, std::vector<double>{4.5, 5}) == doctest::Approx(2.0 / 3.0));
    CHECK(score(model, std::vector<double>{4.5, 5}) == brute_force_knn(x, y, {4.5, 5}, 3));
  }

  TEST_CASE("property: knn matches the exhaustive distance table") {
    Rng rng(15);
    for (int trial = 0; trial < 100; ++trial) {
      Matrix x;
      std::vector<int> y;
      for (int i = 0; i < 5; ++i) {
        // coarse grid so that distance ties actually occur
        x.push_back({static_cast<double>(uniform(rng, 0, 3)), static_cast<double>(uniform(rng, 0, 3))});
        y.push_back(static_cast<int>(uniform(rng, 0, 1)));
      }
      auto c = config_for(Algorithm::knn);
      c.k_neighbors = static_cast<int>(uniform(rng, 1, 5));
      const auto model = train(x, y, c);
      for (int q = 0; q < 5; ++q) {
        const std::vector<double> query{static_cast<double>(uniform(rng, 0, 6)) / 2,
                                        static_cast<double>(uniform(rng, 0, 6)) / 2};
        CHECK(score(model, query) == brute_force_knn(x, y, query, c.k_neighbors));
      }
    }
  }

  TEST_CASE("knn: k=1 reproduces every training label") {
    Rng rng(16);
    auto [x, y] = blobs(rng, 50, 3, 0.5);
    auto c = config_for(Algorithm::knn);
    c.k_neighbors = 1;
    const auto model = train(x, y, c);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(score(model, x[i]) == static_cast<double>(y[i]));
  }

  TEST_CASE("svm: separable data reaches near-zero hinge loss") {
    Rng rng(17);
    auto [x, y] = blobs(rng, 100, 2, 3.0);
    const auto model = train(x, y, config_for(Algorithm::svm));
    CHECK(mean_hinge_loss(std::get<LinearModel>(model.params), x, y) < 0.01);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(predict(model, x[i]) == y[i]);
  }

  TEST_CASE("property: logreg gradient matches central differences") {
    Rng rng(18);
    auto [x, y] = blobs(rng, 30, 3, 1.0);
    const double h = 1e-5;
    for (int point = 0; point < 100; ++point) {
      std::vector<double> params(4);
      for (auto& p : params) p = uniform_real(rng, -2, 2);
      const auto g = logreg_gradient(x, y, params, 0.01);
      for (std::size_t j = 0; j < params.size(); ++j) {
        auto up = params, down = params;
        up[j] += h;
        down[j] -= h;
        const double numeric = (logreg_loss(x, y, up, 0.01) - logreg_loss(x, y, down, 0.01)) / (2 * h);
        CHECK(std::abs(numeric - g[j]) <= 1e-4 * std::max(1.0, std::abs(g[j])));
      }
    }
  }

  TEST_CASE("logreg separates well-separated blobs") {
    Rng rng(19);
    auto [x, y] = blobs(rng, 100, 2, 3.0);
    const auto model = train(x, y, config_for(Algorithm::logreg));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < x.size(); ++i) correct += predict(model, x[i]) == y[i];
    CHECK(correct >= 95);
  }

  TEST_CASE("predict threshold boundary") {
    // a tree leaf holding 2 of 3 positives scores exactly 2/3
    const Matrix x{{0}, {0}, {0}, {1}};
    const std::vector<int> y{1, 1, 0, 0};
    const auto model = train(x, y, config_for(Algorithm::tree));
    CHECK(score(model, std::vector<double>{0}) == doctest::Approx(2.0 / 3.0));
    CHECK(predict(model, std::vector<double>{0}, 0.5) == 1);
    CHECK(predict(model, std::vector<double>{0}, 2.0 / 3.0) == 1);
    CHECK(predict(model, std::vector<double>{0}, 0.67) == 0);
    CHECK(predict(model, std::vector<double>{1}, 0.0) == 1);
    const Matrix half{{0}, {0}};
    const auto even = train(half, std::vector<int>{0, 1}, config_for(Algorithm::tree));
    CHECK(predict(even, std::vector<double>{0}, 0.5) == 1);
    CHECK(predict(even, std::vector<double>{0}, 0.51) == 0);
  }

  TEST_CASE("degenerate classes") {
    const Matrix x{{0}, {1}};
    const std::vector<int> y{1, 1};
    for (auto a : {Algorithm::gnb, Algorithm::svm, Algorithm::logreg})
      CHECK(code_of([&] { train(x, y, config_for(a)); }) == ErrorCode::degenerate_class);
    CHECK(score(train(x, y, config_for(Algorithm::knn)), std::vector<double>{0}) == 1.0);
    CHECK(score(train(x, y, config_for(Algorithm::tree)), std::vector<double>{0}) == 1.0);
  }

  TEST_CASE("bad input is rejected") {
    const Matrix x{{0, 1}, {1, 0}};
    const std::vector<int> y{0, 1};
    const auto model = train(x, y, config_for(Algorithm::knn));
    CHECK(code_of([&] { score(model, std::vector<double>{1}); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { train(x, std::vector<int>{0}, config_for(Algorithm::tree)); }) == ErrorCode::invalid_argument);
    CHECK(code_of([&] { train(Matrix{}, std::vector<int>{}, config_for(Algorithm::tree)); }) ==
          ErrorCode::invalid_argument);
    auto c = config_for(Algorithm::knn);
    c.k_neighbors = 0;
    CHECK(code_of([&] { train(x, y, c); }) == ErrorCode::invalid_argument);
  }

  TEST_CASE("property: training is deterministic and scores stay in [0,1]") {
    Rng rng(20);
    auto [x, y] = blobs(rng, 80, 5, 0.4);
    for (auto a : kAllAlgorithms) {
      const auto first = train(x, y, config_for(a, 7));
      CHECK(train(x, y, config_for(a, 7)) == first);
      for (const auto& row : x) {
        const double s = score(first, row);
        CHECK(s >= 0.0);
        CHECK(s <= 1.0);
      }
    }
  }

  TEST_CASE("property: model files round-trip") {
    Rng rng(22);
    auto [x, y] = blobs(rng, 40, 10, 0.5);  // width of the schema below
    FeatureSchema schema;
    schema.extension_vocabulary = {"jpg", "OTHER"};
    schema.reference_time = Instant{seconds{1'600'000'000}};
    for (auto& r : schema.minmax_ranges) r = {0.125, uniform_real(rng, 1, 1e6)};
    for (auto a : kAllAlgorithms) {
      const ModelFile file{train(x, y, config_for(a, 3)), schema};
      const auto back = parse_model(serialize_model(file));
      CHECK(back == file);
      for (const auto& row : x) CHECK(score(back.model, row) == score(file.model, row));
    }
    CHECK(parse_schema(serialize_schema(schema)) == schema);
    CHECK(code_of([] { parse_model("{\"version\":99}"); }) == ErrorCode::format);
    CHECK(code_of([] { parse_model("not json"); }) == ErrorCode::format);
  }

  TEST_CASE("algorithm names") {
    for (auto a : kAllAlgorithms) CHECK(parse_algorithm(to_string(a)) == a);
    CHECK_FALSE(parse_algorithm("forest"));
  }
}
