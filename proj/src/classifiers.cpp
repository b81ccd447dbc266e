#include "triage/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>

#include "triage/error.hpp"

namespace triage {
namespace {

void check_shape(const Matrix& rows, std::span<const int> labels) {
  if (rows.empty() || rows.size() != labels.size())
    throw Error(ErrorCode::invalid_argument, "train: rows and labels must be non-empty and equal length");
  const std::size_t width = rows.front().size();
  for (const auto& r : rows)
    if (r.size() != width) throw Error(ErrorCode::invalid_argument, "train: ragged feature matrix");
  for (int y : labels)
    if (y != 0 && y != 1) throw Error(ErrorCode::invalid_argument, "train: labels must be 0 or 1");
}

void require_both_classes(std::span<const int> labels, Algorithm a) {
  const auto positives = std::count(labels.begin(), labels.end(), 1);
  if (positives == 0 || positives == static_cast<long>(labels.size()))
    throw Error(ErrorCode::degenerate_class, std::string(display_name(a)) + " needs both classes in training data; only class " +
                                                 (positives == 0 ? "0" : "1") + " present");
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

// ---- CART ---------------------------------------------------------------

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& rows, std::span<const int> labels, const TrainConfig& config)
      : rows_(rows), labels_(labels), config_(config), width_(rows.front().size()) {}

  TreeModel build() {
    std::vector<std::size_t> all(rows_.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    grow(all, 0);
    return std::move(model_);
  }

 private:
  struct Split {
    int feature = -1;
    double threshold = 0.0;
    // weighted "purity" (L0^2+L1^2)/nL + (R0^2+R1^2)/nR as an exact fraction;
    // maximising it maximises the Gini decrease
    __int128 num = 0;
    __int128 den = 1;
  };

  int grow(const std::vector<std::size_t>& idx, int depth) {
    const int id = static_cast<int>(model_.nodes.size());
    model_.nodes.emplace_back();
    std::size_t positives = 0;
    for (auto i : idx) positives += static_cast<std::size_t>(labels_[i]);
    {
      auto& node = model_.nodes[id];
      node.samples = idx.size();
      node.positive_fraction = static_cast<double>(positives) / static_cast<double>(idx.size());
    }

    const bool pure = positives == 0 || positives == idx.size();
    const bool depth_reached = config_.tree_max_depth && depth >= *config_.tree_max_depth;
    if (pure || depth_reached) return id;

    auto split = best_split(idx);
    if (split.feature < 0) return id;

    std::vector<std::size_t> left, right;
    for (auto i : idx) (rows_[i][split.feature] <= split.threshold ? left : right).push_back(i);

    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    auto& node = model_.nodes[id];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = l;
    node.right = r;
    return id;
  }

  Split best_split(const std::vector<std::size_t>& idx) const {
    const auto n = static_cast<std::int64_t>(idx.size());
    const auto min_leaf = static_cast<std::int64_t>(std::max(1, config_.tree_min_leaf));
    std::int64_t total1 = 0;
    for (auto i : idx) total1 += labels_[i];
    const std::int64_t total0 = n - total1;

    Split best;
    std::vector<std::pair<double, int>> column(idx.size());
    for (std::size_t f = 0; f < width_; ++f) {
      for (std::size_t j = 0; j < idx.size(); ++j) column[j] = {rows_[idx[j]][f], labels_[idx[j]]};
      std::sort(column.begin(), column.end());

      std::int64_t l0 = 0, l1 = 0;
      for (std::int64_t j = 0; j + 1 < n; ++j) {
        (column[j].second ? l1 : l0) += 1;
        if (column[j].first == column[j + 1].first) continue;
        const std::int64_t nl = j + 1, nr = n - nl;
        if (nl < min_leaf || nr < min_leaf) continue;
        const std::int64_t r0 = total0 - l0, r1 = total1 - l1;
        const __int128 num = static_cast<__int128>(l0 * l0 + l1 * l1) * nr + static_cast<__int128>(r0 * r0 + r1 * r1) * nl;
        const __int128 den = static_cast<__int128>(nl) * nr;
        // strict improvement only: earlier feature and lower threshold win ties
        if (best.feature < 0 || num * best.den > best.num * den) {
          best.feature = static_cast<int>(f);
          best.threshold = std::midpoint(column[j].first, column[j + 1].first);
          best.num = num;
          best.den = den;
        }
      }
    }
    return best;
  }

  const Matrix& rows_;
  std::span<const int> labels_;
  const TrainConfig& config_;
  std::size_t width_;
  TreeModel model_;
};

double score_tree(const TreeModel& m, std::span<const double> x) {
  int id = 0;
  while (!m.nodes[id].is_leaf()) {
    const auto& node = m.nodes[id];
    id = x[node.feature] <= node.threshold ? node.left : node.right;
  }
  return m.nodes[id].positive_fraction;
}

// ---- Gaussian naive Bayes -----------------------------------------------

GaussianNbModel train_gnb(const Matrix& rows, std::span<const int> labels, double floor_scale) {
  const std::size_t d = rows.front().size();
  const auto n = static_cast<double>(rows.size());
  GaussianNbModel m;
  std::array<double, 2> counts{};
  for (int c = 0; c < 2; ++c) {
    m.means[c].assign(d, 0.0);
    m.variances[c].assign(d, 0.0);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int c = labels[i];
    counts[c] += 1;
    for (std::size_t j = 0; j < d; ++j) m.means[c][j] += rows[i][j];
  }
  for (int c = 0; c < 2; ++c)
    for (auto& v : m.means[c]) v /= counts[c];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int c = labels[i];
    for (std::size_t j = 0; j < d; ++j) {
      const double e = rows[i][j] - m.means[c][j];
      m.variances[c][j] += e * e;
    }
  }
  for (int c = 0; c < 2; ++c)
    for (auto& v : m.variances[c]) v /= counts[c];

  // floor relative to the widest feature variance over all data
  double max_var = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    double mean = 0.0, var = 0.0;
    for (const auto& r : rows) mean += r[j];
    mean /= n;
    for (const auto& r : rows) var += (r[j] - mean) * (r[j] - mean);
    max_var = std::max(max_var, var / n);
  }
  m.var_floor = max_var > 0 ? floor_scale * max_var : floor_scale;
  for (int c = 0; c < 2; ++c)
    for (auto& v : m.variances[c]) v += m.var_floor;
  m.priors = {counts[0] / n, counts[1] / n};
  return m;
}

// ---- k-NN ---------------------------------------------------------------

double score_knn(const KnnModel& m, std::span<const double> x) {
  std::vector<std::pair<double, std::size_t>> dist(m.rows.size());
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double e = m.rows[i][j] - x[j];
      s += e * e;
    }
    dist[i] = {s, i};  // pair order breaks distance ties by training index
  }
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(m.k), dist.size());
  std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
  std::size_t positives = 0;
  for (std::size_t i = 0; i < k; ++i) positives += static_cast<std::size_t>(m.labels[dist[i].second]);
  return static_cast<double>(positives) / static_cast<double>(k);
}

// ---- linear SVM (Pegasos) -------------------------------------------------

LinearModel train_svm(const Matrix& rows, std::span<const int> labels, const TrainConfig& config) {
  const std::size_t d = rows.front().size();
  // the bias is folded in as a constant-one feature and regularised with the rest
  std::vector<double> w(d + 1, 0.0);
  const double radius = 1.0 / std::sqrt(config.svm_lambda);
  std::vector<std::size_t> order(rows.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(config.seed);

  std::uint64_t t = 0;
  for (int epoch = 0; epoch < config.svm_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (auto i : order) {
      ++t;
      const double eta = 1.0 / (config.svm_lambda * static_cast<double>(t));
      const double y = labels[i] ? 1.0 : -1.0;
      const auto& x = rows[i];
      const double margin = y * (dot(std::span(w).first(d), x) + w[d]);
      const double shrink = 1.0 - eta * config.svm_lambda;
      for (auto& v : w) v *= shrink;
      if (margin < 1.0) {
        for (std::size_t j = 0; j < d; ++j) w[j] += eta * y * x[j];
        w[d] += eta * y;
      }
      const double norm = std::sqrt(dot(w, w));
      if (norm > radius) {
        const double s = radius / norm;
        for (auto& v : w) v *= s;
      }
    }
  }
  LinearModel m;
  m.bias = w[d];
  w.pop_back();
  m.weights = std::move(w);
  return m;
}

// ---- logistic regression ------------------------------------------------

LinearModel train_logreg(const Matrix& rows, std::span<const int> labels, const TrainConfig& config) {
  std::vector<double> params(rows.front().size() + 1, 0.0);
  for (int epoch = 0; epoch < config.lr_epochs; ++epoch) {
    auto g = logreg_gradient(rows, labels, params, config.lr_l2);
    for (std::size_t j = 0; j < params.size(); ++j) params[j] -= config.lr_rate * g[j];
  }
  LinearModel m;
  m.bias = params.back();
  params.pop_back();
  m.weights = std::move(params);
  return m;
}

}  // namespace

std::string_view to_string(Algorithm a) {
  switch (a) {
    case Algorithm::tree: return "tree";
    case Algorithm::gnb: return "gnb";
    case Algorithm::knn: return "knn";
    case Algorithm::svm: return "svm";
    case Algorithm::logreg: return "logreg";
  }
  return "unknown";
}

std::string_view display_name(Algorithm a) {
  switch (a) {
    case Algorithm::tree: return "Decision Tree";
    case Algorithm::gnb: return "Gaussian Naive Bayes";
    case Algorithm::knn: return "k-NN";
    case Algorithm::svm: return "Support Vector Machine";
    case Algorithm::logreg: return "Logistic Regression";
  }
  return "unknown";
}

std::optional<Algorithm> parse_algorithm(std::string_view text) {
  for (auto a : kAllAlgorithms)
    if (to_string(a) == text) return a;
  return std::nullopt;
}

void TrainConfig::validate() const {
  auto fail = [](const char* what) { throw Error(ErrorCode::invalid_argument, what); };
  if (k_neighbors < 1) fail("k_neighbors must be >= 1");
  if (tree_max_depth && *tree_max_depth < 0) fail("tree_max_depth must be >= 0");
  if (tree_min_leaf < 1) fail("tree_min_leaf must be >= 1");
  if (!(svm_lambda > 0) || svm_epochs <= 0) fail("svm_lambda and svm_epochs must be positive");
  if (!(lr_rate > 0) || lr_epochs <= 0 || lr_l2 < 0) fail("lr_rate and lr_epochs must be positive");
  if (!(gnb_var_floor_scale > 0)) fail("gnb_var_floor_scale must be positive");
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Model train(const Matrix& rows, std::span<const int> labels, const TrainConfig& config) {
  config.validate();
  check_shape(rows, labels);
  Model model;
  model.algorithm = config.algorithm;
  model.width = rows.front().size();
  switch (config.algorithm) {
    case Algorithm::tree:
      model.params = TreeBuilder(rows, labels, config).build();
      break;
    case Algorithm::gnb:
      require_both_classes(labels, config.algorithm);
      model.params = train_gnb(rows, labels, config.gnb_var_floor_scale);
      break;
    case Algorithm::knn:
      model.params = KnnModel{config.k_neighbors, rows, std::vector<int>(labels.begin(), labels.end())};
      break;
    case Algorithm::svm:
      require_both_classes(labels, config.algorithm);
      model.params = train_svm(rows, labels, config);
      break;
    case Algorithm::logreg:
      require_both_classes(labels, config.algorithm);
      model.params = train_logreg(rows, labels, config);
      break;
  }
  return model;
}

Model train(std::span<const NumericRow> rows, std::span<const int> labels, const TrainConfig& config) {
  Matrix m;
  m.reserve(rows.size());
  for (const auto& r : rows) m.push_back(r.values);
  return train(m, labels, config);
}

std::array<double, 2> gnb_posteriors(const GaussianNbModel& m, std::span<const double> x) {
  std::array<double, 2> log_joint{};
  for (int c = 0; c < 2; ++c) {
    double s = std::log(m.priors[c]);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double var = m.variances[c][j];
      const double e = x[j] - m.means[c][j];
      s -= 0.5 * std::log(2.0 * std::numbers::pi * var) + e * e / (2.0 * var);
    }
    log_joint[c] = s;
  }
  const double top = std::max(log_joint[0], log_joint[1]);
  const double norm = top + std::log(std::exp(log_joint[0] - top) + std::exp(log_joint[1] - top));
  return {std::exp(log_joint[0] - norm), std::exp(log_joint[1] - norm)};
}

double score(const Model& model, std::span<const double> row) {
  if (row.size() != model.width)
    throw Error(ErrorCode::invalid_argument, "score: row width " + std::to_string(row.size()) +
                                                 " does not match model width " + std::to_string(model.width));
  return std::visit(
      [&](const auto& p) -> double {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, TreeModel>) {
          return score_tree(p, row);
        } else if constexpr (std::is_same_v<T, GaussianNbModel>) {
          return gnb_posteriors(p, row)[1];
        } else if constexpr (std::is_same_v<T, KnnModel>) {
          return score_knn(p, row);
        } else {
          return sigmoid(dot(p.weights, row) + p.bias);
        }
      },
      model.params);
}

int predict(const Model& model, std::span<const double> row, double threshold) {
  // thresholds above 1 are allowed and simply predict nothing
  if (std::isnan(threshold) || threshold < 0.0) throw Error(ErrorCode::invalid_argument, "threshold must be >= 0");
  return score(model, row) >= threshold ? 1 : 0;
}

double logreg_loss(const Matrix& rows, std::span<const int> labels, std::span<const double> params, double l2) {
  const std::size_t d = params.size() - 1;
  double total = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double z = dot(params.first(d), rows[i]) + params[d];
    total += softplus(z) - labels[i] * z;
  }
  double reg = 0.0;
  for (std::size_t j = 0; j < d; ++j) reg += params[j] * params[j];
  return total / static_cast<double>(rows.size()) + 0.5 * l2 * reg;
}

std::vector<double> logreg_gradient(const Matrix& rows, std::span<const int> labels, std::span<const double> params,
                                    double l2) {
  const std::size_t d = params.size() - 1;
  std::vector<double> g(d + 1, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double err = sigmoid(dot(params.first(d), rows[i]) + params[d]) - labels[i];
    for (std::size_t j = 0; j < d; ++j) g[j] += err * rows[i][j];
    g[d] += err;
  }
  const double n = static_cast<double>(rows.size());
  for (std::size_t j = 0; j < d; ++j) g[j] = g[j] / n + l2 * params[j];
  g[d] /= n;
  return g;
}

double mean_hinge_loss(const LinearModel& model, const Matrix& rows, std::span<const int> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double y = labels[i] ? 1.0 : -1.0;
    total += std::max(0.0, 1.0 - y * (dot(model.weights, rows[i]) + model.bias));
  }
  return total / static_cast<double>(rows.size());
}

}  // namespace triage
