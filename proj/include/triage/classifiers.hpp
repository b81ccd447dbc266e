#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "triage/features.hpp"

namespace triage {

enum class Algorithm { tree, gnb, knn, svm, logreg };

inline constexpr std::array<Algorithm, 5> kAllAlgorithms{Algorithm::tree, Algorithm::gnb, Algorithm::knn,
                                                         Algorithm::svm, Algorithm::logreg};

std::string_view to_string(Algorithm a);
std::optional<Algorithm> parse_algorithm(std::string_view text);
std::string_view display_name(Algorithm a);  // "Decision Tree", ...

struct TrainConfig {
  Algorithm algorithm = Algorithm::tree;
  int k_neighbors = 5;
  std::optional<int> tree_max_depth;  // unlimited when absent
  int tree_min_leaf = 1;
  double svm_lambda = 1e-4;
  int svm_epochs = 200;
  double lr_rate = 0.1;
  int lr_epochs = 500;
  double lr_l2 = 1e-4;
  double gnb_var_floor_scale = 1e-9;
  std::uint64_t seed = 0;

  void validate() const;  // throws invalid_argument
};

/// Binary CART node. Internal nodes route x[feature] <= threshold to `left`.
struct TreeNode {
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double positive_fraction = 0.0;  // class-1 share of training samples reaching the node
  std::size_t samples = 0;

  bool is_leaf() const { return feature < 0; }
  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct TreeModel {
  std::vector<TreeNode> nodes;  // nodes[0] is the root
  friend bool operator==(const TreeModel&, const TreeModel&) = default;
};

struct GaussianNbModel {
  std::array<double, 2> priors{};
  std::array<std::vector<double>, 2> means;
  std::array<std::vector<double>, 2> variances;  // already include the smoothing floor
  double var_floor = 0.0;
  friend bool operator==(const GaussianNbModel&, const GaussianNbModel&) = default;
};

struct KnnModel {
  int k = 5;
  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  friend bool operator==(const KnnModel&, const KnnModel&) = default;
};

/// Shared by the linear SVM and logistic regression.
struct LinearModel {
  std::vector<double> weights;
  double bias = 0.0;
  friend bool operator==(const LinearModel&, const LinearModel&) = default;
};

struct Model {
  Algorithm algorithm = Algorithm::tree;
  std::size_t width = 0;
  std::variant<TreeModel, GaussianNbModel, KnnModel, LinearModel> params;
  friend bool operator==(const Model&, const Model&) = default;
};

using Matrix = std::vector<std::vector<double>>;

/// Deterministic in (rows, labels, config). Labels are 0/1.
Model train(const Matrix& rows, std::span<const int> labels, const TrainConfig& config);
Model train(std::span<const NumericRow> rows, std::span<const int> labels, const TrainConfig& config);

/// Class-1 score in [0, 1]. Throws invalid_argument on a width mismatch.
double score(const Model& model, std::span<const double> row);
/// 1 iff score >= threshold.
int predict(const Model& model, std::span<const double> row, double threshold = 0.5);

/// Class posteriors P(0|x), P(1|x) under a Gaussian naive Bayes model.
std::array<double, 2> gnb_posteriors(const GaussianNbModel& model, std::span<const double> row);

// Logistic-regression objective, exposed so its gradient can be checked
// against finite differences. Parameters are the weights followed by the bias.
double logreg_loss(const Matrix& rows, std::span<const int> labels, std::span<const double> params, double l2);
std::vector<double> logreg_gradient(const Matrix& rows, std::span<const int> labels, std::span<const double> params,
                                    double l2);

/// Mean hinge loss of a linear model, labels 0/1 mapped to -1/+1.
double mean_hinge_loss(const LinearModel& model, const Matrix& rows, std::span<const int> labels);

double sigmoid(double z);

}  // namespace triage
