#pragma once

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "triage/classifiers.hpp"

namespace triage {

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  friend bool operator==(const ConfusionCounts&, const ConfusionCounts&) = default;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct PrPoint {
  double threshold = 0.0;
  double precision = 0.0;
  double recall = 0.0;

  friend bool operator==(const PrPoint&, const PrPoint&) = default;
};

ConfusionCounts confusion(std::span<const int> y_true, std::span<const int> y_pred, int positive = 1);

/// Precision, recall and their harmonic mean; every 0/0 is taken as 0.
Prf prf(const ConfusionCounts& c);
Prf prf(double precision, double recall);

/// One point per distinct score, thresholds descending; a sample is
/// predicted positive when its score is >= the threshold.
std::vector<PrPoint> pr_curve(std::span<const int> y_true, std::span<const double> scores);

/// Step-wise sum of (R_n - R_{n-1}) * P_n over pr_curve, R_0 = 0.
double average_precision(std::span<const int> y_true, std::span<const double> scores);
double average_precision(std::span<const PrPoint> curve);

struct SplitIndices {
  std::vector<std::size_t> train;  // ascending
  std::vector<std::size_t> test;   // ascending
};

/// Per class, floor(test_fraction * class size) seeded-random members go to
/// test. Each class needs at least two members.
SplitIndices stratified_split(std::span<const int> labels, double test_fraction, std::uint64_t seed);

/// Class-1 headline scores for one algorithm on one dataset.
struct EvalEntry {
  Algorithm algorithm = Algorithm::tree;
  std::string dataset;
  ConfusionCounts counts;
  Prf scores;
  double average_precision = 0.0;
  std::vector<PrPoint> curve;
};

struct EvalReport {
  std::vector<EvalEntry> entries;
};

/// Scores every test row, thresholds at `threshold`, and fills an entry.
EvalEntry evaluate(const Model& model, const Matrix& test_rows, std::span<const int> test_labels,
                   std::string dataset, double threshold = 0.5);

// algorithm,dataset,precision,recall,f1,ap
void write_eval_csv(std::ostream& out, const EvalReport& report);
// threshold,precision,recall
void write_pr_curve_csv(std::ostream& out, std::span<const PrPoint> curve);

}  // namespace triage
