#include "triage/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>

#include "triage/csv.hpp"
#include "triage/error.hpp"

namespace triage {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

ConfusionCounts confusion(std::span<const int> y_true, std::span<const int> y_pred, int positive) {
  if (y_true.size() != y_pred.size()) throw Error(ErrorCode::invalid_argument, "confusion: length mismatch");
  if (y_true.empty()) throw Error(ErrorCode::invalid_argument, "confusion: empty input");
  ConfusionCounts c;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool actual = y_true[i] == positive;
    const bool predicted = y_pred[i] == positive;
    if (actual && predicted) ++c.tp;
    else if (!actual && predicted) ++c.fp;
    else if (actual) ++c.fn;
    else ++c.tn;
  }
  return c;
}

Prf prf(double precision, double recall) {
  const double denom = precision + recall;
  return {precision, recall, denom > 0 ? 2.0 * precision * recall / denom : 0.0};
}

Prf prf(const ConfusionCounts& c) { return prf(ratio(c.tp, c.tp + c.fp), ratio(c.tp, c.tp + c.fn)); }

std::vector<PrPoint> pr_curve(std::span<const int> y_true, std::span<const double> scores) {
  if (y_true.size() != scores.size()) throw Error(ErrorCode::invalid_argument, "pr_curve: length mismatch");
  const auto positives = static_cast<std::size_t>(std::count(y_true.begin(), y_true.end(), 1));
  if (positives == 0) throw Error(ErrorCode::undefined_recall, "pr_curve: no positive samples, recall undefined");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  std::vector<PrPoint> curve;
  std::size_t tp = 0, predicted = 0;
  for (std::size_t i = 0; i < order.size();) {
    const double threshold = scores[order[i]];
    // every sample tied at this score crosses the threshold together
    while (i < order.size() && scores[order[i]] == threshold) {
      tp += static_cast<std::size_t>(y_true[order[i]] == 1);
      ++predicted;
      ++i;
    }
    curve.push_back({threshold, ratio(tp, predicted), ratio(tp, positives)});
  }
  return curve;
}

double average_precision(std::span<const PrPoint> curve) {
  double ap = 0.0, previous_recall = 0.0;
  for (const auto& p : curve) {
    ap += (p.recall - previous_recall) * p.precision;
    previous_recall = p.recall;
  }
  return ap;
}

double average_precision(std::span<const int> y_true, std::span<const double> scores) {
  const auto curve = pr_curve(y_true, scores);
  return average_precision(curve);
}

SplitIndices stratified_split(std::span<const int> labels, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0))
    throw Error(ErrorCode::invalid_argument, "stratified_split: test_fraction must be in (0, 1)");
  std::array<std::vector<std::size_t>, 2> members;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != 0 && labels[i] != 1) throw Error(ErrorCode::invalid_argument, "stratified_split: labels must be 0/1");
    members[labels[i]].push_back(i);
  }
  for (int c = 0; c < 2; ++c)
    if (members[c].size() < 2)
      throw Error(ErrorCode::stratification,
                  "stratified_split: class " + std::to_string(c) + " has fewer than 2 members");

  std::mt19937_64 rng(seed);
  SplitIndices split;
  for (auto& group : members) {
    std::shuffle(group.begin(), group.end(), rng);
    // the epsilon keeps e.g. 0.3 * 90 from landing on 26.999...
    const auto n_test = static_cast<std::size_t>(std::floor(test_fraction * static_cast<double>(group.size()) + 1e-9));
    split.test.insert(split.test.end(), group.begin(), group.begin() + static_cast<std::ptrdiff_t>(n_test));
    split.train.insert(split.train.end(), group.begin() + static_cast<std::ptrdiff_t>(n_test), group.end());
  }
  std::sort(split.train.begin(), split.train.end());
  std::sort(split.test.begin(), split.test.end());
  return split;
}

EvalEntry evaluate(const Model& model, const Matrix& test_rows, std::span<const int> test_labels, std::string dataset,
                   double threshold) {
  EvalEntry entry;
  entry.algorithm = model.algorithm;
  entry.dataset = std::move(dataset);
  std::vector<double> scores;
  std::vector<int> predicted;
  scores.reserve(test_rows.size());
  for (const auto& row : test_rows) {
    scores.push_back(score(model, row));
    predicted.push_back(scores.back() >= threshold ? 1 : 0);
  }
  entry.counts = confusion(test_labels, predicted, 1);
  entry.scores = prf(entry.counts);
  if (std::count(test_labels.begin(), test_labels.end(), 1) > 0) {
    entry.curve = pr_curve(test_labels, scores);
    entry.average_precision = average_precision(entry.curve);
  }
  return entry;
}

void write_eval_csv(std::ostream& out, const EvalReport& report) {
  const std::vector<std::string> header{"algorithm", "dataset", "precision", "recall", "f1", "ap"};
  csv::write_row(out, header);
  for (const auto& e : report.entries) {
    const std::vector<std::string> row{std::string(to_string(e.algorithm)), e.dataset, fixed(e.scores.precision, 4),
                                       fixed(e.scores.recall, 4), fixed(e.scores.f1, 4), fixed(e.average_precision, 4)};
    csv::write_row(out, row);
  }
}

void write_pr_curve_csv(std::ostream& out, std::span<const PrPoint> curve) {
  const std::vector<std::string> header{"threshold", "precision", "recall"};
  csv::write_row(out, header);
  char buf[128];
  for (const auto& p : curve) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", p.threshold, p.precision, p.recall);
    out << buf;
  }
}

}  // namespace triage
