#pragma once

// Test helpers: seeded generators, temporary directories and brute-force
// reference implementations used as oracles.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "triage/classifiers.hpp"
#include "triage/eval.hpp"
#include "triage/ingest.hpp"

namespace testsupport {

using Rng = std::mt19937_64;

inline std::int64_t uniform(Rng& rng, std::int64_t lo, std::int64_t hi) {
  return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
}

inline double uniform_real(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline std::string hex_digest(Rng& rng, std::size_t length = 64) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(length, '0');
  for (auto& c : out) c = kHex[uniform(rng, 0, 15)];
  return out;
}

// Text that exercises CSV quoting: commas, quotes, embedded newlines, UTF-8.
inline std::string messy_text(Rng& rng, std::size_t max_len = 12) {
  static const std::vector<std::string> pieces{"a", "b", "Z", "9", " ", ",", "\"", "\n", "é", "文", "-", "_", ".", "/"};
  const auto n = static_cast<std::size_t>(uniform(rng, 0, static_cast<std::int64_t>(max_len)));
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out += pieces[static_cast<std::size_t>(uniform(rng, 0, pieces.size() - 1))];
  return out;
}

inline std::string plain_text(Rng& rng, std::size_t min_len, std::size_t max_len) {
  static constexpr char kChars[] = "abcdefghijklmnopqrstuvwxyz0123456789";
  const auto n = static_cast<std::size_t>(uniform(rng, static_cast<std::int64_t>(min_len), static_cast<std::int64_t>(max_len)));
  std::string out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(kChars[uniform(rng, 0, 35)]);
  return out;
}

inline triage::Instant random_instant(Rng& rng) {
  // 2001-09-09 .. 2033-05-18
  return triage::Instant{triage::seconds{uniform(rng, 1'000'000'000, 2'000'000'000)}};
}

/// Unique directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag = "triage") {
    static std::atomic<int> counter{0};
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (tag + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
}

// ---- oracles ---------------------------------------------------------------

/// Precision/recall at every distinct score, each computed by a full rescan.
inline std::vector<triage::PrPoint> brute_force_pr(const std::vector<int>& labels, const std::vector<double>& scores) {
  std::set<double, std::greater<>> thresholds(scores.begin(), scores.end());
  std::vector<triage::PrPoint> out;
  for (double t : thresholds) {
    long tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const bool positive = scores[i] >= t;
      if (positive && labels[i] == 1) ++tp;
      else if (positive) ++fp;
      else if (labels[i] == 1) ++fn;
    }
    const double p = tp + fp == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fp);
    const double r = tp + fn == 0 ? 0.0 : static_cast<double>(tp) / static_cast<double>(tp + fn);
    out.push_back({t, p, r});
  }
  return out;
}

inline double brute_force_ap(const std::vector<int>& labels, const std::vector<double>& scores) {
  double ap = 0.0, prev_recall = 0.0;
  for (const auto& p : brute_force_pr(labels, scores)) {
    ap += (p.recall - prev_recall) * p.precision;
    prev_recall = p.recall;
  }
  return ap;
}

/// k nearest by full distance table; ties go to the lower index.
inline double brute_force_knn(const triage::Matrix& rows, const std::vector<int>& labels, const std::vector<double>& q,
                              int k) {
  std::vector<std::pair<double, std::size_t>> d;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double s = 0;
    for (std::size_t j = 0; j < q.size(); ++j) s += (rows[i][j] - q[j]) * (rows[i][j] - q[j]);
    d.emplace_back(s, i);
  }
  std::sort(d.begin(), d.end());
  const auto kk = std::min<std::size_t>(static_cast<std::size_t>(k), d.size());
  int pos = 0;
  for (std::size_t i = 0; i < kk; ++i) pos += labels[d[i].second];
  return static_cast<double>(pos) / static_cast<double>(kk);
}

/// Gini gain of every (feature, threshold) candidate; returns the best using
/// the lowest-feature, lowest-threshold rule for ties.
struct SplitChoice {
  int feature = -1;
  double threshold = 0;
  double weighted_gini = 0;
};

inline SplitChoice brute_force_root_split(const triage::Matrix& rows, const std::vector<int>& labels) {
  auto gini = [](double n0, double n1) {
    const double n = n0 + n1;
    return n == 0 ? 0.0 : 1.0 - (n0 / n) * (n0 / n) - (n1 / n) * (n1 / n);
  };
  SplitChoice best;
  double best_value = 1e300;
  for (std::size_t f = 0; f < rows.front().size(); ++f) {
    std::set<double> values;
    for (const auto& r : rows) values.insert(r[f]);
    std::vector<double> v(values.begin(), values.end());
    for (std::size_t i = 0; i + 1 < v.size(); ++i) {
      const double t = (v[i] + v[i + 1]) / 2;
      double l0 = 0, l1 = 0, r0 = 0, r1 = 0;
      for (std::size_t s = 0; s < rows.size(); ++s) {
        auto& side0 = rows[s][f] <= t ? l0 : r0;
        auto& side1 = rows[s][f] <= t ? l1 : r1;
        (labels[s] ? side1 : side0) += 1;
      }
      const double n = static_cast<double>(rows.size());
      const double w = (l0 + l1) / n * gini(l0, l1) + (r0 + r1) / n * gini(r0, r1);
      if (w < best_value - 1e-12) {
        best_value = w;
        best = {static_cast<int>(f), t, w};
      }
    }
  }
  return best;
}

}  // namespace testsupport
