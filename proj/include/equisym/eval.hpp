#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace equisym {

/// Binary or score map, row-major.
using BinaryMap = std::vector<std::uint8_t>;

inline constexpr int kMatchRadius = 5;

struct EvalReport {
  std::vector<double> thresholds;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  double best_f1 = 0.0;
  double best_threshold = 0.0;
  long long tp = 0;  // at the best threshold
  long long fp = 0;
  long long fn = 0;
};

/// `count` evenly spaced thresholds (i + 0.5) / count.
std::vector<double> default_thresholds(int count = 100);

double f1_score(double precision, double recall);

/// Dilation with the integer disk dx^2 + dy^2 <= radius^2.
BinaryMap dilate_disk(const BinaryMap& map, int height, int width, int radius = kMatchRadius);

/// Precision from predicted pixels inside the dilated ground truth, recall from
/// ground-truth pixels inside the dilated prediction. Counts accumulate over
/// every added image and the report is taken on the totals.
class DilationF1 {
 public:
  explicit DilationF1(std::vector<double> thresholds = default_thresholds());
  void add(const std::vector<float>& scores, const BinaryMap& gt, int height, int width);
  EvalReport report() const;

 private:
  std::vector<double> thresholds_;
  std::vector<long long> pred_, pred_hit_, gt_hit_;
  long long gt_ = 0;
};

EvalReport f1_dilation(const std::vector<float>& scores, const BinaryMap& gt, int height, int width,
                       const std::vector<double>& thresholds = default_thresholds());

/// Zhang-Suen thinning to a one-pixel skeleton.
BinaryMap thin(const BinaryMap& map, int height, int width);

struct MatchCounts {
  long long pred = 0;
  long long gt = 0;
  long long matched = 0;
};

/// Greedy one-to-one matching of predicted and ground-truth pixels within
/// Euclidean distance `radius`, closest pairs first (ties by prediction then
/// ground-truth raster index).
MatchCounts match_pixels(const BinaryMap& pred, const BinaryMap& gt, int height, int width,
                         int radius = kMatchRadius);

/// Thinned prediction matched against the ground truth as given.
class LegacyF1 {
 public:
  explicit LegacyF1(std::vector<double> thresholds = default_thresholds());
  void add(const std::vector<float>& scores, const BinaryMap& gt, int height, int width);
  EvalReport report() const;

 private:
  std::vector<double> thresholds_;
  std::vector<long long> pred_, matched_;
  long long gt_ = 0;
};

EvalReport f1_legacy(const std::vector<float>& scores, const BinaryMap& gt, int height, int width,
                     const std::vector<double>& thresholds = default_thresholds());

/// `prefix.key=value` lines for the machine-readable report.
std::string format_report_kv(const std::string& prefix, const EvalReport& report);

}  // namespace equisym
