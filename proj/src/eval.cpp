#include "equisym/eval.hpp"

#include <algorithm>
#include <charconv>
#include <tuple>

#include "equisym/errors.hpp"

namespace equisym {

namespace {

void check_shapes(std::size_t scores, std::size_t gt, int height, int width) {
  const auto n = static_cast<std::size_t>(height) * width;
  if (scores != n || gt != n) throw UsageError("evaluation: score and ground-truth shapes differ");
}

/// Number of thresholds t with t <= value (thresholds ascending).
std::size_t passed(const std::vector<double>& thresholds, double value) {
  return static_cast<std::size_t>(std::upper_bound(thresholds.begin(), thresholds.end(), value) - thresholds.begin());
}

/// Turns "value passes the first k thresholds" histograms into per-threshold counts.
void add_suffix(std::vector<long long>& counts, const std::vector<long long>& hist) {
  long long running = 0;
  for (std::size_t i = counts.size(); i-- > 0;) {
    running += hist[i + 1];
    counts[i] += running;
  }
}

EvalReport make_report(const std::vector<double>& thresholds, const std::vector<long long>& pred,
                       const std::vector<long long>& pred_hit, const std::vector<long long>& gt_hit, long long gt) {
  EvalReport r;
  r.thresholds = thresholds;
  r.best_f1 = -1.0;
  for (std::size_t i = 0; i < thresholds.size(); ++i) {
    const double p = pred[i] == 0 ? (gt == 0 ? 1.0 : 0.0) : static_cast<double>(pred_hit[i]) / pred[i];
    const double rc = gt == 0 ? 1.0 : static_cast<double>(gt_hit[i]) / gt;
    const double f = f1_score(p, rc);
    r.precision.push_back(p);
    r.recall.push_back(rc);
    r.f1.push_back(f);
    if (f > r.best_f1) {
      r.best_f1 = f;
      r.best_threshold = thresholds[i];
      r.tp = pred_hit[i];
      r.fp = pred[i] - pred_hit[i];
      r.fn = gt - gt_hit[i];
    }
  }
  if (r.best_f1 < 0) r.best_f1 = 0.0;
  return r;
}

void check_thresholds(const std::vector<double>& t) {
  if (t.empty() || !std::is_sorted(t.begin(), t.end())) throw UsageError("thresholds must be non-empty and ascending");
}

}  // namespace

std::vector<double> default_thresholds(int count) {
  std::vector<double> t;
  for (int i = 0; i < count; ++i) t.push_back((i + 0.5) / count);
  return t;
}

double f1_score(double precision, double recall) {
  return precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
}

BinaryMap dilate_disk(const BinaryMap& map, int height, int width, int radius) {
  BinaryMap out(map.size(), 0);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      if (!map[static_cast<std::size_t>(y) * width + x]) continue;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
          if (dx * dx + dy * dy > radius * radius) continue;
          const int xx = x + dx, yy = y + dy;
          if (xx >= 0 && yy >= 0 && xx < width && yy < height) out[static_cast<std::size_t>(yy) * width + xx] = 1;
        }
    }
  return out;
}

// ---------------------------------------------------------------------------

DilationF1::DilationF1(std::vector<double> thresholds) : thresholds_(std::move(thresholds)) {
  check_thresholds(thresholds_);
  pred_.assign(thresholds_.size(), 0);
  pred_hit_.assign(thresholds_.size(), 0);
  gt_hit_.assign(thresholds_.size(), 0);
}

void DilationF1::add(const std::vector<float>& scores, const BinaryMap& gt, int height, int width) {
  check_shapes(scores.size(), gt.size(), height, width);
  const std::size_t nt = thresholds_.size();
  const BinaryMap gt_dilated = dilate_disk(gt, height, width);
  std::vector<long long> pred_hist(nt + 1, 0), hit_hist(nt + 1, 0), gt_hist(nt + 1, 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    const std::size_t k = passed(thresholds_, scores[i]);
    pred_hist[k] += 1;
    if (gt_dilated[i]) hit_hist[k] += 1;
  }
  const int r = kMatchRadius;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      if (!gt[static_cast<std::size_t>(y) * width + x]) continue;
      gt_ += 1;
      float best = -1.0f;
      for (int dy = -r; dy <= r; ++dy)
        for (int dx = -r; dx <= r; ++dx) {
          const int xx = x + dx, yy = y + dy;
          if (dx * dx + dy * dy > r * r || xx < 0 || yy < 0 || xx >= width || yy >= height) continue;
          best = std::max(best, scores[static_cast<std::size_t>(yy) * width + xx]);
        }
      gt_hist[passed(thresholds_, best)] += 1;
    }
  add_suffix(pred_, pred_hist);
  add_suffix(pred_hit_, hit_hist);
  add_suffix(gt_hit_, gt_hist);
}

EvalReport DilationF1::report() const { return make_report(thresholds_, pred_, pred_hit_, gt_hit_, gt_); }

EvalReport f1_dilation(const std::vector<float>& scores, const BinaryMap& gt, int height, int width,
                       const std::vector<double>& thresholds) {
  DilationF1 acc(thresholds);
  acc.add(scores, gt, height, width);
  return acc.report();
}

// ---------------------------------------------------------------------------

BinaryMap thin(const BinaryMap& map, int height, int width) {
  BinaryMap img = map;
  for (auto& v : img) v = v ? 1 : 0;
  auto at = [&](int x, int y) -> int {
    if (x < 0 || y < 0 || x >= width || y >= height) return 0;
    return img[static_cast<std::size_t>(y) * width + x];
  };
  std::vector<std::size_t> remove;
  bool changed = true;
  while (changed) {
    changed = false;
    for (int pass = 0; pass < 2; ++pass) {
      remove.clear();
      for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) {
          if (!at(x, y)) continue;
          // neighbours P2..P9 clockwise from north
          const int p[8] = {at(x, y - 1), at(x + 1, y - 1), at(x + 1, y), at(x + 1, y + 1),
                            at(x, y + 1), at(x - 1, y + 1), at(x - 1, y), at(x - 1, y - 1)};
          int b = 0, a = 0;
          for (int i = 0; i < 8; ++i) {
            b += p[i];
            if (!p[i] && p[(i + 1) % 8]) ++a;
          }
          if (b < 2 || b > 6 || a != 1) continue;
          if (pass == 0 && (p[0] * p[2] * p[4] != 0 || p[2] * p[4] * p[6] != 0)) continue;
          if (pass == 1 && (p[0] * p[2] * p[6] != 0 || p[0] * p[4] * p[6] != 0)) continue;
          remove.push_back(static_cast<std::size_t>(y) * width + x);
        }
      for (auto i : remove) img[i] = 0;
      if (!remove.empty()) changed = true;
    }
  }
  return img;
}

MatchCounts match_pixels(const BinaryMap& pred, const BinaryMap& gt, int height, int width, int radius) {
  MatchCounts out;
  std::vector<std::tuple<int, std::size_t, std::size_t>> pairs;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const std::size_t pi = static_cast<std::size_t>(y) * width + x;
      if (gt[pi]) ++out.gt;
      if (!pred[pi]) continue;
      ++out.pred;
      for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
          const int d2 = dx * dx + dy * dy;
          const int xx = x + dx, yy = y + dy;
          if (d2 > radius * radius || xx < 0 || yy < 0 || xx >= width || yy >= height) continue;
          const std::size_t gi = static_cast<std::size_t>(yy) * width + xx;
          if (gt[gi]) pairs.emplace_back(d2, pi, gi);
        }
    }
  std::sort(pairs.begin(), pairs.end());
  std::vector<std::uint8_t> pred_used(pred.size(), 0), gt_used(gt.size(), 0);
  for (const auto& [d2, pi, gi] : pairs) {
    if (pred_used[pi] || gt_used[gi]) continue;
    pred_used[pi] = gt_used[gi] = 1;
    ++out.matched;
  }
  return out;
}

LegacyF1::LegacyF1(std::vector<double> thresholds) : thresholds_(std::move(thresholds)) {
  check_thresholds(thresholds_);
  pred_.assign(thresholds_.size(), 0);
  matched_.assign(thresholds_.size(), 0);
}

void LegacyF1::add(const std::vector<float>& scores, const BinaryMap& gt, int height, int width) {
  check_shapes(scores.size(), gt.size(), height, width);
  BinaryMap gt_bin(gt.size());
  long long gt_count = 0;
  for (std::size_t i = 0; i < gt.size(); ++i) gt_count += gt_bin[i] = gt[i] ? 1 : 0;
  gt_ += gt_count;
  long long previous_count = -1;
  MatchCounts previous;
  for (std::size_t t = 0; t < thresholds_.size(); ++t) {
    BinaryMap pred(scores.size());
    long long count = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) count += pred[i] = scores[i] >= thresholds_[t] ? 1 : 0;
    // thresholds ascend, so an unchanged count means an unchanged set
    if (count != previous_count) {
      previous = match_pixels(thin(pred, height, width), gt_bin, height, width);
      previous_count = count;
    }
    pred_[t] += previous.pred;
    matched_[t] += previous.matched;
  }
}

EvalReport LegacyF1::report() const { return make_report(thresholds_, pred_, matched_, matched_, gt_); }

EvalReport f1_legacy(const std::vector<float>& scores, const BinaryMap& gt, int height, int width,
                     const std::vector<double>& thresholds) {
  LegacyF1 acc(thresholds);
  acc.add(scores, gt, height, width);
  return acc.report();
}

std::string format_report_kv(const std::string& prefix, const EvalReport& r) {
  auto num = [](double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, ptr);
  };
  std::string out;
  out += prefix + ".best_f1=" + num(r.best_f1) + '\n';
  out += prefix + ".best_threshold=" + num(r.best_threshold) + '\n';
  out += prefix + ".tp=" + std::to_string(r.tp) + '\n';
  out += prefix + ".fp=" + std::to_string(r.fp) + '\n';
  out += prefix + ".fn=" + std::to_string(r.fn) + '\n';
  auto list = [&](const char* key, const std::vector<double>& v) {
    out += prefix + '.' + key + '=';
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + num(v[i]);
    out += '\n';
  };
  list("thresholds", r.thresholds);
  list("precision", r.precision);
  list("recall", r.recall);
  list("f1", r.f1);
  return out;
}

}  // namespace equisym
