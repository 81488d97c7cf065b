#include <doctest.h>

#include <random>

#include "equisym/data.hpp"
#include "equisym/errors.hpp"
#include "equisym/eval.hpp"

using namespace equisym;

namespace {

std::size_t count(const BinaryMap& m) {
  std::size_t n = 0;
  for (auto v : m) n += v ? 1 : 0;
  return n;
}

BinaryMap point_map(int h, int w, std::initializer_list<std::pair<int, int>> xy) {
  BinaryMap m(static_cast<std::size_t>(h) * w, 0);
  for (auto [x, y] : xy) m[static_cast<std::size_t>(y) * w + x] = 1;
  return m;
}

std::vector<float> as_scores(const BinaryMap& m) { return {m.begin(), m.end()}; }

BinaryMap flip_horizontal(const BinaryMap& m, int h, int w) {
  BinaryMap out(m.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out[static_cast<std::size_t>(y) * w + x] = m[static_cast<std::size_t>(y) * w + (w - 1 - x)];
  return out;
}

std::vector<float> flip_horizontal(const std::vector<float>& m, int h, int w) {
  std::vector<float> out(m.size());
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) out[static_cast<std::size_t>(y) * w + x] = m[static_cast<std::size_t>(y) * w + (w - 1 - x)];
  return out;
}

}  // namespace

TEST_CASE("thresholds and F1 definition") {
  const auto t = default_thresholds();
  REQUIRE(t.size() == 100);
  CHECK(t.front() == 0.005);
  CHECK(t.back() == 0.995);
  CHECK(f1_score(0.0, 0.0) == 0.0);
  CHECK(f1_score(1.0, 0.5) == doctest::Approx(2.0 / 3.0));
}

TEST_CASE("disk dilation") {
  const auto one = dilate_disk(point_map(64, 64, {{32, 32}}), 64, 64);
  CHECK(count(one) == 81);
  int oracle = 0;
  for (int dy = -5; dy <= 5; ++dy)
    for (int dx = -5; dx <= 5; ++dx) oracle += dx * dx + dy * dy <= 25;
  CHECK(oracle == 81);
  CHECK(count(dilate_disk(BinaryMap(64 * 64, 0), 64, 64)) == 0);

  const auto a = point_map(32, 32, {{3, 4}});
  const auto b = point_map(32, 32, {{3, 4}, {20, 20}});
  const auto da = dilate_disk(a, 32, 32), db = dilate_disk(b, 32, 32);
  for (std::size_t i = 0; i < da.size(); ++i)
    if (da[i]) CHECK(db[i]);
  CHECK(count(dilate_disk(point_map(32, 32, {{0, 0}}), 32, 32)) < 81);
}

TEST_CASE("dilation F1 examples") {
  const auto gt = point_map(64, 64, {{10, 10}});
  const auto pred = point_map(64, 64, {{13, 14}});
  const auto r = f1_dilation(as_scores(pred), gt, 64, 64);
  CHECK(r.best_f1 == 1.0);
  CHECK(r.precision[0] == 1.0);
  CHECK(r.recall[0] == 1.0);
  CHECK(r.tp == 1);
  CHECK(r.fp == 0);
  CHECK(r.fn == 0);

  const auto far = f1_dilation(as_scores(point_map(64, 64, {{14, 14}})), gt, 64, 64);
  CHECK(far.best_f1 == 0.0);

  CHECK(f1_dilation(std::vector<float>(64 * 64, 0.0f), gt, 64, 64).best_f1 == 0.0);
  const auto both_empty = f1_dilation(std::vector<float>(64 * 64, 0.0f), BinaryMap(64 * 64, 0), 64, 64);
  CHECK(both_empty.best_f1 == 1.0);
  CHECK_THROWS_AS(f1_dilation(std::vector<float>(10, 0.0f), gt, 64, 64), UsageError);
}

TEST_CASE("self-evaluation is exact on synthetic ground truth") {
  SyntheticSpec spec;
  spec.seed = 12;
  const auto table = FoldClassTable::standard();
  DilationF1 corpus;
  for (const auto& s : generate_synthetic(spec, 40)) {
    const auto labels = make_labels(s.annotation, 8, table);
    for (const auto* gt : {&labels.y_ref, &labels.y_rot}) {
      if (count(*gt) == 0) continue;
      const auto r = f1_dilation(as_scores(*gt), *gt, 64, 64);
      CHECK(r.best_f1 == 1.0);
      corpus.add(as_scores(*gt), *gt, 64, 64);
    }
  }
  CHECK(corpus.report().best_f1 == 1.0);
}

TEST_CASE("precision and recall respond monotonically to perturbations") {
  std::mt19937_64 rng(5);
  const int h = 48, w = 48;
  BinaryMap gt(h * w, 0);
  for (int x = 5; x < 40; ++x) gt[20 * w + x] = 1;
  std::vector<float> score(h * w, 0.0f);
  for (int x = 8; x < 36; ++x) score[21 * w + x] = 0.9f;
  const auto base = f1_dilation(score, gt, h, w);

  auto more_fp = score;
  for (int x = 5; x < 40; ++x) more_fp[44 * w + x] = 0.9f;
  const auto with_fp = f1_dilation(more_fp, gt, h, w);
  for (std::size_t i = 0; i < base.precision.size(); ++i) CHECK(with_fp.precision[i] <= base.precision[i]);

  auto fewer_tp = score;
  for (int x = 8; x < 20; ++x) fewer_tp[21 * w + x] = 0.0f;
  const auto without_tp = f1_dilation(fewer_tp, gt, h, w);
  for (std::size_t i = 0; i < base.recall.size(); ++i) CHECK(without_tp.recall[i] <= base.recall[i]);
}

TEST_CASE("evaluators are covariant under horizontal flips") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  const int h = 32, w = 40;
  std::vector<float> score(h * w);
  for (auto& v : score) v = u(rng) * u(rng);
  BinaryMap gt(h * w, 0);
  for (int x = 3; x < 30; ++x) gt[(x / 2 + 4) * w + x] = 1;
  const auto fs = flip_horizontal(score, h, w);
  const auto fg = flip_horizontal(gt, h, w);
  const auto a = f1_dilation(score, gt, h, w), b = f1_dilation(fs, fg, h, w);
  CHECK(a.precision == b.precision);
  CHECK(a.recall == b.recall);
  const auto c = f1_legacy(score, gt, h, w), d = f1_legacy(fs, fg, h, w);
  CHECK(c.best_f1 == doctest::Approx(d.best_f1).epsilon(0.02));
}

TEST_CASE("thinning") {
  const int h = 5, w = 9;
  BinaryMap line(h * w, 0);
  for (int x = 1; x < 8; ++x) line[2 * w + x] = 1;
  CHECK(thin(line, h, w) == line);

  BinaryMap thick(h * w, 0);
  for (int y = 1; y <= 3; ++y)
    for (int x = 1; x < 8; ++x) thick[y * w + x] = 1;
  const auto skel = thin(thick, h, w);
  BinaryMap expected(h * w, 0);
  for (int x = 2; x <= 5; ++x) expected[2 * w + x] = 1;
  CHECK(skel == expected);
  CHECK(thin(skel, h, w) == skel);

  for (int r : {3, 4, 6, 9, 12}) {
    const int n = 2 * r + 5;
    BinaryMap disk(n * n, 0);
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) disk[y * n + x] = (x - n / 2) * (x - n / 2) + (y - n / 2) * (y - n / 2) <= r * r;
    const auto dot = thin(disk, n, n);
    INFO("radius " << r);
    CHECK(count(dot) >= 1);
    CHECK(count(dot) <= 4);
  }
}

TEST_CASE("legacy matching") {
  const auto gt = point_map(16, 16, {{5, 5}, {7, 5}});
  const auto pred = point_map(16, 16, {{6, 5}});
  const auto m = match_pixels(pred, gt, 16, 16);
  CHECK(m.matched == 1);
  CHECK(m.pred == 1);
  CHECK(m.gt == 2);
  const auto r = f1_legacy(as_scores(pred), gt, 16, 16);
  CHECK(r.tp == 1);
  CHECK(r.fn == 1);
  CHECK(r.fp == 0);
  CHECK(r.best_f1 == doctest::Approx(2.0 / 3.0));

  const auto closest = match_pixels(point_map(16, 16, {{6, 5}, {9, 5}}), point_map(16, 16, {{8, 5}, {3, 5}}), 16, 16);
  CHECK(closest.matched == 2);

  BinaryMap line(32 * 32, 0);
  for (int x = 2; x < 30; ++x) line[10 * 32 + x] = 1;
  CHECK(f1_legacy(as_scores(line), line, 32, 32).best_f1 == 1.0);
  CHECK(f1_legacy(std::vector<float>(32 * 32, 0.0f), line, 32, 32).best_f1 == 0.0);
}

TEST_CASE("key-value report") {
  const auto gt = point_map(8, 8, {{2, 2}});
  const auto text = format_report_kv("ref.dilation", f1_dilation(as_scores(gt), gt, 8, 8));
  CHECK(text.find("ref.dilation.best_f1=1\n") != std::string::npos);
  CHECK(text.find("ref.dilation.tp=1\n") != std::string::npos);
  CHECK(text.find("ref.dilation.thresholds=0.005,") != std::string::npos);
}
