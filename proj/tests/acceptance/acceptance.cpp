// Acceptance run: prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. `acceptance 1 2 5` runs a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "cli.hpp"
#include "equisym/data.hpp"
#include "equisym/eval.hpp"
#include "equisym/group.hpp"
#include "equisym/kernel.hpp"
#include "equisym/losses.hpp"
#include "equisym/model_checks.hpp"
#include "equisym/train.hpp"

using namespace equisym;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

/// Collects sub-check outcomes of one criterion.
class Criterion {
 public:
  explicit Criterion(std::string title) : title_(std::move(title)) {}

  void check(bool ok, const std::string& what) {
    if (!ok) {
      passed_ = false;
      std::cout << "    failed: " << what << '\n';
    }
  }
  void note(const std::string& line) { std::cout << "    " << line << '\n'; }
  bool passed() const { return passed_; }
  const std::string& title() const { return title_; }

 private:
  std::string title_;
  bool passed_ = true;
};

std::string fmt(double v, const char* spec = "%.6g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

fs::path scratch_dir() {
  static const fs::path dir = fs::temp_directory_path() / ("equisym_acceptance_" + std::to_string(::getpid()));
  return dir;
}

int cli_run(const std::vector<std::string>& args, std::string* stdout_text = nullptr) {
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  if (stdout_text) *stdout_text = out.str();
  if (code != 0) std::cout << "    command failed (" << code << "): " << err.str();
  return code;
}

std::string slurp(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

// ---------------------------------------------------------------------------
// 1. group algebra

void group_algebra(Criterion& c) {
  const auto start = Clock::now();
  for (int n : {2, 4, 8}) {
    const DihedralGroup g(n);
    const auto els = g.elements();
    const int size = g.size();
    bool closure = true, identity = true, inverses = true, assoc = true, hom = true, plane = true, relations = true;
    for (const auto& a : els) {
      identity &= compose(g, g.identity(), a) == a && compose(g, a, g.identity()) == a;
      inverses &= compose(g, a, inverse(g, a)) == g.identity() && compose(g, inverse(g, a), a) == g.identity();
      for (const auto& b : els) {
        const auto ab = compose(g, a, b);
        closure &= g.contains(ab);
        hom &= (regular_rep(g, a) * regular_rep(g, b) - regular_rep(g, ab)).cwiseAbs().maxCoeff() == 0;
        plane &= (plane_matrix(g, a) * plane_matrix(g, b) - plane_matrix(g, ab)).cwiseAbs().maxCoeff() <= 1e-12;
      }
    }
    hom &= regular_rep(g, g.identity()) == Eigen::MatrixXi::Identity(size, size);
    // Associativity: exhaustive for D2/D4, 4096 sampled triples for D8.
    std::mt19937_64 rng(n);
    auto triple = [&](const GroupElement& a, const GroupElement& b, const GroupElement& d) {
      assoc &= compose(g, compose(g, a, b), d) == compose(g, a, compose(g, b, d));
    };
    if (n <= 4) {
      for (const auto& a : els)
        for (const auto& b : els)
          for (const auto& d : els) triple(a, b, d);
    } else {
      for (int t = 0; t < 4096; ++t) triple(els[rng() % size], els[rng() % size], els[rng() % size]);
    }
    // r^N = e, m^2 = e, m r m = r^-1.
    const GroupElement r{1, false}, m{0, true};
    GroupElement p = g.identity();
    for (int k = 0; k < n; ++k) p = compose(g, p, r);
    relations &= p == g.identity() && compose(g, m, m) == g.identity() &&
                 compose(g, compose(g, m, r), m) == inverse(g, r);
    const std::string tag = "D" + std::to_string(n);
    c.check(closure, tag + " closure");
    c.check(identity, tag + " identity");
    c.check(inverses, tag + " inverses");
    c.check(assoc, tag + " associativity");
    c.check(relations, tag + " presentation relations");
    c.check(hom, tag + " regular representation homomorphism");
    c.check(plane, tag + " plane action matches composition");
  }
  const double t = seconds_since(start);
  c.note("D2, D4 exhaustive; D8 exhaustive pairs, 4096 sampled triples; " + fmt(t, "%.3f") + " s");
  c.check(t < 1.0, "runtime < 1 s");
}

// ---------------------------------------------------------------------------
// 2. kernel constraint

void kernel_constraint(Criterion& c) {
  const auto start = Clock::now();
  const DihedralGroup d4(4);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> normal;
  double worst_exact = 0.0;
  for (int k : {3, 5})
    for (const auto rule : {ExpansionRule::lifting, ExpansionRule::group_to_group}) {
      const auto in = rule == ExpansionRule::lifting ? FieldType::trivial(d4, 2) : FieldType::regular(d4, 2);
      const SteerableKernelSpec spec{in, FieldType::regular(d4, 3), k, rule};
      Eigen::VectorXd base(spec.base_parameter_count());
      for (auto& v : base) v = normal(rng);
      const auto w = expand_kernel<double>(spec, base);
      for (const auto& g : d4.elements()) worst_exact = std::max(worst_exact, kernel_constraint_residual(spec, w, g).max_abs);
    }
  c.note("D4 lifting and group kernels, 3x3 and 5x5, all 8 elements: max residual " + fmt(worst_exact));
  c.check(worst_exact == 0.0, "D4 residual is exactly zero");

  const DihedralGroup d8(8);
  const SteerableKernelSpec spec{FieldType::regular(d8, 1), FieldType::regular(d8, 1), 5, ExpansionRule::group_to_group};
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::VectorXd base(spec.base_parameter_count());
    for (int slot = 0; slot < d8.size(); ++slot) {
      const double a = normal(rng), bx = 0.3 * normal(rng), by = 0.3 * normal(rng);
      for (int t = 0; t < 25; ++t) {
        const double x = t % 5 - 2.0, y = t / 5 - 2.0;
        base(slot * 25 + t) = std::exp(-(x * x + y * y) / 8.0) * (a + bx * x + by * y);
      }
    }
    const auto w = expand_kernel<double>(spec, base);
    for (const auto& g : d8.elements()) {
      const auto r = kernel_constraint_residual(spec, w, g);
      if (d8.is_grid_exact(g)) c.check(r.max_abs == 0.0, "D8 grid-exact element residual is zero");
      worst = std::max(worst, r.relative_l2);
    }
  }
  const double t = seconds_since(start);
  c.note("D8 interpolated residual on smooth random filters (5 draws): relative L2 " + fmt(worst, "%.4f") + "; " +
         fmt(t, "%.3f") + " s");
  c.check(worst < 0.15, "D8 relative residual < 0.15");
  c.check(t < 5.0, "runtime < 5 s");
}

// ---------------------------------------------------------------------------
// 3. end-to-end equivariance

void end_to_end_equivariance(Criterion& c) {
  const auto start = Clock::now();
  EquiSymModel<float> model(ModelConfig::desk(), 31);
  std::mt19937_64 rng(32);
  randomize_affine(model, rng);
  const auto image = random_field<float>(model.input_type(), 64, 64, rng);
  double head = 0.0, layer = 0.0;
  for (const auto& r : model_residuals(model, image)) head = std::max({head, r.ref, r.rot});
  const auto layers = layer_residuals(model, image);
  std::string worst_layer;
  for (const auto& r : layers)
    if (r.residual >= layer) layer = r.residual, worst_layer = r.name;
  const double t = seconds_since(start);
  c.note("desk D4 model (float), 3x64x64 random input, 8 elements: Y residual " + fmt(head) + ", worst of " +
         std::to_string(layers.size()) + " layers " + fmt(layer) + " (" + worst_layer + "); " + fmt(t, "%.1f") + " s");
  c.check(head <= 1e-3, "Y^ref / Y^rot residual <= 1e-3");
  c.check(layer <= 1e-4, "per-layer residual <= 1e-4");
  c.check(t < 30.0, "runtime < 30 s");
}

// ---------------------------------------------------------------------------
// 4. gradients

void gradients(Criterion& c) {
  const auto start = Clock::now();
  double worst = 0.0;
  std::string worst_what;
  std::set<std::string> layers;
  for (std::uint64_t seed = 0; seed < 5; ++seed)
    for (const auto& e : gradcheck_suite(4, seed)) {
      layers.insert(e.layer);
      if (e.max_relative_error >= worst) worst = e.max_relative_error, worst_what = e.layer + " / " + e.tensor;
    }
  const double t = seconds_since(start);
  c.note(std::to_string(layers.size()) + " layer configurations plus the model loss, 5 seeds, double precision: worst " +
         fmt(worst) + " (" + worst_what + "); " + fmt(t, "%.1f") + " s");
  c.check(worst <= 1e-3, "relative error <= 1e-3");
  c.check(t < 120.0, "runtime < 2 min");
}

// ---------------------------------------------------------------------------
// 5. loss oracles (independent long-double evaluations)

long double focal_oracle(const std::vector<double>& p, const std::vector<double>& y, long double alpha,
                         long double gamma) {
  long double sum = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const long double q = std::clamp<long double>(p[i], 1e-6L, 1.0L - 1e-6L);
    sum += y[i] > 0.5 ? -alpha * std::pow(1 - q, gamma) * std::log(q) : -(1 - alpha) * std::pow(q, gamma) * std::log(1 - q);
  }
  return sum / p.size();
}

long double ce_oracle(const std::vector<std::vector<double>>& logits, const std::vector<int>& cls, long double w) {
  long double num = 0, den = 0;
  for (std::size_t i = 0; i < cls.size(); ++i) {
    long double z = 0;
    for (double v : logits[i]) z += std::exp(static_cast<long double>(v));
    const long double weight = cls[i] == static_cast<int>(logits[i].size()) - 1 ? w : 1;
    num += weight * (std::log(z) - logits[i][cls[i]]);
    den += weight;
  }
  return num / den;
}

void loss_oracles(Criterion& c) {
  const double alpha = 0.95, gamma = 2.0;
  // Worked value: p = 0.5 on a positive pixel.
  const double worked = focal_loss(Eigen::ArrayXd::Constant(1, 0.5), Eigen::ArrayXd::Constant(1, 1.0), alpha, gamma);
  const double closed = 0.95 * 0.25 * std::log(2.0);
  c.note("focal(p=0.5, y=1) = " + fmt(worked, "%.9f") + ", closed form 0.95*0.25*ln2 = " + fmt(closed, "%.9f") +
         " (quoted decimal 0.164616 is " + fmt(std::abs(worked - 0.164616), "%.2e") + " away)");
  c.check(std::abs(worked - closed) <= 1e-6, "focal worked value matches its closed form");

  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> unit(0.0, 1.0), logit(-4.0, 4.0);
  double focal_err = 0.0, ce_err = 0.0;
  const DihedralGroup d4(4);
  for (int t = 0; t < 20; ++t) {
    const int n = 5 + static_cast<int>(rng() % 60);
    std::vector<double> p(n), y(n);
    Eigen::ArrayXd pa(n), ya(n);
    for (int i = 0; i < n; ++i) {
      p[i] = t == 0 && i < 2 ? static_cast<double>(i) : unit(rng);  // includes exact 0 and 1 for the clamp
      y[i] = unit(rng) < 0.3;
      pa[i] = p[i];
      ya[i] = y[i];
    }
    focal_err = std::max(focal_err, std::abs(focal_loss(pa, ya, alpha, gamma) - static_cast<double>(focal_oracle(p, y, alpha, gamma))));

    const int classes = 2 + static_cast<int>(rng() % 21);
    const int h = 1 + static_cast<int>(rng() % 5), w = 1 + static_cast<int>(rng() % 5);
    FeatureField<double> f(FieldType::trivial(d4, classes), h, w);
    std::vector<std::vector<double>> rows(h * w, std::vector<double>(classes));
    std::vector<std::int32_t> cls(h * w);
    std::vector<int> cls_int(h * w);
    for (int i = 0; i < h * w; ++i) {
      for (int k = 0; k < classes; ++k) f.data(k, i) = rows[i][k] = logit(rng);
      cls_int[i] = cls[i] = static_cast<int>(rng() % classes);
    }
    const double weight = t % 2 ? 0.01 : 0.001;
    ce_err = std::max(ce_err, std::abs(weighted_ce<double>(f, cls, weight, nullptr) -
                                       static_cast<double>(ce_oracle(rows, cls_int, weight))));
  }
  c.note("20 random tensors: focal max error " + fmt(focal_err, "%.2e") + ", weighted CE max error " + fmt(ce_err, "%.2e"));
  c.check(focal_err <= 1e-6, "focal loss matches the oracle to 1e-6");
  c.check(ce_err <= 1e-6, "weighted CE matches the oracle to 1e-6");

  double lnc_err = 0.0;
  for (int classes : {2, 9, 22}) {
    FeatureField<double> f(FieldType::trivial(d4, classes), 3, 3);
    f.data.setConstant(0.7);
    std::vector<std::int32_t> cls(9);
    for (int i = 0; i < 9; ++i) cls[i] = i % classes;
    lnc_err = std::max(lnc_err, std::abs(weighted_ce<double>(f, cls, 0.01, nullptr) - std::log(classes)));
  }
  c.note("uniform logits give ln C for C = 2, 9, 22: max error " + fmt(lnc_err, "%.2e"));
  c.check(lnc_err <= 1e-6, "ln C cases");
}

// ---------------------------------------------------------------------------
// 6. evaluator

BinaryMap point_map(int h, int w, const std::vector<std::pair<int, int>>& xy) {
  BinaryMap m(static_cast<std::size_t>(h) * w, 0);
  for (auto [x, y] : xy) m[static_cast<std::size_t>(y) * w + x] = 1;
  return m;
}

std::vector<float> as_scores(const BinaryMap& m) { return {m.begin(), m.end()}; }

void evaluator(Criterion& c) {
  SyntheticSpec spec;
  spec.seed = 61;
  const auto table = FoldClassTable::standard();
  int perfect = 0, total = 0;
  for (const auto& s : generate_synthetic(spec, 100)) {
    const auto l = make_labels(s.annotation, 8, table);
    for (const auto* y : {&l.y_ref, &l.y_rot}) {
      ++total;
      perfect += f1_dilation(as_scores(*y), *y, l.height, l.width).best_f1 == 1.0;
    }
  }
  c.note("f1_dilation(gt, gt) = 1 on " + std::to_string(perfect) + " of " + std::to_string(total) +
         " synthetic maps (100 images, both heads)");
  c.check(perfect == total, "self-evaluation is exactly 1");

  const auto disk = dilate_disk(point_map(64, 64, {{32, 32}}), 64, 64);
  const long long disk_count = std::count(disk.begin(), disk.end(), 1);
  c.note("dilated single pixel covers " + std::to_string(disk_count) + " pixels");
  c.check(disk_count == 81, "81-pixel disk");

  const auto r = f1_dilation(as_scores(point_map(64, 64, {{13, 14}})), point_map(64, 64, {{10, 10}}), 64, 64);
  c.note("prediction (13,14) vs ground truth (10,10): TP " + std::to_string(r.tp) + ", F1 " + fmt(r.best_f1));
  c.check(r.tp == 1 && r.fp == 0 && r.fn == 0 && r.best_f1 == 1.0, "distance-5 TP example");

  const auto legacy = f1_legacy(as_scores(point_map(16, 16, {{6, 5}})), point_map(16, 16, {{5, 5}, {7, 5}}), 16, 16);
  c.check(legacy.tp == 1 && std::abs(legacy.best_f1 - 2.0 / 3.0) < 1e-12, "legacy one-to-one match F1 = 2/3");

  std::string sizes;
  for (int radius = 2; radius <= 15; ++radius) {
    const int n = 2 * radius + 9;
    BinaryMap filled(static_cast<std::size_t>(n) * n, 0);
    const double cx = n / 2 + (radius % 2 ? 0.0 : 0.5);  // odd and even sized disks
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x)
        filled[static_cast<std::size_t>(y) * n + x] = (x - cx) * (x - cx) + (y - n / 2) * (y - n / 2) <= radius * radius;
    const auto skel = thin(filled, n, n);
    const long long left = std::count(skel.begin(), skel.end(), 1);
    sizes += (sizes.empty() ? "" : " ") + std::to_string(left);
    c.check(left >= 1 && left <= 4, "thinned disk of radius " + std::to_string(radius) + " has " + std::to_string(left) +
                                        " pixels");
  }
  c.note("thinned filled disks, radius 2..15: " + sizes + " pixels");
}

// ---------------------------------------------------------------------------
// 7. desk-scale learning

struct Corpus {
  std::vector<TrainingSample<float>> train, test;
};

Corpus learning_corpus(const ModelConfig& cfg) {
  const DihedralGroup group(cfg.group_order);
  const auto table = FoldClassTable::standard(cfg.n_rot);
  auto build = [&](std::uint64_t seed, int count) {
    SyntheticSpec spec;
    spec.seed = seed;
    std::vector<TrainingSample<float>> out;
    for (const auto& s : generate_synthetic(spec, count))
      out.push_back(prepare_sample<float>(s.image, s.annotation, cfg, group, table, 64));
    return out;
  };
  return {build(1, 600), build(2, 100)};
}

constexpr int kLearningEpochs = 8;

void desk_learning(Criterion& c) {
  struct Run {
    double f1;
    double seconds;
  };
  std::map<std::string, std::vector<Run>> runs;
  for (const Heads heads : {Heads::ref, Heads::rot}) {
    for (const bool plain : {false, true}) {
      auto cfg = ModelConfig::desk();
      cfg.heads = heads;
      cfg.plain = plain;
      const auto corpus = learning_corpus(cfg);
      const std::string key = std::string(plain ? "plain" : "D4") + "-" + to_string(heads);
      for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        EquiSymModel<float> model(cfg, seed);
        TrainConfig tc;
        tc.epochs = kLearningEpochs;
        tc.resize_max = 64;
        tc.seed = seed;
        const auto start = Clock::now();
        const auto log = train(model, corpus.train, corpus.test, tc);
        const double t = seconds_since(start);
        const double f1 = heads == Heads::ref ? *log.back().val_f1_ref : *log.back().val_f1_rot;
        runs[key].push_back({f1, t});
        c.note(key + " seed " + std::to_string(seed) + ": held-out dilation F1 " + fmt(f1, "%.4f") + " after " +
               std::to_string(kLearningEpochs) + " epochs, " + fmt(t / 60.0, "%.1f") + " min, " +
               std::to_string(model.parameter_count()) + " parameters");
      }
    }
  }
  auto mean = [&](const std::string& key) {
    double s = 0.0;
    for (const auto& r : runs[key]) s += r.f1;
    return s / runs[key].size();
  };
  for (const auto& [heads, floor] : {std::pair{std::string("ref"), 0.45}, std::pair{std::string("rot"), 0.30}}) {
    const double eq = mean("D4-" + heads), pl = mean("plain-" + heads);
    c.note(heads + ": mean F1 D4 " + fmt(eq, "%.4f") + " vs plain " + fmt(pl, "%.4f"));
    for (const auto& r : runs["D4-" + heads]) {
      c.check(r.f1 >= floor, "D4-" + heads + " F1 " + fmt(r.f1, "%.4f") + " >= " + fmt(floor));
      c.check(r.seconds <= 30 * 60, "D4-" + heads + " training within 30 CPU-minutes");
    }
    c.check(pl < eq, "plain-" + heads + " mean F1 strictly lower than D4");
  }
}

// ---------------------------------------------------------------------------
// 8. auxiliary-task ablation through the command line

std::map<std::string, double> read_kv(const fs::path& path) {
  std::map<std::string, double> kv;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (value.find(',') == std::string::npos) kv[key] = std::stod(value);
  }
  return kv;
}

void aux_ablation(Criterion& c) {
  const auto dir = scratch_dir() / "ablation";
  const std::string train_dir = (dir / "train").string(), test_dir = (dir / "test").string();
  c.check(cli_run({"synth", "--out", train_dir, "--count", "600", "--seed", "1"}) == 0, "synth train corpus");
  c.check(cli_run({"synth", "--out", test_dir, "--count", "100", "--seed", "2"}) == 0, "synth test corpus");
  std::map<std::string, std::map<std::string, double>> reports;
  for (const bool aux : {true, false}) {
    const std::string name = aux ? "with_cls" : "without_cls";
    std::vector<std::string> args{"train", "--data", train_dir, "--val", test_dir, "--out", (dir / name).string(),
                                  "--epochs", std::to_string(kLearningEpochs), "--resize-max", "64", "--seed", "1"};
    if (!aux) args.push_back("--no-aux");
    const auto start = Clock::now();
    const int code = cli_run(args);
    c.check(code == 0, name + " training command");
    if (code != 0) continue;
    reports[name] = read_kv(dir / name / "eval.txt");
    c.note(name + ": ref F1 " + fmt(reports[name]["ref.dilation.best_f1"], "%.4f") + ", rot F1 " +
           fmt(reports[name]["rot.dilation.best_f1"], "%.4f") + " (" + fmt(seconds_since(start) / 60.0, "%.1f") +
           " min)");
  }
  if (reports.size() == 2) {
    for (const std::string head : {"ref", "rot"}) {
      const double with = reports["with_cls"][head + ".dilation.best_f1"];
      const double without = reports["without_cls"][head + ".dilation.best_f1"];
      c.note(head + " direction: auxiliary loss " + (with > without ? "helps" : with < without ? "hurts" : "is neutral") +
             " (" + fmt(without, "%.4f") + " -> " + fmt(with, "%.4f") + ", reported only)");
      c.check(std::isfinite(with) && std::isfinite(without), head + " F1 reported for both runs");
    }
  }
}

// ---------------------------------------------------------------------------
// 9. determinism

void determinism(Criterion& c) {
  const auto dir = scratch_dir() / "determinism";
  const std::string train_dir = (dir / "train").string(), val_dir = (dir / "val").string();
  c.check(cli_run({"synth", "--out", train_dir, "--count", "40", "--seed", "9"}) == 0, "synth");
  c.check(cli_run({"synth", "--out", val_dir, "--count", "12", "--seed", "10"}) == 0, "synth");
  auto train_run = [&](const std::string& name, const std::string& workers) {
    return cli_run({"train", "--data", train_dir, "--val", val_dir, "--out", (dir / name).string(), "--epochs", "2",
                    "--batch", "4", "--resize-max", "64", "--seed", "7", "--workers", workers});
  };
  c.check(train_run("a", "1") == 0 && train_run("b", "1") == 0 && train_run("c", "3") == 0, "training runs");
  for (const char* file : {"checkpoint.eqs", "train_log.tsv", "eval.txt"}) {
    const auto a = slurp(dir / "a" / file);
    c.check(!a.empty() && a == slurp(dir / "b" / file), std::string("identical ") + file + " for identical seeds");
    c.check(a == slurp(dir / "c" / file), std::string("identical ") + file + " with three data workers");
  }
  c.check(cli_run({"predict", "--checkpoint", (dir / "a" / "checkpoint.eqs").string(), "--data", val_dir, "--out",
                   (dir / "pred").string(), "--resize-max", "64"}) == 0,
          "predict");
  c.check(cli_run({"eval", "--data", val_dir, "--pred", (dir / "pred").string(), "--out", (dir / "eval").string()}) == 0,
          "eval");
  c.check(slurp(dir / "eval" / "eval.txt") == slurp(dir / "a" / "eval.txt"),
          "predict then eval reproduces the post-training metrics bit-exactly");
  c.check(cli_run({"train", "--data", train_dir, "--out", (dir / "e0").string(), "--epochs", "0"}) == 0 &&
              cli_run({"equicheck", "--checkpoint", (dir / "e0" / "checkpoint.eqs").string()}) == 0,
          "untrained checkpoint loads");
  auto model = load_checkpoint<float>((dir / "a" / "checkpoint.eqs").string());
  const auto saved = slurp(dir / "a" / "checkpoint.eqs");
  c.check(serialize_container(model_to_container(*model)) == std::vector<std::uint8_t>(saved.begin(), saved.end()),
          "checkpoint load -> save is byte-identical");
  c.note("two single-threaded runs and one with three data workers: checkpoints, logs and metrics compared bytewise");
}

// ---------------------------------------------------------------------------
// 10. statistics

void statistics(Criterion& c) {
  int corpora = 0;
  for (const auto& [seed, count, size] : {std::tuple{3u, 200, 64}, std::tuple{4u, 150, 96}, std::tuple{5u, 80, 128}}) {
    SyntheticSpec spec;
    spec.seed = seed;
    spec.width = spec.height = size;
    SyntheticBookkeeping book;
    const auto samples = generate_synthetic(spec, count, &book);
    std::vector<ImageAnnotation> anns;
    for (const auto& s : samples) anns.push_back(s.annotation);
    const auto stats = compute_stats(anns);
    c.check(matches_bookkeeping(stats, book), "histograms equal the generator counts (seed " + std::to_string(seed) + ")");
    auto sum = [](const auto& ratios) {
      double s = 0.0;
      for (const auto& v : ratios) {
        if constexpr (std::is_arithmetic_v<std::decay_t<decltype(v)>>) s += v;
        else s += v.second;
      }
      return s;
    };
    for (const double s : {sum(DatasetStats::ratios(stats.scale_bins)), sum(DatasetStats::ratios(stats.orientation_bins)),
                           sum(DatasetStats::ratios(stats.folds)), sum(DatasetStats::ratios(stats.centers_per_image))})
      c.check(std::abs(s - 1.0) <= 1e-9, "ratios sum to 1 (got " + fmt(s, "%.17g") + ")");
    ++corpora;
  }

  const auto dir = scratch_dir() / "stats";
  c.check(cli_run({"synth", "--out", (dir / "corpus").string(), "--count", "120", "--seed", "8"}) == 0, "synth");
  std::string printed;
  c.check(cli_run({"stats", "--data", (dir / "corpus").string(), "--out", (dir / "report").string()}, &printed) == 0,
          "stats");
  const auto expected = slurp(dir / "corpus" / "generator_stats.txt");
  c.check(!expected.empty() && slurp(dir / "report" / "stats.txt") == expected && printed == expected,
          "stats command output equals the generator's own tables");
  for (const char* chart : {"scale.svg", "orientation.svg", "folds.svg", "centers.svg"})
    c.check(slurp(dir / "report" / chart).starts_with("<svg"), std::string("chart ") + chart);
  c.note(std::to_string(corpora) + " generated corpora compared with generator bookkeeping; command-line tables compared bytewise");
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

  const std::vector<std::pair<std::string, std::function<void(Criterion&)>>> criteria{
      {"group algebra", group_algebra},
      {"kernel constraint", kernel_constraint},
      {"end-to-end equivariance", end_to_end_equivariance},
      {"gradient correctness", gradients},
      {"loss oracles", loss_oracles},
      {"evaluator exactness", evaluator},
      {"desk-scale learning", desk_learning},
      {"auxiliary-task ablation", aux_ablation},
      {"determinism", determinism},
      {"statistics", statistics},
  };

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int number = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(number)) continue;
    Criterion c(criteria[k].first);
    std::cout << "criterion " << number << ": " << c.title() << '\n' << std::flush;
    const auto start = Clock::now();
    try {
      criteria[k].second(c);
    } catch (const std::exception& e) {
      c.check(false, std::string("exception: ") + e.what());
    }
    std::cout << (c.passed() ? "PASS" : "FAIL") << " " << number << " " << c.title() << " ("
              << fmt(seconds_since(start), "%.1f") << " s)\n"
              << std::flush;
    failed += !c.passed();
  }
  std::error_code ec;
  fs::remove_all(scratch_dir(), ec);
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << '\n';
  return failed ? 1 : 0;
}
