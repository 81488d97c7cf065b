#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <thread>

#include "equisym/data.hpp"
#include "equisym/errors.hpp"
#include "equisym/eval.hpp"
#include "equisym/image.hpp"
#include "equisym/io.hpp"
#include "equisym/model_checks.hpp"
#include "equisym/train.hpp"

namespace fs = std::filesystem;

namespace equisym::cli {

namespace {

constexpr double kHeadTolerance = 1e-3;
constexpr double kLayerTolerance = 1e-4;
constexpr double kGradTolerance = 1e-3;

struct Options {
  std::string command;
  std::uint64_t seed = 1;
  std::string preset = "desk";
  int group_order = 4;
  std::string heads = "joint";
  bool plain = false;
  bool no_aux = false;
  int epochs = 100;
  double lr = 1e-3;
  int batch = 8;
  int resize_max = 417;
  std::string out;
  std::string data;
  std::string val;
  std::string checkpoint;
  std::string pred;
  bool gt_as_pred = false;
  int count = 600;
  int width = 64;
  int height = 64;
  int size = 64;
  int workers = 1;
};

// ---------------------------------------------------------------------------
// plumbing

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, r.ptr);
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.3e", v);
  return buf;
}

std::string fixed(double v, int digits = 4) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(digits) << v;
  return s.str();
}

/// Runs fn(i) for i < n on up to `workers` threads. The exception of the
/// lowest failing index is rethrown.
void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::clamp(workers, 1, std::max(1, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::mutex mutex;
  int failed_index = n;
  std::exception_ptr failure;
  {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w)
      pool.emplace_back([&] {
        for (int i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(mutex);
            if (i < failed_index) failed_index = i, failure = std::current_exception();
          }
        }
      });
  }
  if (failure) std::rethrow_exception(failure);
}

void require(const std::string& value, const std::string& flag, const std::string& command) {
  if (value.empty()) throw UsageError(command + " needs " + flag);
}

void require_existing(const std::string& path, const std::string& flag) {
  if (!fs::exists(path)) throw UsageError(flag + " " + path + " does not exist");
}

fs::path output_dir(const Options& o) {
  require(o.out, "--out", o.command);
  fs::create_directories(o.out);
  return o.out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f || !(f << text)) throw DataError("cannot write " + path.string());
}

ModelConfig model_config(const Options& o) {
  ModelConfig cfg;
  if (o.preset == "desk") {
    cfg = ModelConfig::desk();
  } else if (o.preset == "tiny") {
    cfg = ModelConfig::tiny();
  } else {
    throw UsageError("unknown preset '" + o.preset + "' (expected desk or tiny)");
  }
  cfg.group_order = o.group_order;
  if (o.group_order == 8) cfg.n_ref = 8;
  cfg.heads = heads_from_string(o.heads);
  cfg.plain = o.plain;
  cfg.validate();
  return cfg;
}

TrainConfig train_config(const Options& o) {
  TrainConfig tc;
  tc.learning_rate = o.lr;
  tc.batch_size = o.batch;
  tc.epochs = o.epochs;
  tc.resize_max = o.resize_max;
  tc.seed = o.seed;
  tc.loss.aux = !o.no_aux;
  tc.validate();
  return tc;
}

// ---------------------------------------------------------------------------
// datasets: <dir>/annotations.txt and <dir>/images/<id>.ppm|.pgm

struct Dataset {
  std::vector<ImageAnnotation> annotations;
  std::vector<Image> images;
};

fs::path image_path(const fs::path& dir, const std::string& id) {
  for (const char* ext : {".ppm", ".pgm"}) {
    const auto p = dir / "images" / (id + ext);
    if (fs::exists(p)) return p;
  }
  throw DataError("no image for '" + id + "' under " + (dir / "images").string());
}

std::vector<ImageAnnotation> load_annotations(const std::string& dir) {
  require_existing(dir, "--data");
  const auto path = fs::path(dir) / "annotations.txt";
  if (!fs::exists(path)) throw DataError("missing " + path.string());
  auto anns = parse_annotations(path.string());
  for (const auto& a : anns) validate_annotation(a);
  return anns;
}

Dataset load_dataset(const std::string& dir, int workers) {
  Dataset d;
  d.annotations = load_annotations(dir);
  d.images.resize(d.annotations.size());
  parallel_for(static_cast<int>(d.annotations.size()), workers, [&](int i) {
    const auto& a = d.annotations[i];
    d.images[i] = read_pnm(image_path(dir, a.image_id).string());
    if (d.images[i].width != a.width || d.images[i].height != a.height)
      throw DataError(a.image_id + ": image is " + std::to_string(d.images[i].width) + "x" +
                      std::to_string(d.images[i].height) + " but annotated as " + std::to_string(a.width) + "x" +
                      std::to_string(a.height));
  });
  return d;
}

std::vector<TrainingSample<float>> prepare(const Dataset& d, const ModelConfig& cfg, const DihedralGroup& group,
                                           int resize_max, int workers) {
  const auto table = FoldClassTable::standard(cfg.n_rot);
  std::vector<std::optional<TrainingSample<float>>> slots(d.annotations.size());
  parallel_for(static_cast<int>(slots.size()), workers, [&](int i) {
    slots[i] = prepare_sample<float>(d.images[i], d.annotations[i], cfg, group, table, resize_max);
  });
  std::vector<TrainingSample<float>> out;
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

// ---------------------------------------------------------------------------
// evaluation at the annotated resolution

struct CorpusReport {
  std::optional<EvalReport> ref_dilation, ref_legacy, rot_dilation, rot_legacy;
};

/// Accumulates both schemes for the heads present in the first score map.
CorpusReport evaluate(const std::vector<ImageAnnotation>& anns, int n_ref, int n_rot, int workers,
                      const std::function<ScoreMaps(int)>& scores_of) {
  const auto table = FoldClassTable::standard(n_rot);
  const int n = static_cast<int>(anns.size());
  std::vector<SampleLabels> labels(anns.size());
  parallel_for(n, workers, [&](int i) { labels[i] = make_labels(anns[i], n_ref, table); });

  DilationF1 ref_d, rot_d;
  LegacyF1 ref_l, rot_l;
  bool has_ref = false, has_rot = false;
  for (int i = 0; i < n; ++i) {
    const ScoreMaps s = scores_of(i);
    const auto& l = labels[i];
    if (s.height != l.height || s.width != l.width)
      throw DataError(anns[i].image_id + ": score map size does not match the annotation");
    if (i == 0) has_ref = !s.ref.empty(), has_rot = !s.rot.empty();
    if (has_ref != !s.ref.empty() || has_rot != !s.rot.empty())
      throw DataError(anns[i].image_id + ": score maps cover different heads than the first image");
    if (has_ref) {
      ref_d.add(s.ref, l.y_ref, l.height, l.width);
      ref_l.add(s.ref, l.y_ref, l.height, l.width);
    }
    if (has_rot) {
      rot_d.add(s.rot, l.y_rot, l.height, l.width);
      rot_l.add(s.rot, l.y_rot, l.height, l.width);
    }
  }
  CorpusReport r;
  if (has_ref) r.ref_dilation = ref_d.report(), r.ref_legacy = ref_l.report();
  if (has_rot) r.rot_dilation = rot_d.report(), r.rot_legacy = rot_l.report();
  return r;
}

void emit_report(const CorpusReport& r, const std::optional<fs::path>& dir, std::ostream& out) {
  std::string kv;
  out << "head  scheme    best_f1  threshold  precision  recall\n";
  auto row = [&](const char* head, const char* scheme, const std::optional<EvalReport>& e) {
    if (!e) return;
    const auto it = std::find(e->thresholds.begin(), e->thresholds.end(), e->best_threshold);
    const auto k = static_cast<std::size_t>(it - e->thresholds.begin());
    out << std::left << std::setw(6) << head << std::setw(10) << scheme << std::setw(9) << fixed(e->best_f1)
        << std::setw(11) << fixed(e->best_threshold, 3) << std::setw(11) << fixed(e->precision[k]) << fixed(e->recall[k])
        << '\n';
    kv += format_report_kv(std::string(head) + '.' + scheme, *e);
  };
  row("ref", "dilation", r.ref_dilation);
  row("ref", "legacy", r.ref_legacy);
  row("rot", "dilation", r.rot_dilation);
  row("rot", "legacy", r.rot_legacy);
  if (dir) write_text(*dir / "eval.txt", kv);
}

std::string score_name(const std::string& id) { return id + ".scores"; }

// ---------------------------------------------------------------------------
// commands

int cmd_synth(const Options& o, std::ostream& out) {
  const auto dir = output_dir(o);
  SyntheticSpec spec;
  spec.seed = o.seed;
  spec.width = o.width;
  spec.height = o.height;
  if (o.count < 0) throw UsageError("--count must be non-negative");
  SyntheticBookkeeping book;
  const auto samples = generate_synthetic(spec, o.count, &book);
  fs::create_directories(dir / "images");
  parallel_for(static_cast<int>(samples.size()), o.workers, [&](int i) {
    write_pnm((dir / "images" / (samples[i].annotation.image_id + ".ppm")).string(), samples[i].image);
  });
  std::vector<ImageAnnotation> anns;
  for (const auto& s : samples) anns.push_back(s.annotation);
  write_annotations((dir / "annotations.txt").string(), anns);

  DatasetStats expected;
  expected.images = book.images;
  expected.axes = book.axes;
  expected.circles = book.circles;
  expected.scale_bins = book.scale_bins;
  expected.orientation_bins = book.orientation_bins;
  expected.folds = book.folds;
  expected.centers_per_image = book.centers_per_image;
  write_text(dir / "generator_stats.txt", format_stats(expected));
  std::string shapes;
  for (const auto& [kind, n] : book.shapes) shapes += kind + ' ' + std::to_string(n) + '\n';
  write_text(dir / "generator_shapes.txt", shapes);
  out << "wrote " << samples.size() << " images to " << dir.string() << '\n';
  return kOk;
}

int cmd_stats(const Options& o, std::ostream& out) {
  require(o.data, "--data", o.command);
  const auto stats = compute_stats(load_annotations(o.data));
  const std::string table = format_stats(stats);
  out << table;
  if (o.out.empty()) return kOk;
  const auto dir = output_dir(o);
  write_text(dir / "stats.txt", table);

  auto chart = [&](const std::string& file, const std::string& title, const std::vector<std::string>& labels,
                   const std::vector<double>& values) { write_text(dir / file, svg_bar_chart(title, labels, values)); };
  std::vector<std::string> labels;
  for (int b = 0; b < kScaleBins; ++b) labels.push_back(fixed(b / 10.0, 1) + "-" + fixed((b + 1) / 10.0, 1));
  chart("scale.svg", "axis length / image diagonal", labels, DatasetStats::ratios(stats.scale_bins));
  labels.clear();
  const int bins = static_cast<int>(stats.orientation_bins.size());
  for (int b = 0; b < bins; ++b) labels.push_back(fixed(180.0 * b / bins, 1));
  chart("orientation.svg", "axis orientation (degrees)", labels, DatasetStats::ratios(stats.orientation_bins));
  auto map_chart = [&](const std::string& file, const std::string& title, const std::map<int, int>& counts) {
    std::vector<std::string> keys;
    std::vector<double> values;
    for (const auto& [k, v] : DatasetStats::ratios(counts)) keys.push_back(std::to_string(k)), values.push_back(v);
    chart(file, title, keys, values);
  };
  map_chart("folds.svg", "rotation fold (0 = continuous)", stats.folds);
  map_chart("centers.svg", "rotation centers per image", stats.centers_per_image);
  return kOk;
}

int cmd_train(const Options& o, std::ostream& out) {
  require(o.data, "--data", o.command);
  const auto cfg = model_config(o);
  const auto tc = train_config(o);
  const auto dir = output_dir(o);
  EquiSymModel<float> model(cfg, o.seed);
  const auto train_data = load_dataset(o.data, o.workers);
  const auto train_set = prepare(train_data, cfg, model.group(), tc.resize_max, o.workers);
  std::optional<Dataset> val_data;
  std::vector<TrainingSample<float>> val_set;
  if (!o.val.empty()) {
    val_data = load_dataset(o.val, o.workers);
    val_set = prepare(*val_data, cfg, model.group(), tc.resize_max, o.workers);
  }

  const auto checkpoint = dir / "checkpoint.eqs";
  std::ofstream log(dir / "train_log.tsv", std::ios::binary);
  if (!log) throw DataError("cannot write " + (dir / "train_log.tsv").string());
  log << "epoch\ttrain_loss\tval_f1_ref\tval_f1_rot\n";
  auto opt = [](const std::optional<double>& v) { return v ? num(*v) : std::string("-"); };
  out << "model " << (cfg.plain ? "plain" : "D" + std::to_string(cfg.group_order)) << ", "
      << model.parameter_count() << " parameters, " << train_set.size() << " training images\n";
  save_checkpoint(checkpoint.string(), model);
  train(model, train_set, val_set, tc, [&](const EpochLog& e) {
    log << e.epoch << '\t' << num(e.train_loss) << '\t' << opt(e.val_f1_ref) << '\t' << opt(e.val_f1_rot) << '\n';
    log.flush();
    out << "epoch " << e.epoch << " loss " << fixed(e.train_loss, 5);
    if (e.val_f1_ref) out << " val_f1_ref " << fixed(*e.val_f1_ref);
    if (e.val_f1_rot) out << " val_f1_rot " << fixed(*e.val_f1_rot);
    out << '\n';
    save_checkpoint(checkpoint.string(), model);
  });
  if (!log) throw DataError("failed writing the training log");

  if (val_data) {
    const auto& anns = val_data->annotations;
    const auto report = evaluate(anns, cfg.n_ref, cfg.n_rot, o.workers,
                                 [&](int i) { return predict_image(model, val_data->images[i], tc.resize_max); });
    emit_report(report, dir, out);
  }
  return kOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
  require(o.checkpoint, "--checkpoint", o.command);
  require(o.data, "--data", o.command);
  require_existing(o.checkpoint, "--checkpoint");
  require_existing(o.data, "--data");
  auto model = load_checkpoint<float>(o.checkpoint);
  const auto dir = output_dir(o);
  std::vector<fs::path> files;
  const fs::path images = fs::path(o.data) / "images";
  if (!fs::is_directory(images)) throw DataError("missing " + images.string());
  for (const auto& e : fs::directory_iterator(images))
    if (e.path().extension() == ".ppm" || e.path().extension() == ".pgm") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    const Image image = read_pnm(f.string());
    const auto scores = predict_image(*model, image, o.resize_max);
    const std::string id = f.stem().string();
    write_container((dir / score_name(id)).string(), scores_to_container(scores));
    auto render = [&](const std::vector<float>& s, const std::string& head) {
      if (s.empty()) return;
      write_pnm((dir / (id + "_" + head + ".pgm")).string(), scores_to_gray(s, image.width, image.height));
      write_pnm((dir / (id + "_" + head + "_overlay.ppm")).string(), overlay_scores(image, s));
    };
    render(scores.ref, "ref");
    render(scores.rot, "rot");
  }
  out << "predicted " << files.size() << " images into " << dir.string() << '\n';
  return kOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  require(o.data, "--data", o.command);
  const int sources = !o.checkpoint.empty() + !o.pred.empty() + o.gt_as_pred;
  if (sources != 1) throw UsageError("eval needs exactly one of --checkpoint, --pred or --gt-as-pred");
  std::optional<fs::path> dir;
  if (!o.out.empty()) dir = output_dir(o);

  ModelConfig cfg = model_config(o);
  CorpusReport report;
  if (!o.checkpoint.empty()) {
    require_existing(o.checkpoint, "--checkpoint");
    auto model = load_checkpoint<float>(o.checkpoint);
    cfg = model->config();
    const auto data = load_dataset(o.data, o.workers);
    report = evaluate(data.annotations, cfg.n_ref, cfg.n_rot, o.workers,
                      [&](int i) { return predict_image(*model, data.images[i], o.resize_max); });
  } else if (!o.pred.empty()) {
    require_existing(o.pred, "--pred");
    const auto anns = load_annotations(o.data);
    report = evaluate(anns, cfg.n_ref, cfg.n_rot, o.workers, [&](int i) {
      const auto path = fs::path(o.pred) / score_name(anns[i].image_id);
      if (!fs::exists(path)) throw DataError("missing prediction " + path.string());
      return scores_from_container(read_container(path.string()));
    });
  } else {
    const auto anns = load_annotations(o.data);
    const auto table = FoldClassTable::standard(cfg.n_rot);
    report = evaluate(anns, cfg.n_ref, cfg.n_rot, o.workers, [&](int i) {
      const auto l = make_labels(anns[i], cfg.n_ref, table);
      ScoreMaps s{l.height, l.width, {}, {}};
      if (cfg.has_ref()) s.ref.assign(l.y_ref.begin(), l.y_ref.end());
      if (cfg.has_rot()) s.rot.assign(l.y_rot.begin(), l.y_rot.end());
      return s;
    });
  }
  emit_report(report, dir, out);
  return kOk;
}

int cmd_equicheck(const Options& o, std::ostream& out, std::ostream& err) {
  std::unique_ptr<EquiSymModel<double>> model;
  std::mt19937_64 rng(o.seed);
  if (!o.checkpoint.empty()) {
    require_existing(o.checkpoint, "--checkpoint");
    model = load_checkpoint<double>(o.checkpoint);
  } else {
    model = std::make_unique<EquiSymModel<double>>(model_config(o), o.seed);
    randomize_affine(*model, rng);
  }
  if (o.size < model->config().min_input) throw UsageError("--size is below the model's minimum input");
  const auto image = random_field<double>(model->input_type(), o.size, o.size, rng);

  bool ok = true;
  out << "layer residuals (max over the group, interior)\n";
  for (const auto& r : layer_residuals(*model, image)) {
    const bool pass = r.residual <= kLayerTolerance;
    ok = ok && pass;
    out << std::left << std::setw(48) << r.name << std::setw(18) << r.kind << std::setw(12) << sci(r.residual)
        << std::setw(10) << to_string(r.worst) << (pass ? "ok" : "FAIL") << '\n';
  }
  out << "end-to-end residuals\n" << std::left << std::setw(10) << "g" << std::setw(14) << "Y_ref" << "Y_rot\n";
  for (const auto& r : model_residuals(*model, image)) {
    ok = ok && r.ref <= kHeadTolerance && r.rot <= kHeadTolerance;
    out << std::left << std::setw(10) << to_string(r.g) << std::setw(14) << sci(r.ref) << sci(r.rot) << '\n';
  }
  if (!ok) {
    err << "equivariance check failed (layers <= " << kLayerTolerance << ", heads <= " << kHeadTolerance << ")\n";
    return kNumeric;
  }
  out << "all residuals within tolerance\n";
  return kOk;
}

int cmd_gradcheck(const Options& o, std::ostream& out, std::ostream& err) {
  bool ok = true;
  out << std::left << std::setw(28) << "layer" << std::setw(52) << "tensor" << "relative_error\n";
  for (const auto& e : gradcheck_suite(o.group_order, o.seed)) {
    const bool pass = e.max_relative_error <= kGradTolerance;
    ok = ok && pass;
    out << std::left << std::setw(28) << e.layer << std::setw(52) << e.tensor << std::setw(14)
        << sci(e.max_relative_error) << (pass ? "ok" : "FAIL") << '\n';
  }
  if (!ok) {
    err << "gradient check failed (relative error <= " << kGradTolerance << ")\n";
    return kNumeric;
  }
  out << "all gradients within tolerance\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Equivariant symmetry detection: training, prediction, evaluation and dataset tools", "equisym"};
  app.option_defaults()->always_capture_default();
  app.set_config("--config", "", "key=value configuration file; command-line flags override it");
  app.require_subcommand(1, 1);

  app.add_option("--seed", o.seed, "Seed for weights, shuffling and generated data");
  app.add_option("--preset", o.preset, "Model preset")->check(CLI::IsMember({"desk", "tiny"}));
  app.add_option("--group-order", o.group_order, "Dihedral group order N")->check(CLI::IsMember({2, 4, 8}));
  app.add_option("--heads", o.heads, "Active heads")->check(CLI::IsMember({"ref", "rot", "joint"}));
  app.add_flag("--plain", o.plain, "Plain convolutions with matched parameter count instead of D_N fields");
  app.add_flag("--no-aux", o.no_aux, "Drop the auxiliary classification loss");
  app.add_option("--epochs", o.epochs, "Training epochs");
  app.add_option("--lr", o.lr, "Adam learning rate");
  app.add_option("--batch", o.batch, "Images per optimizer step");
  app.add_option("--resize-max", o.resize_max, "Longer image side fed to the model");
  app.add_option("--out", o.out, "Output directory (created if absent)");
  app.add_option("--data", o.data, "Dataset directory with annotations.txt and images/");
  app.add_option("--val", o.val, "Validation dataset directory (train)");
  app.add_option("--checkpoint", o.checkpoint, "Model checkpoint file");
  app.add_option("--pred", o.pred, "Directory of .scores files written by predict (eval)");
  app.add_flag("--gt-as-pred", o.gt_as_pred, "Evaluate the ground truth against itself (eval)");
  app.add_option("--count", o.count, "Number of generated images (synth)");
  app.add_option("--width", o.width, "Generated image width (synth)");
  app.add_option("--height", o.height, "Generated image height (synth)");
  app.add_option("--size", o.size, "Random input side length (equicheck)");
  app.add_option("--workers", o.workers, "Threads for per-image data work")->check(CLI::PositiveNumber);
  app.fallthrough();

  const std::vector<std::pair<std::string, std::string>> commands{
      {"train", "Train a model; writes checkpoint.eqs, train_log.tsv and, with --val, eval.txt"},
      {"eval", "Dilation and legacy F1 of predictions against annotations"},
      {"predict", "Score maps, gray renders and overlays for every image under <data>/images"},
      {"synth", "Generate a synthetic dataset"},
      {"stats", "Dataset histograms as text tables and SVG charts"},
      {"equicheck", "Per-layer and end-to-end equivariance residuals"},
      {"gradcheck", "Finite-difference gradient errors of every layer type and the model loss"},
  };
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << "\nrun with --help for usage\n";
    return kUsage;
  }
  o.command = app.get_subcommands().front()->get_name();

  try {
    if (o.command == "synth") return cmd_synth(o, out);
    if (o.command == "stats") return cmd_stats(o, out);
    if (o.command == "train") return cmd_train(o, out);
    if (o.command == "predict") return cmd_predict(o, out);
    if (o.command == "eval") return cmd_eval(o, out);
    if (o.command == "equicheck") return cmd_equicheck(o, out, err);
    if (o.command == "gradcheck") return cmd_gradcheck(o, out, err);
    throw UsageError("unknown command " + o.command);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const fs::filesystem_error& e) {
    err << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kData;
  }
}

}  // namespace equisym::cli
