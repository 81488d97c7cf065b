#include "equisym/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "equisym/errors.hpp"
#include "equisym/eval.hpp"
#include "equisym/image.hpp"

namespace equisym {

void TrainConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw UsageError("learning rate must be non-negative");
  if (batch_size < 1) throw UsageError("batch size must be positive");
  if (epochs < 0) throw UsageError("epochs must be non-negative");
  if (resize_max < 1) throw UsageError("resize-max must be positive");
}

template <typename Scalar>
Adam<Scalar>::Adam(std::vector<NamedParameter<Scalar>> params, double lr, double beta1, double beta2, double epsilon)
    : params_(std::move(params)), lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
  for (const auto& p : params_) {
    m_.push_back(RowMatrix<Scalar>::Zero(p.param->value.rows(), p.param->value.cols()));
    v_.push_back(RowMatrix<Scalar>::Zero(p.param->value.rows(), p.param->value.cols()));
  }
}

template <typename Scalar>
void Adam<Scalar>::step() {
  ++t_;
  const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    auto& p = *params_[i].param;
    auto& m = m_[i];
    auto& v = v_[i];
    for (Eigen::Index k = 0; k < p.value.size(); ++k) {
      const double g = p.grad.data()[k];
      const double mk = beta1_ * m.data()[k] + (1.0 - beta1_) * g;
      const double vk = beta2_ * v.data()[k] + (1.0 - beta2_) * g * g;
      m.data()[k] = static_cast<Scalar>(mk);
      v.data()[k] = static_cast<Scalar>(vk);
      const double update = lr_ * (mk / c1) / (std::sqrt(vk / c2) + epsilon_);
      p.value.data()[k] = static_cast<Scalar>(p.value.data()[k] - update);
    }
  }
}

ImageAnnotation scale_annotation(const ImageAnnotation& ann, int width, int height) {
  if (width == ann.width && height == ann.height) return ann;
  const double sx = static_cast<double>(width) / ann.width;
  const double sy = static_cast<double>(height) / ann.height;
  auto map = [&](Point& p) {
    p.x() = std::clamp((p.x() + 0.5) * sx - 0.5, 0.0, width - 1.0);
    p.y() = std::clamp((p.y() + 0.5) * sy - 0.5, 0.0, height - 1.0);
  };
  auto map_four = [&](FourShape& f) {
    for (Point* p : {&f.center, &f.up, &f.down, &f.left, &f.right}) map(*p);
  };
  ImageAnnotation out = ann;
  out.width = width;
  out.height = height;
  for (auto& a : out.ref.axes) {
    map(a.a);
    map(a.b);
  }
  for (auto& c : out.ref.circles) map_four(c);
  for (auto& o : out.rot.objects) {
    map_four(o.four);
    for (auto& p : o.polygon) map(p);
  }
  return out;
}

template <typename Scalar>
TrainingSample<Scalar> prepare_sample(const Image& image, const ImageAnnotation& ann, const ModelConfig& cfg,
                                      const DihedralGroup& group, const FoldClassTable& table, int resize_max) {
  if (image.width != ann.width || image.height != ann.height)
    throw DataError("image " + ann.image_id + ": size differs from its annotation");
  const auto [w, h] = fit_size(image.width, image.height, resize_max);
  const Image resized = resize_image(image, w, h);
  TrainingSample<Scalar> s{ann.image_id, image_to_field<Scalar>(resized, group),
                           make_labels(scale_annotation(ann, w, h), cfg.n_ref, table)};
  if (!cfg.has_ref()) s.labels.y_ref.clear(), s.labels.s_ref.clear();
  if (!cfg.has_rot()) s.labels.y_rot.clear(), s.labels.s_rot.clear();
  return s;
}

namespace {

template <typename Scalar>
void scale_gradients(PredictionGradients<Scalar>& g, Scalar factor) {
  for (auto* t : {&g.ref, &g.rot})
    if (*t) {
      (*t)->z.data *= factor;
      (*t)->s.data *= factor;
    }
}

std::vector<float> to_float(const FeatureField<float>& y) { return {y.data.data(), y.data.data() + y.data.size()}; }
std::vector<float> to_float(const FeatureField<double>& y) {
  std::vector<float> out(static_cast<std::size_t>(y.data.size()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(y.data.data()[i]);
  return out;
}

}  // namespace

template <typename Scalar>
std::vector<EpochLog> train(EquiSymModel<Scalar>& model, const std::vector<TrainingSample<Scalar>>& train_set,
                            const std::vector<TrainingSample<Scalar>>& val_set, const TrainConfig& cfg,
                            const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  std::vector<EpochLog> log;
  if (cfg.epochs == 0) return log;
  if (train_set.empty()) throw UsageError("empty training set");
  Adam<Scalar> adam(model.parameters(), cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon);
  std::mt19937_64 rng(cfg.seed ^ 0x5348554646ULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    model.set_training(true);
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      const auto factor = static_cast<Scalar>(1.0 / static_cast<double>(end - start));
      model.zero_grad();
      for (std::size_t i = start; i < end; ++i) {
        const auto& sample = train_set[order[i]];
        const auto preds = model.forward(sample.image);
        PredictionGradients<Scalar> grads;
        const auto loss = total_loss(preds, sample.labels, cfg.loss, &grads);
        if (!std::isfinite(loss.total))
          throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + " on sample " + sample.id);
        loss_sum += loss.total;
        scale_gradients(grads, factor);
        model.backward(grads);
      }
      adam.step();
    }
    EpochLog entry{epoch, loss_sum / static_cast<double>(train_set.size()), std::nullopt, std::nullopt};
    if (!val_set.empty()) {
      model.set_training(false);
      const auto f1 = validation_f1(model, val_set);
      entry.val_f1_ref = f1.ref;
      entry.val_f1_rot = f1.rot;
    }
    log.push_back(entry);
    if (on_epoch) on_epoch(entry);
  }
  model.set_training(false);
  return log;
}

template <typename Scalar>
ScoreMaps predict_field(EquiSymModel<Scalar>& model, const FeatureField<Scalar>& image) {
  const auto preds = model.forward(image);
  ScoreMaps s{image.height, image.width, {}, {}};
  if (preds.ref) s.ref = to_float(preds.ref->y);
  if (preds.rot) s.rot = to_float(preds.rot->y);
  return s;
}

template <typename Scalar>
ScoreMaps predict_image(EquiSymModel<Scalar>& model, const Image& image, int resize_max) {
  const auto [w, h] = fit_size(image.width, image.height, resize_max);
  auto s = predict_field(model, image_to_field<Scalar>(resize_image(image, w, h), model.group()));
  if (w != image.width || h != image.height) {
    if (!s.ref.empty()) s.ref = resize_scores(s.ref, w, h, image.width, image.height);
    if (!s.rot.empty()) s.rot = resize_scores(s.rot, w, h, image.width, image.height);
  }
  s.width = image.width;
  s.height = image.height;
  return s;
}

template <typename Scalar>
ValidationF1 validation_f1(EquiSymModel<Scalar>& model, const std::vector<TrainingSample<Scalar>>& samples) {
  DilationF1 ref, rot;
  for (const auto& sample : samples) {
    const auto s = predict_field(model, sample.image);
    if (!s.ref.empty()) ref.add(s.ref, sample.labels.y_ref, s.height, s.width);
    if (!s.rot.empty()) rot.add(s.rot, sample.labels.y_rot, s.height, s.width);
  }
  ValidationF1 out;
  if (model.config().has_ref()) out.ref = ref.report().best_f1;
  if (model.config().has_rot()) out.rot = rot.report().best_f1;
  return out;
}

#define EQUISYM_INSTANTIATE_TRAIN(T)                                                                              \
  template class Adam<T>;                                                                                         \
  template TrainingSample<T> prepare_sample(const Image&, const ImageAnnotation&, const ModelConfig&,             \
                                            const DihedralGroup&, const FoldClassTable&, int);                    \
  template std::vector<EpochLog> train(EquiSymModel<T>&, const std::vector<TrainingSample<T>>&,                   \
                                       const std::vector<TrainingSample<T>>&, const TrainConfig&,                 \
                                       const std::function<void(const EpochLog&)>&);                              \
  template ScoreMaps predict_field(EquiSymModel<T>&, const FeatureField<T>&);                                     \
  template ScoreMaps predict_image(EquiSymModel<T>&, const Image&, int);                                          \
  template ValidationF1 validation_f1(EquiSymModel<T>&, const std::vector<TrainingSample<T>>&);

EQUISYM_INSTANTIATE_TRAIN(float)
EQUISYM_INSTANTIATE_TRAIN(double)

}  // namespace equisym
