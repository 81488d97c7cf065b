#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "equisym/data.hpp"
#include "equisym/io.hpp"
#include "equisym/losses.hpp"
#include "equisym/model.hpp"

namespace equisym {

struct TrainConfig {
  double learning_rate = 1e-3;
  int batch_size = 8;
  int epochs = 100;
  int resize_max = 417;  // longer image side during training
  std::uint64_t seed = 1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  LossConfig loss;

  void validate() const;
};

/// Adaptive-moment optimizer over a fixed parameter list.
template <typename Scalar>
class Adam {
 public:
  Adam(std::vector<NamedParameter<Scalar>> params, double lr, double beta1 = 0.9, double beta2 = 0.999,
       double epsilon = 1e-8);
  void step();
  long long steps() const { return t_; }

 private:
  std::vector<NamedParameter<Scalar>> params_;
  std::vector<RowMatrix<Scalar>> m_, v_;
  double lr_, beta1_, beta2_, epsilon_;
  long long t_ = 0;
};

template <typename Scalar>
struct TrainingSample {
  std::string id;
  FeatureField<Scalar> image;
  SampleLabels labels;
};

/// Annotation coordinates mapped onto a resized image (pixel centers preserved).
ImageAnnotation scale_annotation(const ImageAnnotation& ann, int width, int height);

/// Resizes so the longer side is `resize_max`, standardizes the image and
/// rasterizes labels at the resized resolution.
template <typename Scalar>
TrainingSample<Scalar> prepare_sample(const Image& image, const ImageAnnotation& ann, const ModelConfig& cfg,
                                      const DihedralGroup& group, const FoldClassTable& table, int resize_max);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  std::optional<double> val_f1_ref;
  std::optional<double> val_f1_rot;
};

/// Minibatch training; per-sample gradients are averaged over each batch.
/// Shuffling is seeded from cfg.seed. A non-finite loss throws NumericError.
template <typename Scalar>
std::vector<EpochLog> train(EquiSymModel<Scalar>& model, const std::vector<TrainingSample<Scalar>>& train_set,
                            const std::vector<TrainingSample<Scalar>>& val_set, const TrainConfig& cfg,
                            const std::function<void(const EpochLog&)>& on_epoch = {});

/// Y maps of the active heads at the field's resolution.
template <typename Scalar>
ScoreMaps predict_field(EquiSymModel<Scalar>& model, const FeatureField<Scalar>& image);

/// Resizes to `resize_max`, runs the model and resizes the scores back.
template <typename Scalar>
ScoreMaps predict_image(EquiSymModel<Scalar>& model, const Image& image, int resize_max);

struct ValidationF1 {
  std::optional<double> ref;
  std::optional<double> rot;
};

/// Corpus-level best dilation F1 of each active head.
template <typename Scalar>
ValidationF1 validation_f1(EquiSymModel<Scalar>& model, const std::vector<TrainingSample<Scalar>>& samples);

}  // namespace equisym
