#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "equisym/labels.hpp"
#include "equisym/model.hpp"

namespace equisym {

inline constexpr double kProbabilityClamp = 1e-6;

/// Mean over pixels of -[a (1-p)^g y log p + (1-a) p^g (1-y) log(1-p)] with p
/// clamped to [1e-6, 1-1e-6].
double focal_loss(const Eigen::ArrayXd& p, const Eigen::ArrayXd& y_gt, double alpha, double gamma);

/// Focal loss of sigmoid(z); writes d loss / d z into `grad` when given.
template <typename Scalar>
double focal_loss_logits(const FeatureField<Scalar>& z, const std::vector<std::uint8_t>& y_gt, double alpha,
                         double gamma, FeatureField<Scalar>* grad);

/// Cross-entropy of the softmax of `logits` (channels x pixels). Pixels whose
/// class is the last (background) index are weighted by w; the sum is divided
/// by the total weight. Writes d loss / d logits into `grad` when given.
template <typename Scalar>
double weighted_ce(const FeatureField<Scalar>& logits, const std::vector<std::int32_t>& classes, double w,
                   FeatureField<Scalar>* grad);

struct LossConfig {
  double focal_alpha = 0.95;
  double focal_gamma = 2.0;
  double w_ref = 0.01;
  double w_rot = 0.001;
  bool aux = true;  // include the classification term
};

struct LossBreakdown {
  double loc_ref = 0.0;
  double cls_ref = 0.0;
  double loc_rot = 0.0;
  double cls_rot = 0.0;
  double total = 0.0;
};

/// Sum of localization and (optionally) classification losses over the heads
/// present in `preds`. Fills `grads` for those heads when given.
template <typename Scalar>
LossBreakdown total_loss(const Predictions<Scalar>& preds, const SampleLabels& labels, const LossConfig& cfg,
                         PredictionGradients<Scalar>* grads);

}  // namespace equisym
