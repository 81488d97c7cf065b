#include "equisym/losses.hpp"

#include <algorithm>
#include <cmath>

#include "equisym/errors.hpp"

namespace equisym {

namespace {

double clamp_probability(double p) { return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp); }

double focal_term(double p, bool positive, double alpha, double gamma) {
  if (positive) return -alpha * std::pow(1.0 - p, gamma) * std::log(p);
  return -(1.0 - alpha) * std::pow(p, gamma) * std::log(1.0 - p);
}

}  // namespace

double focal_loss(const Eigen::ArrayXd& p, const Eigen::ArrayXd& y_gt, double alpha, double gamma) {
  if (p.size() != y_gt.size()) throw UsageError("focal_loss: shape mismatch");
  if (p.size() == 0) return 0.0;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) sum += focal_term(clamp_probability(p[i]), y_gt[i] > 0.5, alpha, gamma);
  return sum / static_cast<double>(p.size());
}

template <typename Scalar>
double focal_loss_logits(const FeatureField<Scalar>& z, const std::vector<std::uint8_t>& y_gt, double alpha,
                         double gamma, FeatureField<Scalar>* grad) {
  const int n = z.pixels();
  if (z.channels() != 1 || static_cast<int>(y_gt.size()) != n) throw UsageError("focal_loss: shape mismatch");
  if (grad) *grad = FeatureField<Scalar>(z.type, z.height, z.width);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double p = clamp_probability(1.0 / (1.0 + std::exp(-static_cast<double>(z.data(0, i)))));
    const bool positive = y_gt[i] != 0;
    sum += focal_term(p, positive, alpha, gamma);
    if (grad) {
      const double d = positive ? alpha * std::pow(1.0 - p, gamma) * (gamma * p * std::log(p) - (1.0 - p))
                                : (1.0 - alpha) * std::pow(p, gamma) * (p - gamma * (1.0 - p) * std::log(1.0 - p));
      grad->data(0, i) = static_cast<Scalar>(d / n);
    }
  }
  return n ? sum / n : 0.0;
}

template <typename Scalar>
double weighted_ce(const FeatureField<Scalar>& logits, const std::vector<std::int32_t>& classes, double w,
                   FeatureField<Scalar>* grad) {
  const int c = logits.channels();
  const int n = logits.pixels();
  if (static_cast<int>(classes.size()) != n) throw UsageError("weighted_ce: shape mismatch");
  if (grad) *grad = FeatureField<Scalar>(logits.type, logits.height, logits.width);
  std::vector<double> q(static_cast<std::size_t>(c));
  double weighted = 0.0, total_weight = 0.0;
  for (int i = 0; i < n; ++i) {
    const int cls = classes[i];
    if (cls < 0 || cls >= c)
      throw DataError("weighted_ce: class " + std::to_string(cls) + " out of range [0," + std::to_string(c) + ")");
    double mx = logits.data(0, i);
    for (int k = 1; k < c; ++k) mx = std::max(mx, static_cast<double>(logits.data(k, i)));
    double sum = 0.0;
    for (int k = 0; k < c; ++k) sum += q[k] = std::exp(static_cast<double>(logits.data(k, i)) - mx);
    const double weight = cls == c - 1 ? w : 1.0;
    weighted += weight * (std::log(sum) + mx - static_cast<double>(logits.data(cls, i)));
    total_weight += weight;
    if (grad)
      for (int k = 0; k < c; ++k) grad->data(k, i) = static_cast<Scalar>(weight * (q[k] / sum - (k == cls ? 1.0 : 0.0)));
  }
  if (total_weight == 0.0) return 0.0;
  if (grad) grad->data /= static_cast<Scalar>(total_weight);
  return weighted / total_weight;
}

template <typename Scalar>
LossBreakdown total_loss(const Predictions<Scalar>& preds, const SampleLabels& labels, const LossConfig& cfg,
                         PredictionGradients<Scalar>* grads) {
  LossBreakdown out;
  if (grads) *grads = {};
  auto task = [&](const std::optional<TaskOutput<Scalar>>& pred, const std::vector<std::uint8_t>& y,
                  const std::vector<std::int32_t>& s, double w, double& loc, double& cls,
                  std::optional<TaskGradients<Scalar>>* g, const char* name) {
    if (!pred) return;
    if (y.empty() || s.empty()) throw DataError(std::string("missing ") + name + " labels for an active head");
    TaskGradients<Scalar> tg{pred->z, pred->s};
    loc = focal_loss_logits(pred->z, y, cfg.focal_alpha, cfg.focal_gamma, grads ? &tg.z : nullptr);
    if (cfg.aux) {
      cls = weighted_ce(pred->s, s, w, grads ? &tg.s : nullptr);
    } else {
      tg.s.data.setZero();
    }
    if (g) *g = std::move(tg);
  };
  task(preds.ref, labels.y_ref, labels.s_ref, cfg.w_ref, out.loc_ref, out.cls_ref, grads ? &grads->ref : nullptr,
       "ref");
  task(preds.rot, labels.y_rot, labels.s_rot, cfg.w_rot, out.loc_rot, out.cls_rot, grads ? &grads->rot : nullptr,
       "rot");
  out.total = out.loc_ref + out.cls_ref + out.loc_rot + out.cls_rot;
  return out;
}

#define EQUISYM_INSTANTIATE_LOSSES(T)                                                                       \
  template double focal_loss_logits(const FeatureField<T>&, const std::vector<std::uint8_t>&, double, double, \
                                    FeatureField<T>*);                                                      \
  template double weighted_ce(const FeatureField<T>&, const std::vector<std::int32_t>&, double,              \
                              FeatureField<T>*);                                                            \
  template LossBreakdown total_loss(const Predictions<T>&, const SampleLabels&, const LossConfig&,            \
                                    PredictionGradients<T>*);

EQUISYM_INSTANTIATE_LOSSES(float)
EQUISYM_INSTANTIATE_LOSSES(double)

}  // namespace equisym
