#pragma once

#include <random>
#include <string>
#include <vector>

#include "equisym/checks.hpp"
#include "equisym/labels.hpp"
#include "equisym/losses.hpp"
#include "equisym/model.hpp"

namespace equisym {

struct LayerResidual {
  std::string name;
  std::string kind;
  double residual = 0.0;  // worst over the group
  GroupElement worst{0, 0};
};

/// Two-path residual of every leaf layer on the input it sees in a forward
/// pass of `image`.
template <typename Scalar>
std::vector<LayerResidual> layer_residuals(EquiSymModel<Scalar>& model, const FeatureField<Scalar>& image,
                                           double margin = kInteriorMargin);

struct HeadResidual {
  GroupElement g{0, 0};
  double ref = 0.0;  // zero for an absent head
  double rot = 0.0;
};

/// Two-path residual of Y^ref and Y^rot for each group element.
template <typename Scalar>
std::vector<HeadResidual> model_residuals(EquiSymModel<Scalar>& model, const FeatureField<Scalar>& image,
                                          double margin = kInteriorMargin);

/// Gradients smaller than this compare in absolute terms.
inline constexpr double kModelGradientFloor = 1e-6;

/// Finite-difference check of total_loss against model.backward() for the
/// image and every parameter tensor.
std::vector<GradcheckEntry> gradcheck_model(EquiSymModel<double>& model, const FeatureField<double>& image,
                                            const SampleLabels& labels, const LossConfig& cfg, std::mt19937_64& rng,
                                            double eps = 1e-5, int max_coords = 0);

/// Random dense labels: each pixel is foreground with probability 0.3 and
/// gets a uniform class, background pixels the last class.
SampleLabels random_labels(const ModelConfig& cfg, int height, int width, std::mt19937_64& rng);

/// Norm scales drawn from [0.5, 1.5], shifts and biases from [-0.3, 0.3].
template <typename Scalar>
void randomize_affine(EquiSymModel<Scalar>& model, std::mt19937_64& rng);

struct SuiteEntry {
  std::string layer;
  std::string tensor;
  double max_relative_error = 0.0;
};

/// Finite-difference checks of every layer type on D_N fields and of the
/// end-to-end loss of a tiny model, all in double precision.
std::vector<SuiteEntry> gradcheck_suite(int group_order, std::uint64_t seed);

}  // namespace equisym
