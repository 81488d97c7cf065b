#pragma once

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "equisym/layers.hpp"

namespace equisym {

/// Default interior margin for two-path comparisons: 25% of each side.
inline constexpr double kInteriorMargin = 0.25;

/// max over the interior of |layer(g.x) - g.layer(x)|.
template <typename Scalar>
double two_path_residual(Layer<Scalar>& layer, const FeatureField<Scalar>& input, GroupElement g,
                         double margin = kInteriorMargin);

/// Same check for an arbitrary field-to-field map.
template <typename Scalar>
double two_path_residual(const std::function<FeatureField<Scalar>(const FeatureField<Scalar>&)>& map,
                         const FeatureField<Scalar>& input, GroupElement g, double margin = kInteriorMargin);

template <typename Scalar>
FeatureField<Scalar> random_field(const FieldType& type, int height, int width, std::mt19937_64& rng,
                                  double stddev = 1.0);

struct GradcheckEntry {
  std::string tensor;  // "input" or a parameter name
  double max_relative_error = 0.0;
  int coordinates = 0;
};

/// Relative error between two gradient vectors: max|a-n| / max(max|a|, max|n|, floor).
double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric, double floor = 0.0);

/// All indices below `size`, or a sorted random subset of `max_coords` of them.
std::vector<Eigen::Index> pick_coordinates(Eigen::Index size, int max_coords, std::mt19937_64& rng);

/// Central finite differences of L = sum(R * layer(x)) against backward(). At
/// most `max_coords` coordinates per tensor are probed (all when <= 0).
std::vector<GradcheckEntry> gradcheck_layer(Layer<double>& layer, const FeatureField<double>& input,
                                            std::mt19937_64& rng, double eps = 1e-3, int max_coords = 0);

}  // namespace equisym
