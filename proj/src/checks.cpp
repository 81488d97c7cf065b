#include "equisym/checks.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "equisym/errors.hpp"

namespace equisym {

template <typename Scalar>
double two_path_residual(const std::function<FeatureField<Scalar>(const FeatureField<Scalar>&)>& map,
                         const FeatureField<Scalar>& input, GroupElement g, double margin) {
  const auto transformed_first = map(transform_field(input, g));
  const auto transformed_after = transform_field(map(input), g);
  return interior_max_abs_diff(transformed_first, transformed_after, margin);
}

template <typename Scalar>
double two_path_residual(Layer<Scalar>& layer, const FeatureField<Scalar>& input, GroupElement g, double margin) {
  return two_path_residual<Scalar>([&](const FeatureField<Scalar>& x) { return layer.forward(x); }, input, g, margin);
}

template <typename Scalar>
FeatureField<Scalar> random_field(const FieldType& type, int height, int width, std::mt19937_64& rng, double stddev) {
  FeatureField<Scalar> f(type, height, width);
  std::normal_distribution<double> normal(0.0, stddev);
  for (Eigen::Index i = 0; i < f.data.size(); ++i) f.data.data()[i] = static_cast<Scalar>(normal(rng));
  return f;
}

double relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric, double floor) {
  if (analytic.size() != numeric.size()) throw UsageError("relative_error: size mismatch");
  double diff = 0.0, scale = floor;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - numeric[i]));
    scale = std::max({scale, std::abs(analytic[i]), std::abs(numeric[i])});
  }
  if (scale == 0.0) return 0.0;
  return diff / scale;
}

std::vector<Eigen::Index> pick_coordinates(Eigen::Index size, int max_coords, std::mt19937_64& rng) {
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(size));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  if (max_coords > 0 && size > max_coords) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(static_cast<std::size_t>(max_coords));
    std::sort(idx.begin(), idx.end());
  }
  return idx;
}

std::vector<GradcheckEntry> gradcheck_layer(Layer<double>& layer, const FeatureField<double>& input,
                                            std::mt19937_64& rng, double eps, int max_coords) {
  auto probe = layer.forward(input);
  const auto upstream = random_field<double>(probe.type, probe.height, probe.width, rng);
  auto loss = [&](const FeatureField<double>& x) { return (layer.forward(x).data.array() * upstream.data.array()).sum(); };

  layer.zero_grad();
  layer.forward(input);
  const auto grad_input = layer.backward(upstream);
  auto params = layer.parameters();
  std::vector<RowMatrix<double>> param_grads;
  for (auto& p : params) param_grads.push_back(p.param->grad);

  std::vector<GradcheckEntry> out;
  {
    FeatureField<double> x = input;
    std::vector<double> analytic, numeric;
    for (auto i : pick_coordinates(x.data.size(), max_coords, rng)) {
      const double orig = x.data.data()[i];
      x.data.data()[i] = orig + eps;
      const double plus = loss(x);
      x.data.data()[i] = orig - eps;
      const double minus = loss(x);
      x.data.data()[i] = orig;
      analytic.push_back(grad_input.data.data()[i]);
      numeric.push_back((plus - minus) / (2 * eps));
    }
    out.push_back({"input", relative_error(analytic, numeric), static_cast<int>(analytic.size())});
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto& value = params[k].param->value;
    std::vector<double> analytic, numeric;
    for (auto i : pick_coordinates(value.size(), max_coords, rng)) {
      const double orig = value.data()[i];
      value.data()[i] = orig + eps;
      const double plus = loss(input);
      value.data()[i] = orig - eps;
      const double minus = loss(input);
      value.data()[i] = orig;
      analytic.push_back(param_grads[k].data()[i]);
      numeric.push_back((plus - minus) / (2 * eps));
    }
    out.push_back({params[k].name, relative_error(analytic, numeric), static_cast<int>(analytic.size())});
  }
  return out;
}

#define EQUISYM_INSTANTIATE_CHECKS(T)                                                                        \
  template double two_path_residual(Layer<T>&, const FeatureField<T>&, GroupElement, double);               \
  template double two_path_residual(const std::function<FeatureField<T>(const FeatureField<T>&)>&,           \
                                    const FeatureField<T>&, GroupElement, double);                           \
  template FeatureField<T> random_field(const FieldType&, int, int, std::mt19937_64&, double);

EQUISYM_INSTANTIATE_CHECKS(float)
EQUISYM_INSTANTIATE_CHECKS(double)

}  // namespace equisym
