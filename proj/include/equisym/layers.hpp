#pragma once

#include <Eigen/Dense>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "equisym/field.hpp"
#include "equisym/kernel.hpp"

namespace equisym {

template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Learnable tensor with its accumulated gradient.
template <typename Scalar>
struct Parameter {
  RowMatrix<Scalar> value;
  RowMatrix<Scalar> grad;

  void resize(Eigen::Index rows, Eigen::Index cols) {
    value = RowMatrix<Scalar>::Zero(rows, cols);
    grad = RowMatrix<Scalar>::Zero(rows, cols);
  }
  void zero_grad() { grad.setZero(); }
};

template <typename Scalar>
struct NamedParameter {
  std::string name;
  Parameter<Scalar>* param;
};

/// Non-learnable state that is still checkpointed (normalization running stats).
template <typename Scalar>
struct NamedBuffer {
  std::string name;
  RowMatrix<Scalar>* value;
};

/// A layer owns its parameters and caches what backward() needs from the most
/// recent forward() call. Parameter gradients accumulate until zero_grad().
template <typename Scalar>
class Layer {
 public:
  using Field = FeatureField<Scalar>;

  virtual ~Layer() = default;
  virtual Field forward(const Field& x) = 0;
  virtual Field backward(const Field& grad_out) = 0;
  virtual std::string kind() const = 0;

  virtual void collect_parameters(const std::string& /*prefix*/, std::vector<NamedParameter<Scalar>>& /*out*/) {}
  virtual void collect_buffers(const std::string& /*prefix*/, std::vector<NamedBuffer<Scalar>>& /*out*/) {}
  virtual void set_training(bool /*training*/) {}

  std::vector<NamedParameter<Scalar>> parameters() {
    std::vector<NamedParameter<Scalar>> out;
    collect_parameters("", out);
    return out;
  }
  void zero_grad() {
    for (auto& p : parameters()) p.param->zero_grad();
  }
};

/// Convolution whose weights are expanded from steerable base weights.
template <typename Scalar>
class SteerableConv : public Layer<Scalar> {
 public:
  using Field = FeatureField<Scalar>;

  SteerableConv(SteerableKernelSpec spec, int stride = 1, int dilation = 1, bool bias = true);

  Field forward(const Field& x) override;
  Field backward(const Field& grad_out) override;
  std::string kind() const override;
  void collect_parameters(const std::string& prefix, std::vector<NamedParameter<Scalar>>& out) override;

  /// He-style fan-in initialization of the base weights; biases are zeroed.
  void init_he(std::mt19937_64& rng);

  const SteerableKernelSpec& spec() const { return expansion_.spec; }
  const RowMatrix<Scalar>& expanded_weights();
  Parameter<Scalar>& weight() { return weight_; }
  Parameter<Scalar>& bias() { return bias_; }
  bool has_bias() const { return has_bias_; }
  int stride() const { return stride_; }
  int dilation() const { return dilation_; }

 private:
  void refresh_weights();

  KernelExpansion<Scalar> expansion_;
  int stride_;
  int dilation_;
  bool has_bias_;
  Parameter<Scalar> weight_;  // base weights, (count x 1)
  Parameter<Scalar> bias_;    // one per output field
  std::vector<int> bias_field_of_channel_;
  RowMatrix<Scalar> expanded_;
  RowMatrix<Scalar> expanded_source_;  // base weights the expansion was built from
  // cache
  bool has_input_ = false;
  int in_h_ = 0, in_w_ = 0, out_h_ = 0, out_w_ = 0;
  RowMatrix<Scalar> columns_;
  std::unique_ptr<Field> input_;
};

template <typename Scalar>
class ReLU : public Layer<Scalar> {
 public:
  using Field = FeatureField<Scalar>;
  Field forward(const Field& x) override;
  Field backward(const Field& grad_out) override;
  std::string kind() const override { return "relu"; }

 private:
  std::unique_ptr<Field> input_;
};

/// Normalization with one mean/variance pair per field, shared across the 2N
/// group channels of a regular field and across space, plus a per-field affine.
/// Statistics come from the current sample; running statistics are tracked
/// with momentum 0.1 and used instead only when `use_running_stats` is set.
template <typename Scalar>
class EquiNorm : public Layer<Scalar> {
 public:
  using Field = FeatureField<Scalar>;
  explicit EquiNorm(FieldType type, double eps = 1e-5, double momentum = 0.1);

  Field forward(const Field& x) override;
  Field backward(const Field& grad_out) override;
  std::string kind() const override { return "equi_norm"; }
  void collect_parameters(const std::string& prefix, std::vector<NamedParameter<Scalar>>& out) override;
  void collect_buffers(const std::string& prefix, std::vector<NamedBuffer<Scalar>>& out) override;
  void set_training(bool training) override { training_ = training; }
  void set_use_running_stats(bool use) { use_running_ = use; }

  Parameter<Scalar>& scale() { return gamma_; }
  Parameter<Scalar>& shift() { return beta_; }

 private:
  FieldType type_;
  double eps_;
  double momentum_;
  bool training_ = true;
  bool use_running_ = false;
  Parameter<Scalar> gamma_;
  Parameter<Scalar> beta_;
  RowMatrix<Scalar> running_mean_;
  RowMatrix<Scalar> running_var_;
  std::vector<int> field_start_;
  std::vector<int> field_size_;
  // cache
  bool has_input_ = false;
  RowMatrix<Scalar> normalized_;
  std::vector<double> inv_std_;
  bool used_batch_stats_ = true;
};

/// 2x2 max pooling with stride 2 (spatial only); odd sizes keep a partial last window.
template <typename Scalar>
class MaxPool2 : public Layer<Scalar> {
 public:
  using Field = FeatureField<Scalar>;
  Field forward(const Field& x) override;
  Field backward(const Field& grad_out) override;
  std::string kind() const override { return "spatial_maxpool"; }

 private:
  bool has_input_ = false;
  int in_h_ = 0, in_w_ = 0;
  std::vector<int> argmax_;
};

/// Bilinear resize with half-pixel centers and edge clamping. The output size is
/// input*factor unless an explicit target is set.
template <typename Scalar>
class BilinearUpsample : public Layer<Scalar> {
 public:
  using Field = FeatureField<Scalar>;
  explicit BilinearUpsample(int factor = 2) : factor_(factor) {}

  void set_target(int height, int width) {
    target_h_ = height;
    target_w_ = width;
  }
  Field forward(const Field& x) override;
  Field backward(const Field& grad_out) override;
  std::string kind() const override { return "bilinear_upsample"; }

 private:
  int factor_;
  int target_h_ = 0, target_w_ = 0;
  bool has_input_ = false;
  int in_h_ = 0, in_w_ = 0;
  Resampler map_;
};

/// Spatial mean per channel; output is a 1x1 field.
template <typename Scalar>
class GlobalAvgPool : public Layer<Scalar> {
 public:
  using Field = FeatureField<Scalar>;
  Field forward(const Field& x) override;
  Field backward(const Field& grad_out) override;
  std::string kind() const override { return "global_avg_pool"; }

 private:
  bool has_input_ = false;
  int in_h_ = 0, in_w_ = 0;
};

/// Copies a 1x1 field to every pixel of a target grid.
template <typename Scalar>
class Broadcast : public Layer<Scalar> {
 public:
  using Field = FeatureField<Scalar>;
  void set_target(int height, int width) {
    height_ = height;
    width_ = width;
  }
  Field forward(const Field& x) override;
  Field backward(const Field& grad_out) override;
  std::string kind() const override { return "broadcast"; }

 private:
  int height_ = 1, width_ = 1;
  bool has_input_ = false;
};

/// Max over the 2N group channels of each regular field; trivial fields pass through.
template <typename Scalar>
class GroupPool : public Layer<Scalar> {
 public:
  using Field = FeatureField<Scalar>;
  Field forward(const Field& x) override;
  Field backward(const Field& grad_out) override;
  std::string kind() const override { return "group_pool"; }

  static FieldType output_type(const FieldType& in);

 private:
  bool has_input_ = false;
  std::unique_ptr<FieldType> in_type_;
  std::vector<int> argmax_;  // source channel per (output channel, pixel)
};

template <typename Scalar>
FeatureField<Scalar> concat_channels(const std::vector<const FeatureField<Scalar>*>& parts);

/// Inverse of concat_channels for gradients.
template <typename Scalar>
std::vector<FeatureField<Scalar>> split_channels(const FeatureField<Scalar>& whole,
                                                 const std::vector<FieldType>& types);

}  // namespace equisym
