#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "equisym/layers.hpp"

namespace equisym {

enum class Heads { ref, rot, joint };

std::string to_string(Heads heads);
Heads heads_from_string(const std::string& name);

struct ModelConfig {
  int group_order = 8;
  std::vector<int> stage_multiplicities{2, 4, 8, 8};  // regular fields per stage
  int blocks_per_stage = 2;
  std::vector<int> aspp_dilation_rates{1, 6, 12, 18};  // rate 1 is the 1x1 branch
  int aspp_multiplicity = 8;
  int decoder_multiplicity = 4;
  int n_ref = 8;
  int n_rot = 21;
  Heads heads = Heads::joint;
  bool plain = false;  // unconstrained convolutions on trivial fields (baseline)
  int min_input = 64;

  /// N=4, four stages of two blocks, multiplicities (2,4,8,8).
  static ModelConfig desk();
  /// Two stages, one block each, single-field widths, 8x8 inputs.
  static ModelConfig tiny();

  void validate() const;
  bool has_ref() const { return heads != Heads::rot; }
  bool has_rot() const { return heads != Heads::ref; }
  int output_stride() const;

  /// Plain-baseline channel count matching the parameters of m regular fields.
  int plain_channels(int multiplicity) const;

  std::string to_text() const;
  static ModelConfig from_text(const std::string& text);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// A leaf layer together with the input it saw during a traced forward pass.
template <typename Scalar>
struct LayerTrace {
  std::string name;
  Layer<Scalar>* layer;
  FeatureField<Scalar> input;
};

/// Layer composed of other layers. Leaf calls go through run() so that a
/// traced forward records every leaf input.
template <typename Scalar>
class Module : public Layer<Scalar> {
 public:
  using Field = FeatureField<Scalar>;
  virtual void set_trace(std::vector<LayerTrace<Scalar>>* trace, const std::string& prefix) {
    trace_ = trace;
    trace_prefix_ = prefix;
  }

 protected:
  /// Forwards x through a child; leaf children are recorded when tracing.
  Field run(const std::string& name, Layer<Scalar>& layer, const Field& x);

  std::vector<LayerTrace<Scalar>>* trace_ = nullptr;
  std::string trace_prefix_;
};

template <typename Scalar>
class Sequential : public Module<Scalar> {
 public:
  using Field = FeatureField<Scalar>;

  Layer<Scalar>& add(std::string name, std::unique_ptr<Layer<Scalar>> layer);
  template <typename L>
  L& emplace(std::string name, L layer) {
    return static_cast<L&>(add(std::move(name), std::make_unique<L>(std::move(layer))));
  }

  Field forward(const Field& x) override;
  Field backward(const Field& grad_out) override;
  std::string kind() const override { return "sequential"; }
  void collect_parameters(const std::string& prefix, std::vector<NamedParameter<Scalar>>& out) override;
  void collect_buffers(const std::string& prefix, std::vector<NamedBuffer<Scalar>>& out) override;
  void set_training(bool training) override;
  void set_trace(std::vector<LayerTrace<Scalar>>* trace, const std::string& prefix) override;

  std::size_t size() const { return layers_.size(); }
  Layer<Scalar>& at(std::size_t i) { return *layers_[i].second; }

 private:
  std::vector<std::pair<std::string, std::unique_ptr<Layer<Scalar>>>> layers_;
};

/// conv-norm-relu-conv-norm plus identity or 1x1 projection shortcut, then relu.
template <typename Scalar>
class ResidualBlock : public Module<Scalar> {
 public:
  using Field = FeatureField<Scalar>;
  ResidualBlock(const FieldType& in, const FieldType& out, int dilation, bool plain, std::mt19937_64& rng);

  Field forward(const Field& x) override;
  Field backward(const Field& grad_out) override;
  std::string kind() const override { return "residual_block"; }
  void collect_parameters(const std::string& prefix, std::vector<NamedParameter<Scalar>>& out) override;
  void collect_buffers(const std::string& prefix, std::vector<NamedBuffer<Scalar>>& out) override;
  void set_training(bool training) override;

 private:
  std::unique_ptr<SteerableConv<Scalar>> conv1_, conv2_, proj_;
  std::unique_ptr<EquiNorm<Scalar>> norm1_, norm2_;
  ReLU<Scalar> relu1_, relu_out_;
};

/// Parallel 1x1 / dilated 3x3 / image-pooling branches fused by a 1x1 conv.
template <typename Scalar>
class Aspp : public Module<Scalar> {
 public:
  using Field = FeatureField<Scalar>;
  Aspp(const FieldType& in, const FieldType& out, const std::vector<int>& rates, bool plain, std::mt19937_64& rng);

  Field forward(const Field& x) override;
  Field backward(const Field& grad_out) override;
  std::string kind() const override { return "aspp"; }
  void collect_parameters(const std::string& prefix, std::vector<NamedParameter<Scalar>>& out) override;
  void collect_buffers(const std::string& prefix, std::vector<NamedBuffer<Scalar>>& out) override;
  void set_training(bool training) override;
  void set_trace(std::vector<LayerTrace<Scalar>>* trace, const std::string& prefix) override;

 private:
  std::vector<Sequential<Scalar>> branches_;  // last one is the pooling branch
  std::vector<FieldType> branch_types_;
  Sequential<Scalar> fuse_;
};

/// Pixel-wise softmax over all channels summed over the foreground channels
/// (every channel but the last).
template <typename Scalar>
FeatureField<Scalar> foreground_pool(const FeatureField<Scalar>& s);

template <typename Scalar>
FeatureField<Scalar> foreground_pool_backward(const FeatureField<Scalar>& s, const FeatureField<Scalar>& grad_p);

/// Outputs of one task head.
template <typename Scalar>
struct TaskOutput {
  FeatureField<Scalar> s;  // logits, n+1 trivial channels, background last
  FeatureField<Scalar> p;  // foreground probability sum
  FeatureField<Scalar> z;  // fused logit
  FeatureField<Scalar> y;  // sigmoid(z)
};

template <typename Scalar>
struct Predictions {
  std::optional<TaskOutput<Scalar>> ref;
  std::optional<TaskOutput<Scalar>> rot;
};

/// Loss gradients with respect to the fused logit z and the class logits s.
template <typename Scalar>
struct TaskGradients {
  FeatureField<Scalar> z;
  FeatureField<Scalar> s;
};

template <typename Scalar>
struct PredictionGradients {
  std::optional<TaskGradients<Scalar>> ref;
  std::optional<TaskGradients<Scalar>> rot;
};

/// Decoder, foreground pooling and fusion for one task.
template <typename Scalar>
class TaskHead {
 public:
  using Field = FeatureField<Scalar>;
  TaskHead(const ModelConfig& cfg, const FieldType& in, int classes, std::mt19937_64& rng);

  TaskOutput<Scalar> forward(const Field& features, int height, int width);
  Field backward(const TaskGradients<Scalar>& grads);
  void collect_parameters(const std::string& prefix, std::vector<NamedParameter<Scalar>>& out);
  void collect_buffers(const std::string& prefix, std::vector<NamedBuffer<Scalar>>& out);
  void set_training(bool training) { decoder_.set_training(training); }
  void set_trace(std::vector<LayerTrace<Scalar>>* trace, const std::string& prefix);

 private:
  Sequential<Scalar> decoder_;
  BilinearUpsample<Scalar>* upsample_ = nullptr;
  std::unique_ptr<SteerableConv<Scalar>> fusion_;
  std::vector<LayerTrace<Scalar>>* trace_ = nullptr;
  std::string trace_prefix_;
  bool has_forward_ = false;
  std::unique_ptr<Field> s_;
};

/// Shared equivariant encoder (stem, residual stages, ASPP) and per-task heads.
template <typename Scalar>
class EquiSymModel {
 public:
  using Field = FeatureField<Scalar>;

  EquiSymModel(ModelConfig cfg, std::uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  const DihedralGroup& group() const { return group_; }
  FieldType input_type() const { return FieldType::trivial(group_, 3); }

  Field encode(const Field& image);
  Predictions<Scalar> forward(const Field& image);
  /// Backpropagates through the heads present in `grads` and the encoder;
  /// parameter gradients accumulate. Returns the image gradient.
  Field backward(const PredictionGradients<Scalar>& grads);

  std::vector<NamedParameter<Scalar>> parameters();
  std::vector<NamedBuffer<Scalar>> buffers();
  std::size_t parameter_count();
  void zero_grad();
  void set_training(bool training);

  /// Record every leaf layer input during subsequent forward calls (nullptr stops).
  void set_trace(std::vector<LayerTrace<Scalar>>* trace);

 private:
  ModelConfig cfg_;
  DihedralGroup group_;
  Sequential<Scalar> encoder_;
  std::unique_ptr<TaskHead<Scalar>> ref_, rot_;
  std::vector<LayerTrace<Scalar>>* trace_ = nullptr;
  int in_h_ = 0, in_w_ = 0;
};

}  // namespace equisym
