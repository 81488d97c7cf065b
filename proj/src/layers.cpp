#include "equisym/layers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "equisym/errors.hpp"

namespace equisym {

namespace {

void require_forward(bool has_input, const std::string& kind) {
  if (!has_input) throw UsageError(kind + ": backward called before forward");
}

}  // namespace

// ---------------------------------------------------------------------------
// SteerableConv

template <typename Scalar>
SteerableConv<Scalar>::SteerableConv(SteerableKernelSpec spec, int stride, int dilation, bool bias)
    : expansion_(make_expansion<Scalar>(spec)), stride_(stride), dilation_(dilation), has_bias_(bias) {
  if (stride < 1 || dilation < 1) throw UsageError("conv stride and dilation must be positive");
  weight_.resize(expansion_.spec.base_parameter_count(), 1);
  const auto& out_type = expansion_.spec.out_type;
  for (const auto& entry : out_type.entries())
    for (int m = 0; m < entry.multiplicity; ++m) {
      const int field = static_cast<int>(bias_field_of_channel_.empty() ? 0 : bias_field_of_channel_.back() + 1);
      for (int c = 0; c < out_type.field_size(entry.repr); ++c) bias_field_of_channel_.push_back(field);
    }
  bias_.resize(has_bias_ ? out_type.fields() : 0, 1);
}

template <typename Scalar>
std::string SteerableConv<Scalar>::kind() const {
  const auto& s = expansion_.spec;
  std::string name = to_string(s.rule) + "_conv" + std::to_string(s.kernel_size) + "x" + std::to_string(s.kernel_size);
  if (stride_ > 1) name += "_s" + std::to_string(stride_);
  if (dilation_ > 1) name += "_d" + std::to_string(dilation_);
  return name;
}

template <typename Scalar>
void SteerableConv<Scalar>::collect_parameters(const std::string& prefix, std::vector<NamedParameter<Scalar>>& out) {
  out.push_back({prefix + "weight", &weight_});
  if (has_bias_) out.push_back({prefix + "bias", &bias_});
}

template <typename Scalar>
void SteerableConv<Scalar>::init_he(std::mt19937_64& rng) {
  const auto& s = expansion_.spec;
  const double fan_in = static_cast<double>(s.in_type.channels()) * s.kernel_size * s.kernel_size;
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / fan_in));
  for (Eigen::Index i = 0; i < weight_.value.size(); ++i) weight_.value.data()[i] = static_cast<Scalar>(normal(rng));
  bias_.value.setZero();
}

template <typename Scalar>
void SteerableConv<Scalar>::refresh_weights() {
  if (expanded_source_.size() == weight_.value.size() && expanded_source_ == weight_.value) return;
  expanded_ = expansion_.expand(Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>>(weight_.value.data(),
                                                                                            weight_.value.size()));
  expanded_source_ = weight_.value;
}

template <typename Scalar>
const RowMatrix<Scalar>& SteerableConv<Scalar>::expanded_weights() {
  refresh_weights();
  return expanded_;
}

template <typename Scalar>
FeatureField<Scalar> SteerableConv<Scalar>::forward(const Field& x) {
  const auto& s = expansion_.spec;
  if (!(x.type == s.in_type))
    throw UsageError(kind() + ": input type " + x.type.describe() + " does not match " + s.in_type.describe());
  refresh_weights();
  const int k = s.kernel_size;
  const int pad = dilation_ * (k - 1) / 2;
  in_h_ = x.height;
  in_w_ = x.width;
  out_h_ = (in_h_ + 2 * pad - dilation_ * (k - 1) - 1) / stride_ + 1;
  out_w_ = (in_w_ + 2 * pad - dilation_ * (k - 1) - 1) / stride_ + 1;
  if (out_h_ < 1 || out_w_ < 1) throw UsageError(kind() + ": input too small");
  const int c_in = x.channels();

  Field out(s.out_type, out_h_, out_w_);
  if (k == 1 && stride_ == 1) {
    input_ = std::make_unique<Field>(x);
    out.data.noalias() = expanded_ * x.data;
  } else {
    input_.reset();
    columns_.resize(static_cast<Eigen::Index>(c_in) * k * k, static_cast<Eigen::Index>(out_h_) * out_w_);
    for (int c = 0; c < c_in; ++c) {
      const Scalar* src = x.data.row(c).data();
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          Scalar* dst = columns_.row((c * k + ky) * k + kx).data();
          for (int oy = 0; oy < out_h_; ++oy) {
            const int iy = oy * stride_ - pad + ky * dilation_;
            Scalar* row = dst + oy * out_w_;
            if (iy < 0 || iy >= in_h_) {
              std::fill(row, row + out_w_, Scalar(0));
              continue;
            }
            for (int ox = 0; ox < out_w_; ++ox) {
              const int ix = ox * stride_ - pad + kx * dilation_;
              row[ox] = (ix < 0 || ix >= in_w_) ? Scalar(0) : src[iy * in_w_ + ix];
            }
          }
        }
      }
    }
    out.data.noalias() = expanded_ * columns_;
  }
  if (has_bias_)
    for (int c = 0; c < out.channels(); ++c) out.data.row(c).array() += bias_.value(bias_field_of_channel_[c], 0);
  has_input_ = true;
  return out;
}

template <typename Scalar>
FeatureField<Scalar> SteerableConv<Scalar>::backward(const Field& grad_out) {
  require_forward(has_input_, kind());
  const auto& s = expansion_.spec;
  if (grad_out.channels() != s.out_type.channels() || grad_out.height != out_h_ || grad_out.width != out_w_)
    throw UsageError(kind() + ": upstream gradient shape mismatch");
  const int k = s.kernel_size;
  const int pad = dilation_ * (k - 1) / 2;
  const int c_in = s.in_type.channels();

  RowMatrix<Scalar> expanded_grad;
  Field grad_in(s.in_type, in_h_, in_w_);
  if (input_) {
    expanded_grad.noalias() = grad_out.data * input_->data.transpose();
    grad_in.data.noalias() = expanded_.transpose() * grad_out.data;
  } else {
    expanded_grad.noalias() = grad_out.data * columns_.transpose();
    RowMatrix<Scalar> grad_cols = expanded_.transpose() * grad_out.data;
    for (int c = 0; c < c_in; ++c) {
      Scalar* dst = grad_in.data.row(c).data();
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const Scalar* src = grad_cols.row((c * k + ky) * k + kx).data();
          for (int oy = 0; oy < out_h_; ++oy) {
            const int iy = oy * stride_ - pad + ky * dilation_;
            if (iy < 0 || iy >= in_h_) continue;
            for (int ox = 0; ox < out_w_; ++ox) {
              const int ix = ox * stride_ - pad + kx * dilation_;
              if (ix < 0 || ix >= in_w_) continue;
              dst[iy * in_w_ + ix] += src[oy * out_w_ + ox];
            }
          }
        }
      }
    }
  }
  const auto base_grad = expansion_.pull_back(expanded_grad);
  weight_.grad += Eigen::Map<const RowMatrix<Scalar>>(base_grad.data(), weight_.grad.rows(), weight_.grad.cols());
  if (has_bias_)
    for (int c = 0; c < grad_out.channels(); ++c) bias_.grad(bias_field_of_channel_[c], 0) += grad_out.data.row(c).sum();
  return grad_in;
}

// ---------------------------------------------------------------------------
// ReLU

template <typename Scalar>
FeatureField<Scalar> ReLU<Scalar>::forward(const Field& x) {
  input_ = std::make_unique<Field>(x);
  Field out = x;
  out.data = x.data.cwiseMax(Scalar(0));
  return out;
}

template <typename Scalar>
FeatureField<Scalar> ReLU<Scalar>::backward(const Field& grad_out) {
  require_forward(input_ != nullptr, kind());
  Field grad = grad_out;
  grad.data = (input_->data.array() > Scalar(0)).select(grad_out.data, Scalar(0));
  return grad;
}

// ---------------------------------------------------------------------------
// EquiNorm

template <typename Scalar>
EquiNorm<Scalar>::EquiNorm(FieldType type, double eps, double momentum)
    : type_(std::move(type)), eps_(eps), momentum_(momentum) {
  int start = 0;
  for (const auto& entry : type_.entries())
    for (int m = 0; m < entry.multiplicity; ++m) {
      field_start_.push_back(start);
      field_size_.push_back(type_.field_size(entry.repr));
      start += type_.field_size(entry.repr);
    }
  const int n = static_cast<int>(field_start_.size());
  gamma_.resize(n, 1);
  gamma_.value.setOnes();
  beta_.resize(n, 1);
  running_mean_ = RowMatrix<Scalar>::Zero(n, 1);
  running_var_ = RowMatrix<Scalar>::Ones(n, 1);
}

template <typename Scalar>
void EquiNorm<Scalar>::collect_parameters(const std::string& prefix, std::vector<NamedParameter<Scalar>>& out) {
  out.push_back({prefix + "scale", &gamma_});
  out.push_back({prefix + "shift", &beta_});
}

template <typename Scalar>
void EquiNorm<Scalar>::collect_buffers(const std::string& prefix, std::vector<NamedBuffer<Scalar>>& out) {
  out.push_back({prefix + "running_mean", &running_mean_});
  out.push_back({prefix + "running_var", &running_var_});
}

template <typename Scalar>
FeatureField<Scalar> EquiNorm<Scalar>::forward(const Field& x) {
  if (!(x.type == type_)) throw UsageError("equi_norm: field type mismatch");
  const int n_fields = static_cast<int>(field_start_.size());
  normalized_.resize(x.data.rows(), x.data.cols());
  inv_std_.assign(n_fields, 0.0);
  used_batch_stats_ = training_ || !use_running_;
  Field out(x.type, x.height, x.width);
  for (int f = 0; f < n_fields; ++f) {
    const auto block = x.data.middleRows(field_start_[f], field_size_[f]);
    const double count = static_cast<double>(block.size());
    double mean = 0.0;
    double var = 0.0;
    if (used_batch_stats_) {
      mean = block.template cast<double>().sum() / count;
      var = (block.template cast<double>().array() - mean).square().sum() / count;
      if (training_) {
        const double unbiased = count > 1 ? var * count / (count - 1) : var;
        running_mean_(f, 0) = static_cast<Scalar>((1 - momentum_) * running_mean_(f, 0) + momentum_ * mean);
        running_var_(f, 0) = static_cast<Scalar>((1 - momentum_) * running_var_(f, 0) + momentum_ * unbiased);
      }
    } else {
      mean = running_mean_(f, 0);
      var = running_var_(f, 0);
    }
    const double inv_std = 1.0 / std::sqrt(var + eps_);
    inv_std_[f] = inv_std;
    auto norm_block = normalized_.middleRows(field_start_[f], field_size_[f]);
    norm_block = ((block.template cast<double>().array() - mean) * inv_std).template cast<Scalar>().matrix();
    out.data.middleRows(field_start_[f], field_size_[f]) =
        ((norm_block.array() * gamma_.value(f, 0)) + beta_.value(f, 0)).matrix();
  }
  has_input_ = true;
  return out;
}

template <typename Scalar>
FeatureField<Scalar> EquiNorm<Scalar>::backward(const Field& grad_out) {
  require_forward(has_input_, kind());
  Field grad(grad_out.type, grad_out.height, grad_out.width);
  for (int f = 0; f < static_cast<int>(field_start_.size()); ++f) {
    const auto dy = grad_out.data.middleRows(field_start_[f], field_size_[f]).template cast<double>().array();
    const auto xhat = normalized_.middleRows(field_start_[f], field_size_[f]).template cast<double>().array();
    const double gamma = gamma_.value(f, 0);
    gamma_.grad(f, 0) += static_cast<Scalar>((dy * xhat).sum());
    beta_.grad(f, 0) += static_cast<Scalar>(dy.sum());
    auto dst = grad.data.middleRows(field_start_[f], field_size_[f]);
    if (!used_batch_stats_) {
      dst = (dy * (gamma * inv_std_[f])).template cast<Scalar>().matrix();
      continue;
    }
    const double count = static_cast<double>(dy.size());
    const double sum_dxhat = gamma * dy.sum();
    const double sum_dxhat_xhat = gamma * (dy * xhat).sum();
    dst = ((inv_std_[f] / count) * (count * gamma * dy - sum_dxhat - xhat * sum_dxhat_xhat))
              .template cast<Scalar>()
              .matrix();
  }
  return grad;
}

// ---------------------------------------------------------------------------
// MaxPool2

template <typename Scalar>
FeatureField<Scalar> MaxPool2<Scalar>::forward(const Field& x) {
  const int oh = (x.height + 1) / 2;
  const int ow = (x.width + 1) / 2;
  if (x.height < 2 || x.width < 2) throw UsageError("spatial_maxpool: input smaller than 2x2");
  in_h_ = x.height;
  in_w_ = x.width;
  Field out(x.type, oh, ow);
  argmax_.assign(static_cast<std::size_t>(x.channels()) * oh * ow, 0);
  for (int c = 0; c < x.channels(); ++c) {
    const Scalar* src = x.data.row(c).data();
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        int best = (2 * oy) * in_w_ + 2 * ox;
        for (int dy = 0; dy < 2 && 2 * oy + dy < in_h_; ++dy)
          for (int dx = 0; dx < 2 && 2 * ox + dx < in_w_; ++dx) {
            const int idx = (2 * oy + dy) * in_w_ + 2 * ox + dx;
            if (src[idx] > src[best]) best = idx;
          }
        out.data(c, oy * ow + ox) = src[best];
        argmax_[(static_cast<std::size_t>(c) * oh + oy) * ow + ox] = best;
      }
  }
  has_input_ = true;
  return out;
}

template <typename Scalar>
FeatureField<Scalar> MaxPool2<Scalar>::backward(const Field& grad_out) {
  require_forward(has_input_, kind());
  Field grad(grad_out.type, in_h_, in_w_);
  const int n = grad_out.pixels();
  for (int c = 0; c < grad_out.channels(); ++c)
    for (int p = 0; p < n; ++p) grad.data(c, argmax_[static_cast<std::size_t>(c) * n + p]) += grad_out.data(c, p);
  return grad;
}

// ---------------------------------------------------------------------------
// BilinearUpsample

namespace {

Resampler make_resize(int in_h, int in_w, int out_h, int out_w) {
  Resampler map;
  map.out_height = out_h;
  map.out_width = out_w;
  map.index.assign(static_cast<std::size_t>(out_h) * out_w * 4, -1);
  map.weight.assign(static_cast<std::size_t>(out_h) * out_w * 4, 0.0);
  auto axis = [](int out_i, int in_n, int out_n, int& i0, int& i1, double& frac) {
    double src = (out_i + 0.5) * static_cast<double>(in_n) / out_n - 0.5;
    src = std::clamp(src, 0.0, static_cast<double>(in_n - 1));
    i0 = static_cast<int>(std::floor(src));
    i1 = std::min(i0 + 1, in_n - 1);
    frac = src - i0;
  };
  for (int y = 0; y < out_h; ++y) {
    int y0, y1;
    double fy;
    axis(y, in_h, out_h, y0, y1, fy);
    for (int x = 0; x < out_w; ++x) {
      int x0, x1;
      double fx;
      axis(x, in_w, out_w, x0, x1, fx);
      const std::size_t base = (static_cast<std::size_t>(y) * out_w + x) * 4;
      const int idx[4] = {y0 * in_w + x0, y0 * in_w + x1, y1 * in_w + x0, y1 * in_w + x1};
      const double w[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
      for (int k = 0; k < 4; ++k) {
        if (w[k] == 0.0) continue;
        map.index[base + k] = idx[k];
        map.weight[base + k] = w[k];
      }
    }
  }
  return map;
}

}  // namespace

template <typename Scalar>
FeatureField<Scalar> BilinearUpsample<Scalar>::forward(const Field& x) {
  const int oh = target_h_ > 0 ? target_h_ : x.height * factor_;
  const int ow = target_w_ > 0 ? target_w_ : x.width * factor_;
  if (!has_input_ || in_h_ != x.height || in_w_ != x.width || map_.out_height != oh || map_.out_width != ow)
    map_ = make_resize(x.height, x.width, oh, ow);
  in_h_ = x.height;
  in_w_ = x.width;
  has_input_ = true;
  return apply_resampler(x, map_);
}

template <typename Scalar>
FeatureField<Scalar> BilinearUpsample<Scalar>::backward(const Field& grad_out) {
  require_forward(has_input_, kind());
  Field grad(grad_out.type, in_h_, in_w_);
  const int n = grad_out.pixels();
  for (int c = 0; c < grad_out.channels(); ++c) {
    const Scalar* src = grad_out.data.row(c).data();
    Scalar* dst = grad.data.row(c).data();
    for (int p = 0; p < n; ++p)
      for (int k = 0; k < 4; ++k) {
        const auto idx = map_.index[4 * p + k];
        if (idx >= 0) dst[idx] += static_cast<Scalar>(map_.weight[4 * p + k]) * src[p];
      }
  }
  return grad;
}

// ---------------------------------------------------------------------------
// GlobalAvgPool / Broadcast

template <typename Scalar>
FeatureField<Scalar> GlobalAvgPool<Scalar>::forward(const Field& x) {
  in_h_ = x.height;
  in_w_ = x.width;
  has_input_ = true;
  Field out(x.type, 1, 1);
  for (int c = 0; c < x.channels(); ++c)
    out.data(c, 0) = static_cast<Scalar>(x.data.row(c).template cast<double>().sum() / x.pixels());
  return out;
}

template <typename Scalar>
FeatureField<Scalar> GlobalAvgPool<Scalar>::backward(const Field& grad_out) {
  require_forward(has_input_, kind());
  Field grad(grad_out.type, in_h_, in_w_);
  const Scalar inv = Scalar(1) / static_cast<Scalar>(in_h_ * in_w_);
  for (int c = 0; c < grad.channels(); ++c) grad.data.row(c).setConstant(grad_out.data(c, 0) * inv);
  return grad;
}

template <typename Scalar>
FeatureField<Scalar> Broadcast<Scalar>::forward(const Field& x) {
  if (x.height != 1 || x.width != 1) throw UsageError("broadcast expects a 1x1 field");
  has_input_ = true;
  Field out(x.type, height_, width_);
  for (int c = 0; c < x.channels(); ++c) out.data.row(c).setConstant(x.data(c, 0));
  return out;
}

template <typename Scalar>
FeatureField<Scalar> Broadcast<Scalar>::backward(const Field& grad_out) {
  require_forward(has_input_, kind());
  Field grad(grad_out.type, 1, 1);
  for (int c = 0; c < grad.channels(); ++c) grad.data(c, 0) = grad_out.data.row(c).sum();
  return grad;
}

// ---------------------------------------------------------------------------
// GroupPool

template <typename Scalar>
FieldType GroupPool<Scalar>::output_type(const FieldType& in) {
  return FieldType::trivial(in.group(), in.fields());
}

template <typename Scalar>
FeatureField<Scalar> GroupPool<Scalar>::forward(const Field& x) {
  in_type_ = std::make_unique<FieldType>(x.type);
  Field out(output_type(x.type), x.height, x.width);
  const int n = x.pixels();
  argmax_.assign(static_cast<std::size_t>(out.channels()) * n, 0);
  int in_c = 0;
  int out_c = 0;
  for (const auto& entry : x.type.entries()) {
    const int size = x.type.field_size(entry.repr);
    for (int m = 0; m < entry.multiplicity; ++m, ++out_c, in_c += size) {
      for (int p = 0; p < n; ++p) {
        int best = in_c;
        for (int c = in_c + 1; c < in_c + size; ++c)
          if (x.data(c, p) > x.data(best, p)) best = c;
        out.data(out_c, p) = x.data(best, p);
        argmax_[static_cast<std::size_t>(out_c) * n + p] = best;
      }
    }
  }
  has_input_ = true;
  return out;
}

template <typename Scalar>
FeatureField<Scalar> GroupPool<Scalar>::backward(const Field& grad_out) {
  require_forward(has_input_, kind());
  Field grad(*in_type_, grad_out.height, grad_out.width);
  const int n = grad_out.pixels();
  for (int c = 0; c < grad_out.channels(); ++c)
    for (int p = 0; p < n; ++p) grad.data(argmax_[static_cast<std::size_t>(c) * n + p], p) += grad_out.data(c, p);
  return grad;
}

// ---------------------------------------------------------------------------

template <typename Scalar>
FeatureField<Scalar> concat_channels(const std::vector<const FeatureField<Scalar>*>& parts) {
  if (parts.empty()) throw UsageError("concat_channels: no inputs");
  FieldType type = parts.front()->type;
  int rows = parts.front()->channels();
  for (std::size_t i = 1; i < parts.size(); ++i) {
    if (parts[i]->height != parts[0]->height || parts[i]->width != parts[0]->width)
      throw UsageError("concat_channels: spatial mismatch");
    type = type + parts[i]->type;
    rows += parts[i]->channels();
  }
  FeatureField<Scalar> out(type, parts[0]->height, parts[0]->width);
  int row = 0;
  for (const auto* p : parts) {
    out.data.middleRows(row, p->channels()) = p->data;
    row += p->channels();
  }
  return out;
}

template <typename Scalar>
std::vector<FeatureField<Scalar>> split_channels(const FeatureField<Scalar>& whole, const std::vector<FieldType>& types) {
  std::vector<FeatureField<Scalar>> out;
  int row = 0;
  for (const auto& t : types) {
    out.emplace_back(t, whole.height, whole.width, whole.data.middleRows(row, t.channels()));
    row += t.channels();
  }
  if (row != whole.channels()) throw UsageError("split_channels: channel count mismatch");
  return out;
}

#define EQUISYM_INSTANTIATE_LAYERS(T)                                                              \
  template class SteerableConv<T>;                                                                 \
  template class ReLU<T>;                                                                          \
  template class EquiNorm<T>;                                                                      \
  template class MaxPool2<T>;                                                                      \
  template class BilinearUpsample<T>;                                                              \
  template class GlobalAvgPool<T>;                                                                 \
  template class Broadcast<T>;                                                                     \
  template class GroupPool<T>;                                                                     \
  template FeatureField<T> concat_channels(const std::vector<const FeatureField<T>*>&);            \
  template std::vector<FeatureField<T>> split_channels(const FeatureField<T>&, const std::vector<FieldType>&);

EQUISYM_INSTANTIATE_LAYERS(float)
EQUISYM_INSTANTIATE_LAYERS(double)

}  // namespace equisym
