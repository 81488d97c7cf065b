#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "equisym/group.hpp"

namespace equisym {

enum class Representation { trivial, regular };

struct FieldEntry {
  Representation repr;
  int multiplicity;

  friend bool operator==(const FieldEntry&, const FieldEntry&) = default;
};

/// Ordered list of (representation, multiplicity) blocks describing how the
/// channels of a feature field transform. A regular block contributes 2N
/// consecutive channels per field, a trivial block one channel per field.
class FieldType {
 public:
  FieldType(DihedralGroup group, std::vector<FieldEntry> entries);

  static FieldType trivial(DihedralGroup group, int multiplicity);
  static FieldType regular(DihedralGroup group, int multiplicity);

  const DihedralGroup& group() const { return group_; }
  const std::vector<FieldEntry>& entries() const { return entries_; }

  int channels() const;
  /// Number of fields (a regular field counts once).
  int fields() const;
  bool all(Representation repr) const;
  /// Channel width of a single field of the given representation.
  int field_size(Representation repr) const { return repr == Representation::trivial ? 1 : group_.size(); }

  /// Concatenation of two types over the same group.
  FieldType operator+(const FieldType& other) const;

  std::string describe() const;

  friend bool operator==(const FieldType&, const FieldType&) = default;

 private:
  DihedralGroup group_;
  std::vector<FieldEntry> entries_;
};

/// Channel shuffle of the representation: channel c moves to result[c] under g.
/// Trivial channels map to themselves.
std::vector<int> channel_permutation(const FieldType& type, GroupElement g);

/// Spatial tensor stored as a (channels x height*width) row-major matrix so that
/// each channel is a contiguous image plane.
template <typename Scalar>
struct FeatureField {
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  FieldType type;
  int height = 0;
  int width = 0;
  Matrix data;

  FeatureField(FieldType field_type, int h, int w)
      : type(std::move(field_type)), height(h), width(w), data(Matrix::Zero(type.channels(), h * w)) {}

  FeatureField(FieldType field_type, int h, int w, Matrix values);

  int channels() const { return static_cast<int>(data.rows()); }
  int pixels() const { return height * width; }

  Scalar& at(int c, int y, int x) { return data(c, y * width + x); }
  Scalar at(int c, int y, int x) const { return data(c, y * width + x); }

  bool all_finite() const { return data.allFinite(); }

  template <typename Other>
  FeatureField<Other> cast() const {
    return FeatureField<Other>(type, height, width, data.template cast<Other>());
  }
};

/// Precomputed bilinear resampling of a grid: out[p] = sum_k weight[p][k] * in[index[p][k]].
/// Used for warping fields and for filter taps.
struct Resampler {
  int out_height = 0;
  int out_width = 0;
  std::vector<std::int32_t> index;  // 4 per output pixel, -1 for out of bounds
  std::vector<double> weight;       // 4 per output pixel
};

/// Sampling map for out(x) = in(g^-1 x) with rotation about the grid center.
/// Grid-exact elements produce pure index permutations with unit weights.
Resampler make_warp(const DihedralGroup& group, GroupElement g, int height, int width);

template <typename Scalar>
FeatureField<Scalar> apply_resampler(const FeatureField<Scalar>& f, const Resampler& warp);

/// Spatial warp of a field whose channels are all trivial.
template <typename Scalar>
FeatureField<Scalar> transform_scalar_field(const FeatureField<Scalar>& f, GroupElement g);

/// Spatial warp followed by the block-wise regular-representation channel shuffle.
template <typename Scalar>
FeatureField<Scalar> transform_regular_field(const FeatureField<Scalar>& f, GroupElement g);

/// Warp of a field of any (possibly mixed) type.
template <typename Scalar>
FeatureField<Scalar> transform_field(const FeatureField<Scalar>& f, GroupElement g);

/// Maximum absolute difference over the interior window that drops `margin`
/// (fraction of each side) on every border.
template <typename Scalar>
double interior_max_abs_diff(const FeatureField<Scalar>& a, const FeatureField<Scalar>& b, double margin);

}  // namespace equisym
