#include "equisym/field.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "equisym/errors.hpp"

namespace equisym {

FieldType::FieldType(DihedralGroup group, std::vector<FieldEntry> entries)
    : group_(group), entries_(std::move(entries)) {
  for (const auto& e : entries_)
    if (e.multiplicity < 1) throw UsageError("field multiplicity must be positive");
}

FieldType FieldType::trivial(DihedralGroup group, int multiplicity) {
  return FieldType(group, {{Representation::trivial, multiplicity}});
}

FieldType FieldType::regular(DihedralGroup group, int multiplicity) {
  return FieldType(group, {{Representation::regular, multiplicity}});
}

int FieldType::channels() const {
  int total = 0;
  for (const auto& e : entries_) total += e.multiplicity * field_size(e.repr);
  return total;
}

int FieldType::fields() const {
  int total = 0;
  for (const auto& e : entries_) total += e.multiplicity;
  return total;
}

bool FieldType::all(Representation repr) const {
  return std::all_of(entries_.begin(), entries_.end(), [&](const FieldEntry& e) { return e.repr == repr; });
}

FieldType FieldType::operator+(const FieldType& other) const {
  if (!(group_ == other.group_)) throw UsageError("cannot concatenate field types over different groups");
  auto entries = entries_;
  for (const auto& e : other.entries_) {
    if (!entries.empty() && entries.back().repr == e.repr)
      entries.back().multiplicity += e.multiplicity;
    else
      entries.push_back(e);
  }
  return FieldType(group_, std::move(entries));
}

std::string FieldType::describe() const {
  std::ostringstream os;
  os << "D" << group_.order() << "[";
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (i) os << "+";
    os << entries_[i].multiplicity << (entries_[i].repr == Representation::trivial ? "t" : "r");
  }
  os << "]";
  return os.str();
}

std::vector<int> channel_permutation(const FieldType& type, GroupElement g) {
  const auto& group = type.group();
  const auto perm = regular_permutation(group, g);
  std::vector<int> out;
  out.reserve(type.channels());
  for (const auto& entry : type.entries()) {
    for (int m = 0; m < entry.multiplicity; ++m) {
      const int base = static_cast<int>(out.size());
      if (entry.repr == Representation::trivial) {
        out.push_back(base);
        continue;
      }
      for (int h = 0; h < group.size(); ++h) out.push_back(base + perm[h]);
    }
  }
  return out;
}

template <typename Scalar>
FeatureField<Scalar>::FeatureField(FieldType field_type, int h, int w, Matrix values)
    : type(std::move(field_type)), height(h), width(w), data(std::move(values)) {
  if (data.rows() != type.channels() || data.cols() != static_cast<Eigen::Index>(h) * w)
    throw UsageError("feature field data shape does not match its type " + type.describe());
}

Resampler make_warp(const DihedralGroup& group, GroupElement g, int height, int width) {
  Resampler warp;
  warp.out_height = height;
  warp.out_width = width;
  warp.index.assign(static_cast<std::size_t>(height) * width * 4, -1);
  warp.weight.assign(static_cast<std::size_t>(height) * width * 4, 0.0);
  const GroupElement g_inv = inverse(group, g);
  const Eigen::Matrix2d m = plane_matrix(group, g_inv);
  const Eigen::Vector2d center((width - 1) / 2.0, (height - 1) / 2.0);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      // Snapping to a 2^-32 grid makes mathematically equal sample points computed
      // through different rotation matrices produce identical weights.
      const Eigen::Vector2d src = ((center + m * (Eigen::Vector2d(x, y) - center)) * 4294967296.0).array().round() /
                                  4294967296.0;
      const double fx0 = std::floor(src.x());
      const double fy0 = std::floor(src.y());
      const double ax = src.x() - fx0;
      const double ay = src.y() - fy0;
      const int x0 = static_cast<int>(fx0);
      const int y0 = static_cast<int>(fy0);
      const std::size_t base = (static_cast<std::size_t>(y) * width + x) * 4;
      const double w[4] = {(1 - ax) * (1 - ay), ax * (1 - ay), (1 - ax) * ay, ax * ay};
      const int xs[4] = {x0, x0 + 1, x0, x0 + 1};
      const int ys[4] = {y0, y0, y0 + 1, y0 + 1};
      for (int k = 0; k < 4; ++k) {
        if (w[k] == 0.0 || xs[k] < 0 || xs[k] >= width || ys[k] < 0 || ys[k] >= height) continue;
        warp.index[base + k] = ys[k] * width + xs[k];
        warp.weight[base + k] = w[k];
      }
    }
  }
  return warp;
}

template <typename Scalar>
FeatureField<Scalar> apply_resampler(const FeatureField<Scalar>& f, const Resampler& warp) {
  if (static_cast<std::size_t>(warp.out_height) * warp.out_width * 4 != warp.index.size())
    throw UsageError("malformed resampler");
  FeatureField<Scalar> out(f.type, warp.out_height, warp.out_width);
  const int n = warp.out_height * warp.out_width;
  for (int c = 0; c < f.channels(); ++c) {
    const Scalar* src = f.data.row(c).data();
    Scalar* dst = out.data.row(c).data();
    for (int p = 0; p < n; ++p) {
      Scalar acc = 0;
      bool any = false;
      for (int k = 0; k < 4; ++k) {
        const auto idx = warp.index[4 * p + k];
        if (idx < 0) continue;
        const double w = warp.weight[4 * p + k];
        // Unit weights copy without arithmetic so grid-exact warps stay bit-exact.
        if (w == 1.0) {
          acc = src[idx];
          any = true;
          break;
        }
        acc += static_cast<Scalar>(w) * src[idx];
        any = true;
      }
      dst[p] = any ? acc : Scalar(0);
    }
  }
  return out;
}

template <typename Scalar>
FeatureField<Scalar> transform_scalar_field(const FeatureField<Scalar>& f, GroupElement g) {
  if (!f.type.all(Representation::trivial))
    throw UsageError("transform_scalar_field requires trivial fields, got " + f.type.describe());
  return transform_field(f, g);
}

template <typename Scalar>
FeatureField<Scalar> transform_regular_field(const FeatureField<Scalar>& f, GroupElement g) {
  if (!f.type.all(Representation::regular))
    throw UsageError("transform_regular_field requires regular fields, got " + f.type.describe());
  return transform_field(f, g);
}

template <typename Scalar>
FeatureField<Scalar> transform_field(const FeatureField<Scalar>& f, GroupElement g) {
  const auto& group = f.type.group();
  const auto warped = apply_resampler(f, make_warp(group, g, f.height, f.width));
  if (f.type.all(Representation::trivial)) return warped;

  const auto perm = channel_permutation(f.type, g);
  FeatureField<Scalar> out(f.type, f.height, f.width);
  for (int c = 0; c < f.channels(); ++c) out.data.row(perm[c]) = warped.data.row(c);
  return out;
}

template <typename Scalar>
double interior_max_abs_diff(const FeatureField<Scalar>& a, const FeatureField<Scalar>& b, double margin) {
  if (a.channels() != b.channels() || a.height != b.height || a.width != b.width)
    throw UsageError("interior_max_abs_diff: shape mismatch");
  const int y0 = static_cast<int>(std::floor(a.height * margin));
  const int x0 = static_cast<int>(std::floor(a.width * margin));
  double worst = 0.0;
  for (int c = 0; c < a.channels(); ++c)
    for (int y = y0; y < a.height - y0; ++y)
      for (int x = x0; x < a.width - x0; ++x)
        worst = std::max(worst, std::abs(static_cast<double>(a.at(c, y, x)) - static_cast<double>(b.at(c, y, x))));
  return worst;
}

#define EQUISYM_INSTANTIATE_FIELD(T)                                                            \
  template struct FeatureField<T>;                                                              \
  template FeatureField<T> apply_resampler(const FeatureField<T>&, const Resampler&);           \
  template FeatureField<T> transform_scalar_field(const FeatureField<T>&, GroupElement);        \
  template FeatureField<T> transform_regular_field(const FeatureField<T>&, GroupElement);       \
  template FeatureField<T> transform_field(const FeatureField<T>&, GroupElement);               \
  template double interior_max_abs_diff(const FeatureField<T>&, const FeatureField<T>&, double);

EQUISYM_INSTANTIATE_FIELD(float)
EQUISYM_INSTANTIATE_FIELD(double)

}  // namespace equisym
