#include "equisym/kernel.hpp"

#include <cmath>
#include <vector>

#include "equisym/errors.hpp"

namespace equisym {

std::string to_string(ExpansionRule rule) {
  switch (rule) {
    case ExpansionRule::lifting: return "lifting";
    case ExpansionRule::group_to_group: return "group_to_group";
    case ExpansionRule::trivial_pointwise: return "trivial_pointwise";
    case ExpansionRule::unconstrained: return "unconstrained";
  }
  return "unknown";
}

ExpansionRule expansion_rule_from_string(const std::string& name) {
  for (auto rule : {ExpansionRule::lifting, ExpansionRule::group_to_group, ExpansionRule::trivial_pointwise,
                    ExpansionRule::unconstrained})
    if (to_string(rule) == name) return rule;
  throw UsageError("unknown expansion rule '" + name + "'");
}

void SteerableKernelSpec::validate() const {
  if (kernel_size < 1 || kernel_size % 2 == 0) throw UsageError("kernel size must be odd and positive");
  if (!(in_type.group() == out_type.group())) throw UsageError("kernel in/out types use different groups");
  switch (rule) {
    case ExpansionRule::lifting:
      if (!in_type.all(Representation::trivial) || !out_type.all(Representation::regular))
        throw UsageError("lifting expansion needs trivial -> regular, got " + in_type.describe() + " -> " +
                         out_type.describe());
      break;
    case ExpansionRule::group_to_group:
      if (!in_type.all(Representation::regular) || !out_type.all(Representation::regular))
        throw UsageError("group_to_group expansion needs regular -> regular, got " + in_type.describe() + " -> " +
                         out_type.describe());
      break;
    case ExpansionRule::trivial_pointwise:
      if (kernel_size != 1 || !in_type.all(Representation::trivial) || !out_type.all(Representation::trivial))
        throw UsageError("trivial_pointwise expansion needs a 1x1 trivial -> trivial kernel");
      break;
    case ExpansionRule::unconstrained: break;
  }
}

int SteerableKernelSpec::base_parameter_count() const {
  const int taps = kernel_size * kernel_size;
  switch (rule) {
    case ExpansionRule::lifting: return out_type.fields() * in_type.channels() * taps;
    case ExpansionRule::group_to_group: return out_type.fields() * in_type.fields() * in_type.group().size() * taps;
    case ExpansionRule::trivial_pointwise:
    case ExpansionRule::unconstrained: return unconstrained_parameter_count();
  }
  return 0;
}

int SteerableKernelSpec::unconstrained_parameter_count() const {
  return out_type.channels() * in_type.channels() * kernel_size * kernel_size;
}

namespace {

// Tap resampling on the k x k grid: tap t of the filter transformed by g reads
// the base filter at g^-1 t.
std::vector<Resampler> tap_warps(const DihedralGroup& group, int k) {
  std::vector<Resampler> warps;
  for (const auto& g : group.elements()) warps.push_back(make_warp(group, g, k, k));
  return warps;
}

}  // namespace

template <typename Scalar>
KernelExpansion<Scalar> make_expansion(const SteerableKernelSpec& spec) {
  spec.validate();
  const int k = spec.kernel_size;
  const int taps = k * k;
  const int c_in = spec.in_type.channels();
  const int c_out = spec.out_type.channels();
  const auto& group = spec.in_type.group();
  const int gs = group.size();

  KernelExpansion<Scalar> ex{spec, {}};
  ex.map.resize(static_cast<Eigen::Index>(c_out) * c_in * taps, spec.base_parameter_count());

  std::vector<Eigen::Triplet<Scalar>> entries;
  auto expanded_index = [&](int row, int col_channel, int tap) {
    return (static_cast<Eigen::Index>(row) * c_in + col_channel) * taps + tap;
  };

  if (spec.rule == ExpansionRule::trivial_pointwise || spec.rule == ExpansionRule::unconstrained) {
    entries.reserve(ex.map.rows());
    for (Eigen::Index i = 0; i < ex.map.rows(); ++i) entries.emplace_back(i, i, Scalar(1));
  } else {
    const auto warps = tap_warps(group, k);
    const int m_out = spec.out_type.fields();
    for (int o = 0; o < m_out; ++o) {
      for (int a = 0; a < gs; ++a) {
        const auto& warp = warps[a];
        const int row = o * gs + a;
        const GroupElement a_inv = inverse(group, group.element(a));
        for (int col = 0; col < c_in; ++col) {
          Eigen::Index base_offset = 0;
          if (spec.rule == ExpansionRule::lifting) {
            base_offset = (static_cast<Eigen::Index>(o) * c_in + col) * taps;
          } else {
            const int i = col / gs;
            const int b = col % gs;
            const int slot = group.index(compose(group, a_inv, group.element(b)));
            base_offset = ((static_cast<Eigen::Index>(o) * spec.in_type.fields() + i) * gs + slot) * taps;
          }
          for (int t = 0; t < taps; ++t) {
            for (int n = 0; n < 4; ++n) {
              const int src = warp.index[4 * t + n];
              if (src < 0) continue;
              entries.emplace_back(expanded_index(row, col, t), base_offset + src,
                                   static_cast<Scalar>(warp.weight[4 * t + n]));
            }
          }
        }
      }
    }
  }
  ex.map.setFromTriplets(entries.begin(), entries.end());
  ex.map.makeCompressed();
  return ex;
}

template <typename Scalar>
typename KernelExpansion<Scalar>::Matrix KernelExpansion<Scalar>::expand(const Vector& base) const {
  if (base.size() != map.cols()) throw UsageError("expand: base weight count mismatch");
  const int k = spec.kernel_size;
  Vector flat = map * base;
  return Eigen::Map<Matrix>(flat.data(), spec.out_type.channels(), spec.in_type.channels() * k * k);
}

template <typename Scalar>
typename KernelExpansion<Scalar>::Vector KernelExpansion<Scalar>::pull_back(const Matrix& expanded_grad) const {
  if (expanded_grad.size() != map.rows()) throw UsageError("pull_back: gradient shape mismatch");
  const Eigen::Map<const Vector> flat(expanded_grad.data(), expanded_grad.size());
  return map.transpose() * flat;
}

template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> expand_kernel(
    const SteerableKernelSpec& spec, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& base) {
  return make_expansion<Scalar>(spec).expand(base);
}

ConstraintResidual kernel_constraint_residual(
    const SteerableKernelSpec& spec,
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>& weights, GroupElement g) {
  const int k = spec.kernel_size;
  const int taps = k * k;
  const int c_in = spec.in_type.channels();
  const int c_out = spec.out_type.channels();
  if (weights.rows() != c_out || weights.cols() != c_in * taps)
    throw UsageError("kernel_constraint_residual: weight shape mismatch");
  const auto& group = spec.in_type.group();
  const GroupElement g_inv = inverse(group, g);
  const auto perm_out = channel_permutation(spec.out_type, g_inv);
  const auto perm_in = channel_permutation(spec.in_type, g_inv);
  const Eigen::Matrix2d m = plane_matrix(group, g);
  const double half = (k - 1) / 2.0;
  const bool exact = group.is_grid_exact(g);

  // Bilinear read of channel pair (r, c) of the expanded kernel at offset p.
  auto sample = [&](int r, int c, const Eigen::Vector2d& p) {
    const double x = p.x() + half;
    const double y = p.y() + half;
    const double fx = std::floor(x);
    const double fy = std::floor(y);
    double acc = 0.0;
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        const int xi = static_cast<int>(fx) + dx;
        const int yi = static_cast<int>(fy) + dy;
        const double w = (dx ? x - fx : 1 - (x - fx)) * (dy ? y - fy : 1 - (y - fy));
        if (w == 0.0 || xi < 0 || yi < 0 || xi >= k || yi >= k) continue;
        acc += w * weights(r, c * taps + yi * k + xi);
      }
    }
    return acc;
  };

  ConstraintResidual res;
  double diff_sq = 0.0, ref_sq = 0.0;
  const double scale = weights.cwiseAbs().maxCoeff();
  for (int ty = 0; ty < k; ++ty) {
    for (int tx = 0; tx < k; ++tx) {
      const Eigen::Vector2d x(tx - half, ty - half);
      if (!exact && x.norm() > half + 1e-9) continue;
      const Eigen::Vector2d gx = m * x;
      for (int r = 0; r < c_out; ++r) {
        for (int c = 0; c < c_in; ++c) {
          // (rho_out(g) k(x) rho_in(g^-1))[r][c] = k(x)[g^-1 r][g^-1 c]
          const double rhs = weights(perm_out[r], perm_in[c] * taps + ty * k + tx);
          double lhs = 0.0;
          if (exact) {
            const int gx_x = static_cast<int>(std::lround(gx.x() + half));
            const int gx_y = static_cast<int>(std::lround(gx.y() + half));
            lhs = weights(r, c * taps + gx_y * k + gx_x);
          } else {
            lhs = sample(r, c, gx);
          }
          res.max_abs = std::max(res.max_abs, std::abs(lhs - rhs));
          diff_sq += (lhs - rhs) * (lhs - rhs);
          ref_sq += rhs * rhs;
        }
      }
    }
  }
  res.max_relative = scale > 0 ? res.max_abs / scale : res.max_abs;
  res.relative_l2 = ref_sq > 0 ? std::sqrt(diff_sq / ref_sq) : std::sqrt(diff_sq);
  return res;
}

#define EQUISYM_INSTANTIATE_KERNEL(T)                                                          \
  template struct KernelExpansion<T>;                                                          \
  template KernelExpansion<T> make_expansion<T>(const SteerableKernelSpec&);                   \
  template Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> expand_kernel<T>( \
      const SteerableKernelSpec&, const Eigen::Matrix<T, Eigen::Dynamic, 1>&);

EQUISYM_INSTANTIATE_KERNEL(float)
EQUISYM_INSTANTIATE_KERNEL(double)

}  // namespace equisym
