#pragma once

#include <Eigen/Dense>
#include <Eigen/SparseCore>
#include <string>

#include "equisym/field.hpp"

namespace equisym {

enum class ExpansionRule {
  lifting,            // trivial -> regular: each output group channel sees the filter transformed by g
  group_to_group,     // regular -> regular: slot g^-1 h of the base filter, transformed by g
  trivial_pointwise,  // trivial -> trivial 1x1: unconstrained and automatically equivariant
  unconstrained,      // ordinary convolution, used by the non-equivariant baseline
};

std::string to_string(ExpansionRule rule);
ExpansionRule expansion_rule_from_string(const std::string& name);

struct SteerableKernelSpec {
  FieldType in_type;
  FieldType out_type;
  int kernel_size = 3;
  ExpansionRule rule = ExpansionRule::group_to_group;

  /// Number of free (base) parameters, bias excluded.
  int base_parameter_count() const;
  /// Parameters of an ordinary convolution with the same channel counts.
  int unconstrained_parameter_count() const;
  /// Throws UsageError if the field types are incompatible with the rule.
  void validate() const;
};

/// Linear map from base weights to the (c_out x c_in*k*k) convolution weight
/// matrix, flattened row-major. Stored sparse: every expanded tap is a short
/// combination of base taps (one for grid-exact elements, up to four with
/// bilinear tap resampling).
template <typename Scalar>
struct KernelExpansion {
  SteerableKernelSpec spec;
  Eigen::SparseMatrix<Scalar, Eigen::RowMajor> map;  // (c_out*c_in*k*k) x base_count

  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  /// Expanded weights as a (c_out x c_in*k*k) matrix.
  Matrix expand(const Vector& base) const;
  /// Adjoint of expand: accumulates expanded-weight gradients into base slots.
  Vector pull_back(const Matrix& expanded_grad) const;
};

template <typename Scalar>
KernelExpansion<Scalar> make_expansion(const SteerableKernelSpec& spec);

/// One-shot expansion of base weights into convolution weights.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> expand_kernel(
    const SteerableKernelSpec& spec, const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& base);

struct ConstraintResidual {
  double max_abs = 0.0;
  double max_relative = 0.0;  // max_abs divided by the largest weight magnitude
  double relative_l2 = 0.0;   // ||lhs - rhs|| / ||rhs|| over the compared entries
};

/// Evaluates k(gx) - rho_out(g) k(x) rho_in(g^-1) over the kernel grid. For
/// grid-exact g both sides are read directly from the expanded weights; for
/// other rotations k(gx) is bilinearly interpolated and only taps inside the
/// inscribed disk are compared.
ConstraintResidual kernel_constraint_residual(const SteerableKernelSpec& spec,
                                              const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                                  Eigen::RowMajor>& weights,
                                              GroupElement g);

}  // namespace equisym
