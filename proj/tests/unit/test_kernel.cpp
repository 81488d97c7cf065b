#include <doctest.h>

#include <cmath>
#include <random>

#include "equisym/errors.hpp"
#include "equisym/kernel.hpp"

using namespace equisym;

namespace {

using Weights = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Eigen::VectorXd random_base(const SteerableKernelSpec& spec, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  Eigen::VectorXd v(spec.base_parameter_count());
  for (auto& x : v) x = normal(rng);
  return v;
}

// Block-diagonal representation matrix built from regular_rep, independent of
// the channel permutation helpers used by the library.
Eigen::MatrixXd rep_matrix(const FieldType& type, GroupElement g) {
  const int c = type.channels();
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(c, c);
  const auto& group = type.group();
  int at = 0;
  for (const auto& e : type.entries())
    for (int k = 0; k < e.multiplicity; ++k) {
      if (e.repr == Representation::trivial) {
        m(at, at) = 1.0;
        ++at;
      } else {
        m.block(at, at, group.size(), group.size()) = regular_rep(group, g).cast<double>();
        at += group.size();
      }
    }
  return m;
}

Eigen::MatrixXd kernel_at(const Weights& w, int c_in, int k, int tx, int ty) {
  Eigen::MatrixXd out(w.rows(), c_in);
  for (int r = 0; r < w.rows(); ++r)
    for (int c = 0; c < c_in; ++c) out(r, c) = w(r, c * k * k + ty * k + tx);
  return out;
}

// Brute-force substitution of both sides of k(gx) = rho_out(g) k(x) rho_in(g^-1).
double brute_force_residual(const SteerableKernelSpec& spec, const Weights& w, GroupElement g) {
  const int k = spec.kernel_size;
  const int half = (k - 1) / 2;
  const auto& group = spec.in_type.group();
  const auto g_inv = inverse(group, g);
  const auto rho_out = rep_matrix(spec.out_type, g);
  const auto rho_in_inv = rep_matrix(spec.in_type, g_inv);
  double worst = 0.0;
  for (int ty = 0; ty < k; ++ty)
    for (int tx = 0; tx < k; ++tx) {
      const auto gx = act_on_plane(group, g, Eigen::Vector2d(tx - half, ty - half));
      const int gtx = static_cast<int>(std::lround(gx.x())) + half;
      const int gty = static_cast<int>(std::lround(gx.y())) + half;
      const auto lhs = kernel_at(w, spec.in_type.channels(), k, gtx, gty);
      const Eigen::MatrixXd rhs = rho_out * kernel_at(w, spec.in_type.channels(), k, tx, ty) * rho_in_inv;
      worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
    }
  return worst;
}

}  // namespace

TEST_CASE("zero base weights expand to zero") {
  const DihedralGroup d4(4);
  const SteerableKernelSpec spec{FieldType::trivial(d4, 3), FieldType::regular(d4, 2), 3, ExpansionRule::lifting};
  const auto w = expand_kernel<double>(spec, Eigen::VectorXd::Zero(spec.base_parameter_count()));
  CHECK(w.rows() == 16);
  CHECK(w.cols() == 27);
  CHECK(w.isZero(0.0));
}

TEST_CASE("D4 kernels satisfy the steerability constraint exactly") {
  const DihedralGroup d4(4);
  for (int k : {1, 3, 5}) {
    for (auto rule : {ExpansionRule::lifting, ExpansionRule::group_to_group}) {
      const FieldType in = rule == ExpansionRule::lifting ? FieldType::trivial(d4, 2) : FieldType::regular(d4, 2);
      const SteerableKernelSpec spec{in, FieldType::regular(d4, 3), k, rule};
      const Weights w = expand_kernel<double>(spec, random_base(spec, 11 + k));
      for (const auto& g : d4.elements()) {
        CHECK(brute_force_residual(spec, w, g) == 0.0);
        CHECK(kernel_constraint_residual(spec, w, g).max_abs == 0.0);
      }
    }
  }
}

TEST_CASE("non-steerable weights violate the constraint") {
  const DihedralGroup d4(4);
  const SteerableKernelSpec spec{FieldType::regular(d4, 1), FieldType::regular(d4, 1), 3, ExpansionRule::group_to_group};
  Weights w = expand_kernel<double>(spec, random_base(spec, 3));
  w(0, 0) += 1.0;
  CHECK(kernel_constraint_residual(spec, w, {1, false}).max_abs > 0.5);
}

TEST_CASE("parameter counts shrink by the group order") {
  const DihedralGroup d8(8);
  const SteerableKernelSpec spec{FieldType::regular(d8, 16), FieldType::regular(d8, 16), 3,
                                 ExpansionRule::group_to_group};
  CHECK(spec.base_parameter_count() == 16 * 16 * 16 * 9);
  CHECK(spec.unconstrained_parameter_count() == 256 * 256 * 9);
  CHECK(spec.unconstrained_parameter_count() / spec.base_parameter_count() == 2 * 8);

  const SteerableKernelSpec lift{FieldType::trivial(d8, 3), FieldType::regular(d8, 4), 3, ExpansionRule::lifting};
  CHECK(lift.unconstrained_parameter_count() == lift.base_parameter_count() * 16);
}

TEST_CASE("D8 interpolated constraint residual stays small on smooth filters") {
  const DihedralGroup d8(8);
  const SteerableKernelSpec spec{FieldType::regular(d8, 1), FieldType::regular(d8, 1), 5, ExpansionRule::group_to_group};
  std::mt19937_64 rng(5);
  std::normal_distribution<double> normal;
  Eigen::VectorXd base(spec.base_parameter_count());
  for (int slot = 0; slot < d8.size(); ++slot) {
    const double a = normal(rng), bx = 0.3 * normal(rng), by = 0.3 * normal(rng);
    for (int t = 0; t < 25; ++t) {
      const double x = t % 5 - 2.0, y = t / 5 - 2.0;
      base(slot * 25 + t) = std::exp(-(x * x + y * y) / 8.0) * (a + bx * x + by * y);
    }
  }
  const Weights w = expand_kernel<double>(spec, base);
  double worst = 0.0, worst_entry = 0.0;
  for (const auto& g : d8.elements()) {
    const auto res = kernel_constraint_residual(spec, w, g);
    if (d8.is_grid_exact(g)) CHECK(res.max_abs == 0.0);
    worst = std::max(worst, res.relative_l2);
    worst_entry = std::max(worst_entry, res.max_relative);
  }
  MESSAGE("D8 interpolated residual: relative_l2 " << worst << ", worst entry " << worst_entry);
  CHECK(worst < 0.15);
}

TEST_CASE("kernel shape and field type validation") {
  const DihedralGroup d4(4);
  CHECK_THROWS_AS(make_expansion<float>({FieldType::regular(d4, 1), FieldType::regular(d4, 1), 3, ExpansionRule::lifting}),
                  UsageError);
  CHECK_THROWS_AS(
      make_expansion<float>({FieldType::trivial(d4, 1), FieldType::trivial(d4, 1), 3, ExpansionRule::trivial_pointwise}),
      UsageError);
  CHECK_THROWS_AS(
      make_expansion<float>({FieldType::regular(d4, 1), FieldType::regular(d4, 1), 2, ExpansionRule::group_to_group}),
      UsageError);
}
