#include "equisym/group.hpp"

#include <cmath>
#include <numbers>

#include "equisym/errors.hpp"

namespace equisym {

std::string to_string(GroupElement g) {
  return "(" + std::to_string(g.rotation) + "," + (g.reflected ? "m" : "e") + ")";
}

DihedralGroup::DihedralGroup(int order) : order_(order) {
  if (order < 1) throw UsageError("dihedral group order must be >= 1, got " + std::to_string(order));
}

GroupElement DihedralGroup::element(int index) const {
  if (index < 0 || index >= size()) throw UsageError("group element index out of range");
  return {index % order_, index >= order_};
}

int DihedralGroup::index(GroupElement g) const {
  if (!contains(g)) throw UsageError("element " + to_string(g) + " not in D_" + std::to_string(order_));
  return g.rotation + (g.reflected ? order_ : 0);
}

std::vector<GroupElement> DihedralGroup::elements() const {
  std::vector<GroupElement> out;
  out.reserve(size());
  for (int i = 0; i < size(); ++i) out.push_back(element(i));
  return out;
}

bool DihedralGroup::contains(GroupElement g) const { return g.rotation >= 0 && g.rotation < order_; }

double DihedralGroup::angle(GroupElement g) const {
  return 2.0 * std::numbers::pi * g.rotation / order_;
}

bool DihedralGroup::is_grid_exact(GroupElement g) const { return (4 * g.rotation) % order_ == 0; }

std::vector<GroupElement> DihedralGroup::grid_exact_elements() const {
  std::vector<GroupElement> out;
  for (const auto& g : elements())
    if (is_grid_exact(g)) out.push_back(g);
  return out;
}

GroupElement compose(const DihedralGroup& group, GroupElement g, GroupElement h) {
  if (!group.contains(g) || !group.contains(h))
    throw UsageError("compose: elements " + to_string(g) + ", " + to_string(h) + " do not belong to D_" +
                     std::to_string(group.order()));
  const int n = group.order();
  const int r = g.reflected ? g.rotation - h.rotation : g.rotation + h.rotation;
  return {((r % n) + n) % n, g.reflected != h.reflected};
}

GroupElement inverse(const DihedralGroup& group, GroupElement g) {
  if (!group.contains(g)) throw UsageError("inverse: element not in group");
  if (g.reflected) return g;
  return {(group.order() - g.rotation) % group.order(), false};
}

std::vector<int> regular_permutation(const DihedralGroup& group, GroupElement g) {
  std::vector<int> perm(group.size());
  for (int i = 0; i < group.size(); ++i) perm[i] = group.index(compose(group, g, group.element(i)));
  return perm;
}

Eigen::MatrixXi regular_rep(const DihedralGroup& group, GroupElement g) {
  const auto perm = regular_permutation(group, g);
  Eigen::MatrixXi rep = Eigen::MatrixXi::Zero(group.size(), group.size());
  for (int col = 0; col < group.size(); ++col) rep(perm[col], col) = 1;
  return rep;
}

Eigen::Matrix2d plane_matrix(const DihedralGroup& group, GroupElement g) {
  if (!group.contains(g)) throw UsageError("plane_matrix: element not in group");
  double c = 0.0;
  double s = 0.0;
  // Quarter turns are tabulated so that grid-exact actions stay bit-exact.
  const int quarter_num = 4 * g.rotation;
  if (quarter_num % group.order() == 0) {
    static constexpr double kCos[] = {1.0, 0.0, -1.0, 0.0};
    static constexpr double kSin[] = {0.0, 1.0, 0.0, -1.0};
    const int q = (quarter_num / group.order()) % 4;
    c = kCos[q];
    s = kSin[q];
  } else {
    const double theta = group.angle(g);
    c = std::cos(theta);
    s = std::sin(theta);
  }
  Eigen::Matrix2d rot;
  rot << c, -s, s, c;
  if (!g.reflected) return rot;
  Eigen::Matrix2d mirror;
  mirror << -1.0, 0.0, 0.0, 1.0;
  return rot * mirror;
}

Eigen::Vector2d act_on_plane(const DihedralGroup& group, GroupElement g, const Eigen::Vector2d& p,
                             const Eigen::Vector2d& center) {
  return center + plane_matrix(group, g) * (p - center);
}

}  // namespace equisym
