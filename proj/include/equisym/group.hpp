#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace equisym {

/// Element of D_N written as rotation^r composed with reflection^m: as a map on
/// the plane it first mirrors across the vertical axis (if reflected) and then
/// rotates by 2*pi*r/N.
struct GroupElement {
  int rotation = 0;
  bool reflected = false;

  friend bool operator==(const GroupElement&, const GroupElement&) = default;
};

std::string to_string(GroupElement g);

/// Dihedral group of order 2N. Elements are enumerated rotations first
/// (r = 0..N-1, unreflected) followed by reflections (r = 0..N-1).
class DihedralGroup {
 public:
  explicit DihedralGroup(int order);

  int order() const { return order_; }
  int size() const { return 2 * order_; }

  GroupElement identity() const { return {}; }
  GroupElement element(int index) const;
  int index(GroupElement g) const;
  std::vector<GroupElement> elements() const;
  bool contains(GroupElement g) const;

  /// Rotation angle of g in radians.
  double angle(GroupElement g) const;
  /// True when the rotation part is a multiple of 90 degrees, i.e. g maps the
  /// pixel grid onto itself.
  bool is_grid_exact(GroupElement g) const;
  /// Elements whose action permutes pixels exactly.
  std::vector<GroupElement> grid_exact_elements() const;

  friend bool operator==(const DihedralGroup&, const DihedralGroup&) = default;

 private:
  int order_;
};

GroupElement compose(const DihedralGroup& group, GroupElement g, GroupElement h);
GroupElement inverse(const DihedralGroup& group, GroupElement g);

/// Permutation matrix of left multiplication on the enumerated elements:
/// column index(h) has its single 1 in row index(g o h).
Eigen::MatrixXi regular_rep(const DihedralGroup& group, GroupElement g);

/// Same action as an index map: result[index(h)] = index(g o h).
std::vector<int> regular_permutation(const DihedralGroup& group, GroupElement g);

/// 2x2 orthogonal matrix of g acting on plane vectors.
Eigen::Matrix2d plane_matrix(const DihedralGroup& group, GroupElement g);

Eigen::Vector2d act_on_plane(const DihedralGroup& group, GroupElement g, const Eigen::Vector2d& p,
                             const Eigen::Vector2d& center = Eigen::Vector2d::Zero());

}  // namespace equisym
