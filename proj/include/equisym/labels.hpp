#pragma once

#include <cstdint>
#include <vector>

namespace equisym {

/// Rasterized ground truth for one image, row-major H x W maps. A task whose
/// vectors are empty has no labels.
struct SampleLabels {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> y_ref;  // 1 on axis / mask pixels
  std::vector<std::int32_t> s_ref;  // orientation class, n_ref = background
  std::vector<std::uint8_t> y_rot;  // 1 inside center disks
  std::vector<std::int32_t> s_rot;  // fold class, n_rot = background

  bool has_ref() const { return !y_ref.empty(); }
  bool has_rot() const { return !y_rot.empty(); }

  friend bool operator==(const SampleLabels&, const SampleLabels&) = default;
};

}  // namespace equisym
