#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "equisym/image.hpp"
#include "equisym/labels.hpp"

namespace equisym {

using Point = Eigen::Vector2d;

/// Five-point annotation of a circular object: center and the boundary extents
/// towards up, down, left and right.
struct FourShape {
  Point center = Point::Zero();
  Point up = Point::Zero();
  Point down = Point::Zero();
  Point left = Point::Zero();
  Point right = Point::Zero();
  friend bool operator==(const FourShape&, const FourShape&) = default;
};

struct AxisSegment {
  Point a = Point::Zero();
  Point b = Point::Zero();
  friend bool operator==(const AxisSegment&, const AxisSegment&) = default;
};

/// Ellipse in pixel coordinates. The vertical semi-axis points up before the
/// tilt (degrees) rotates it, positive tilt turning x towards y.
struct Ellipse {
  Point center{0, 0};
  double a_vert = 0.0;
  double a_horiz = 0.0;
  double tilt_deg = 0.0;
};

struct RotationObject {
  enum class Shape { ellipse, polygon };
  Shape shape = Shape::ellipse;
  int fold = 0;  // 0 = continuous
  FourShape four{};
  std::vector<Point> polygon;  // center first, then the vertices

  Point center() const { return shape == Shape::ellipse ? four.center : polygon.front(); }
  /// Area of the annotated region (ellipse or polygon).
  double area() const;

  friend bool operator==(const RotationObject&, const RotationObject&) = default;
};

struct ReflectionAnnotation {
  std::vector<AxisSegment> axes;
  std::vector<FourShape> circles;
  friend bool operator==(const ReflectionAnnotation&, const ReflectionAnnotation&) = default;
};

struct RotationAnnotation {
  std::vector<RotationObject> objects;
  friend bool operator==(const RotationAnnotation&, const RotationAnnotation&) = default;
};

struct ImageAnnotation {
  std::string image_id;
  int width = 0;
  int height = 0;
  ReflectionAnnotation ref;
  RotationAnnotation rot;
  friend bool operator==(const ImageAnnotation&, const ImageAnnotation&) = default;
};

/// Parses the line-oriented annotation format. Errors name the source and line.
std::vector<ImageAnnotation> parse_annotation_text(const std::string& text, const std::string& source = "<text>");
std::vector<ImageAnnotation> parse_annotations(const std::string& path);
std::string format_annotations(const std::vector<ImageAnnotation>& annotations);
void write_annotations(const std::string& path, const std::vector<ImageAnnotation>& annotations);

/// Schema checks: distinct segment endpoints, '4'-shape extent directions
/// within 30 degrees, counter-clockwise polygons with >= 3 vertices,
/// coordinates inside the image. Throws DataError.
void validate_annotation(const ImageAnnotation& annotation);

Ellipse four_shape_to_ellipse(const FourShape& shape);
FourShape ellipse_to_four_shape(const Ellipse& ellipse);

/// Soft orientation label of a line at `theta_deg` over bins k*180/n.
struct OrientationLabel {
  int lower = 0;
  int upper = 0;
  double w_lower = 1.0;
  double w_upper = 0.0;
  int quantized = 0;  // argmax, ties to `lower`
};
OrientationLabel orientation_label(double theta_deg, int n_bins);

/// Orientation in [0,180) degrees of the line from a to b (pixel coordinates).
double line_orientation_deg(const Point& a, const Point& b);

struct TaskMaps {
  std::vector<std::uint8_t> y;
  std::vector<std::int32_t> s;
};

TaskMaps rasterize_reflection(const ReflectionAnnotation& ann, int height, int width, int n_ref);

/// Ordered fold values; the position of a fold is its class index.
class FoldClassTable {
 public:
  explicit FoldClassTable(std::vector<int> folds);
  /// {0, 2, 3, ...} with `size` entries.
  static FoldClassTable standard(int size = 21);

  int size() const { return static_cast<int>(folds_.size()); }
  const std::vector<int>& folds() const { return folds_; }
  int class_of(int fold) const;

 private:
  std::vector<int> folds_;
};

inline constexpr int kCenterRadius = 5;

TaskMaps rasterize_rotation(const RotationAnnotation& ann, int height, int width, const FoldClassTable& table);

SampleLabels make_labels(const ImageAnnotation& ann, int n_ref, const FoldClassTable& table);

// ---------------------------------------------------------------------------
// synthetic corpus

enum class ShapeKind { circle, ellipse, polygon, rectangle };
std::string to_string(ShapeKind kind);

struct SyntheticSpec {
  int width = 64;
  int height = 64;
  int min_shapes = 1;
  int max_shapes = 3;
  double min_radius = 8.0;
  double max_radius = 18.0;
  int min_polygon_sides = 3;
  int max_polygon_sides = 8;
  std::vector<ShapeKind> catalog{ShapeKind::circle, ShapeKind::ellipse, ShapeKind::polygon, ShapeKind::rectangle};
  std::uint64_t seed = 1;
};

struct SyntheticSample {
  Image image;
  ImageAnnotation annotation;
};

/// Counts the generator knows from construction, in the same binning as
/// compute_stats.
struct SyntheticBookkeeping {
  int images = 0;
  std::map<std::string, int> shapes;       // by kind, polygons as "polygon<n>"
  std::map<int, int> folds;                // fold -> objects
  std::map<int, int> centers_per_image;    // centers -> images
  std::vector<int> scale_bins;             // axis length / diagonal, 10 bins
  std::vector<int> orientation_bins;       // n_ref bins
  int axes = 0;
  int circles = 0;
};

/// Deterministic per (spec.seed, index): sample i is the same whatever the count.
SyntheticSample generate_synthetic_sample(const SyntheticSpec& spec, int index);
std::vector<SyntheticSample> generate_synthetic(const SyntheticSpec& spec, int count,
                                                SyntheticBookkeeping* bookkeeping = nullptr, int n_ref = 8);

// ---------------------------------------------------------------------------
// statistics

inline constexpr int kScaleBins = 10;

struct DatasetStats {
  int images = 0;
  int axes = 0;
  int circles = 0;
  std::vector<int> scale_bins;        // axis length / image diagonal
  std::vector<int> orientation_bins;  // quantized axis orientation
  std::map<int, int> folds;
  std::map<int, int> centers_per_image;

  static std::vector<double> ratios(const std::vector<int>& counts);
  static std::map<int, double> ratios(const std::map<int, int>& counts);
};

int scale_bin(double length, int width, int height);

DatasetStats compute_stats(const std::vector<ImageAnnotation>& annotations, int n_ref = 8);

/// Whether the statistics equal the generator's own counts.
bool matches_bookkeeping(const DatasetStats& stats, const SyntheticBookkeeping& book);

/// Text tables of all histograms (counts and ratios).
std::string format_stats(const DatasetStats& stats);

/// Bar chart of ratios as a standalone SVG document.
std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values);

}  // namespace equisym
