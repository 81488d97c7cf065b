#include "equisym/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "equisym/errors.hpp"

namespace equisym {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kDeg = 180.0 / kPi;
constexpr double kExtentSlackDeg = 30.0;

Point rotate(const Point& v, double radians) {
  const double c = std::cos(radians), s = std::sin(radians);
  return {c * v.x() - s * v.y(), s * v.x() + c * v.y()};
}

std::string format_number(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double parse_number(const std::string& token) {
  double v = 0.0;
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc() || ptr != end || !std::isfinite(v)) throw DataError("bad number '" + token + "'");
  return v;
}

int parse_integer(const std::string& token) {
  int v = 0;
  const char* end = token.data() + token.size();
  const auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (ec != std::errc() || ptr != end) throw DataError("bad integer '" + token + "'");
  return v;
}

double angle_between_deg(const Point& a, const Point& b) {
  const double c = std::clamp(a.dot(b) / (a.norm() * b.norm()), -1.0, 1.0);
  return std::acos(c) * kDeg;
}

void check_point(const Point& p, int width, int height) {
  if (!(p.x() >= 0.0 && p.y() >= 0.0 && p.x() <= width - 1 && p.y() <= height - 1))
    throw DataError("point (" + format_number(p.x()) + ", " + format_number(p.y()) + ") outside the " +
                    std::to_string(width) + "x" + std::to_string(height) + " image");
}

void check_four_shape(const FourShape& s, int width, int height) {
  for (const Point* p : {&s.center, &s.up, &s.down, &s.left, &s.right}) check_point(*p, width, height);
  const std::pair<const Point*, Point> extents[] = {
      {&s.up, {0, -1}}, {&s.down, {0, 1}}, {&s.left, {-1, 0}}, {&s.right, {1, 0}}};
  const char* names[] = {"up", "down", "left", "right"};
  for (int i = 0; i < 4; ++i) {
    const Point v = *extents[i].first - s.center;
    if (v.norm() == 0.0) throw DataError(std::string("'4'-shape ") + names[i] + " extent has zero length");
    if (angle_between_deg(v, extents[i].second) > kExtentSlackDeg + 1e-6)
      throw DataError(std::string("'4'-shape ") + names[i] + " extent deviates more than 30 degrees");
  }
}

double signed_area(const std::vector<Point>& pts, std::size_t first) {
  double a = 0.0;
  const std::size_t n = pts.size() - first;
  for (std::size_t i = 0; i < n; ++i) {
    const Point& p = pts[first + i];
    const Point& q = pts[first + (i + 1) % n];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

void check_rotation_object(const RotationObject& obj, int width, int height) {
  if (obj.fold < 0) throw DataError("fold must be non-negative");
  if (obj.shape == RotationObject::Shape::ellipse) {
    check_four_shape(obj.four, width, height);
    return;
  }
  if (obj.polygon.size() < 4) throw DataError("polygon needs a center and at least 3 vertices");
  for (const auto& p : obj.polygon) check_point(p, width, height);
  // counter-clockwise on screen is negative area with y pointing down
  if (!(signed_area(obj.polygon, 1) < 0.0)) throw DataError("polygon vertices must run counter-clockwise");
}

void check_axis(const AxisSegment& axis, int width, int height) {
  check_point(axis.a, width, height);
  check_point(axis.b, width, height);
  if (axis.a == axis.b) throw DataError("axis endpoints coincide");
}

std::vector<Point> read_points(const std::vector<std::string>& tokens, std::size_t first, std::size_t count) {
  std::vector<Point> pts;
  for (std::size_t i = 0; i < count; ++i)
    pts.emplace_back(parse_number(tokens[first + 2 * i]), parse_number(tokens[first + 2 * i + 1]));
  return pts;
}

FourShape to_four(const std::vector<Point>& p) { return {p[0], p[1], p[2], p[3], p[4]}; }

void append_point(std::string& out, const Point& p) {
  out += ' ';
  out += format_number(p.x());
  out += ' ';
  out += format_number(p.y());
}

void append_four(std::string& out, const FourShape& s) {
  for (const Point* p : {&s.center, &s.up, &s.down, &s.left, &s.right}) append_point(out, *p);
}

}  // namespace

double RotationObject::area() const {
  if (shape == Shape::ellipse) {
    const Ellipse e = four_shape_to_ellipse(four);
    return kPi * e.a_vert * e.a_horiz;
  }
  return std::abs(signed_area(polygon, 1));
}

// ---------------------------------------------------------------------------
// annotation text format

std::vector<ImageAnnotation> parse_annotation_text(const std::string& text, const std::string& source) {
  std::vector<ImageAnnotation> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) tok.push_back(t);
    if (tok.empty()) continue;
    try {
      const std::string& kind = tok[0];
      auto expect = [&](std::size_t n) {
        if (tok.size() != n)
          throw DataError(kind + " record needs " + std::to_string(n - 1) + " fields, got " +
                          std::to_string(tok.size() - 1));
      };
      if (kind == "image") {
        expect(4);
        ImageAnnotation ann;
        ann.image_id = tok[1];
        ann.width = parse_integer(tok[2]);
        ann.height = parse_integer(tok[3]);
        if (ann.width < 1 || ann.height < 1) throw DataError("image size must be positive");
        out.push_back(std::move(ann));
        continue;
      }
      if (out.empty()) throw DataError("record before any 'image' header");
      ImageAnnotation& ann = out.back();
      if (kind == "raxis") {
        expect(5);
        const auto p = read_points(tok, 1, 2);
        AxisSegment axis{p[0], p[1]};
        check_axis(axis, ann.width, ann.height);
        ann.ref.axes.push_back(axis);
      } else if (kind == "rcircle") {
        expect(11);
        const FourShape s = to_four(read_points(tok, 1, 5));
        check_four_shape(s, ann.width, ann.height);
        ann.ref.circles.push_back(s);
      } else if (kind == "rot-ellipse") {
        expect(12);
        RotationObject obj;
        obj.shape = RotationObject::Shape::ellipse;
        obj.fold = parse_integer(tok[1]);
        obj.four = to_four(read_points(tok, 2, 5));
        check_rotation_object(obj, ann.width, ann.height);
        ann.rot.objects.push_back(obj);
      } else if (kind == "rot-polygon") {
        if (tok.size() < 2 + 8 || (tok.size() - 2) % 2 != 0)
          throw DataError("rot-polygon needs a fold and at least 4 points (center + 3 vertices)");
        RotationObject obj;
        obj.shape = RotationObject::Shape::polygon;
        obj.fold = parse_integer(tok[1]);
        obj.polygon = read_points(tok, 2, (tok.size() - 2) / 2);
        check_rotation_object(obj, ann.width, ann.height);
        ann.rot.objects.push_back(obj);
      } else {
        throw DataError("unknown record '" + kind + "'");
      }
    } catch (const DataError& e) {
      throw DataError(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::vector<ImageAnnotation> parse_annotations(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open annotation file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_annotation_text(ss.str(), path);
}

std::string format_annotations(const std::vector<ImageAnnotation>& annotations) {
  std::string out;
  for (const auto& ann : annotations) {
    out += "image " + ann.image_id + ' ' + std::to_string(ann.width) + ' ' + std::to_string(ann.height) + '\n';
    for (const auto& axis : ann.ref.axes) {
      out += "raxis";
      append_point(out, axis.a);
      append_point(out, axis.b);
      out += '\n';
    }
    for (const auto& c : ann.ref.circles) {
      out += "rcircle";
      append_four(out, c);
      out += '\n';
    }
    for (const auto& obj : ann.rot.objects) {
      if (obj.shape == RotationObject::Shape::ellipse) {
        out += "rot-ellipse " + std::to_string(obj.fold);
        append_four(out, obj.four);
      } else {
        out += "rot-polygon " + std::to_string(obj.fold);
        for (const auto& p : obj.polygon) append_point(out, p);
      }
      out += '\n';
    }
  }
  return out;
}

void write_annotations(const std::string& path, const std::vector<ImageAnnotation>& annotations) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out << format_annotations(annotations);
  if (!out) throw DataError("failed writing " + path);
}

void validate_annotation(const ImageAnnotation& ann) {
  if (ann.width < 1 || ann.height < 1) throw DataError(ann.image_id + ": image size must be positive");
  try {
    for (const auto& a : ann.ref.axes) check_axis(a, ann.width, ann.height);
    for (const auto& c : ann.ref.circles) check_four_shape(c, ann.width, ann.height);
    for (const auto& o : ann.rot.objects) check_rotation_object(o, ann.width, ann.height);
  } catch (const DataError& e) {
    throw DataError(ann.image_id + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// geometry

Ellipse four_shape_to_ellipse(const FourShape& s) {
  const double up = (s.up - s.center).norm(), down = (s.down - s.center).norm();
  const double left = (s.left - s.center).norm(), right = (s.right - s.center).norm();
  if (up == 0.0 || down == 0.0 || left == 0.0 || right == 0.0) throw DataError("degenerate '4'-shape");
  Ellipse e;
  e.center = s.center;
  e.a_vert = 0.5 * (up + down);
  e.a_horiz = 0.5 * (left + right);
  double tilt = std::atan2(s.up.y() - s.center.y(), s.up.x() - s.center.x()) * kDeg + 90.0;
  if (tilt > 180.0) tilt -= 360.0;
  e.tilt_deg = tilt;
  return e;
}

FourShape ellipse_to_four_shape(const Ellipse& e) {
  const double t = e.tilt_deg / kDeg;
  return {e.center, e.center + rotate({0, -e.a_vert}, t), e.center + rotate({0, e.a_vert}, t),
          e.center + rotate({-e.a_horiz, 0}, t), e.center + rotate({e.a_horiz, 0}, t)};
}

double line_orientation_deg(const Point& a, const Point& b) {
  double theta = std::atan2(b.y() - a.y(), b.x() - a.x()) * kDeg;
  theta = std::fmod(theta, 180.0);
  if (theta < 0) theta += 180.0;
  if (theta >= 180.0) theta -= 180.0;
  return theta;
}

OrientationLabel orientation_label(double theta_deg, int n_bins) {
  if (n_bins < 1) throw UsageError("orientation bins must be positive");
  double theta = std::fmod(theta_deg, 180.0);
  if (theta < 0) theta += 180.0;
  double u = theta / (180.0 / n_bins);
  u = std::round(u * 1e9) / 1e9;  // exact bin centres and midpoints survive rounding noise
  const double fl = std::floor(u);
  OrientationLabel out;
  out.lower = static_cast<int>(fl) % n_bins;
  out.upper = (out.lower + 1) % n_bins;
  out.w_upper = u - fl;
  out.w_lower = 1.0 - out.w_upper;
  out.quantized = out.w_upper > 0.5 ? out.upper : out.lower;
  return out;
}

// ---------------------------------------------------------------------------
// rasterization

namespace {

template <typename F>
void bresenham(int x0, int y0, int x1, int y1, F&& plot) {
  const int dx = std::abs(x1 - x0), sx = x0 < x1 ? 1 : -1;
  const int dy = -std::abs(y1 - y0), sy = y0 < y1 ? 1 : -1;
  int err = dx + dy;
  while (true) {
    plot(x0, y0);
    if (x0 == x1 && y0 == y1) break;
    const int e2 = 2 * err;
    if (e2 >= dy) {
      err += dy;
      x0 += sx;
    }
    if (e2 <= dx) {
      err += dx;
      y0 += sy;
    }
  }
}

}  // namespace

TaskMaps rasterize_reflection(const ReflectionAnnotation& ann, int height, int width, int n_ref) {
  const std::size_t n = static_cast<std::size_t>(height) * width;
  TaskMaps out{std::vector<std::uint8_t>(n, 0), std::vector<std::int32_t>(n, n_ref)};
  std::vector<double> best(n, -1.0);
  auto put = [&](int x, int y, int cls, double len) {
    if (x < 0 || y < 0 || x >= width || y >= height) return;
    const std::size_t i = static_cast<std::size_t>(y) * width + x;
    if (len > best[i] || (len == best[i] && cls < out.s[i])) {
      best[i] = len;
      out.s[i] = cls;
    }
  };
  for (const auto& axis : ann.axes) {
    const int cls = orientation_label(line_orientation_deg(axis.a, axis.b), n_ref).quantized;
    const double len = (axis.b - axis.a).norm();
    bresenham(static_cast<int>(std::lround(axis.a.x())), static_cast<int>(std::lround(axis.a.y())),
              static_cast<int>(std::lround(axis.b.x())), static_cast<int>(std::lround(axis.b.y())),
              [&](int x, int y) { put(x, y, cls, len); });
  }
  for (const auto& circle : ann.circles) {
    const Ellipse e = four_shape_to_ellipse(circle);
    const double t = e.tilt_deg / kDeg;
    const double reach = std::max(e.a_vert, e.a_horiz) + 1.0;
    auto chord = [&](const Point& d) {
      const Point q = rotate(d, -t);
      return 2.0 / std::sqrt(std::pow(q.x() / e.a_horiz, 2) + std::pow(q.y() / e.a_vert, 2));
    };
    const int x0 = static_cast<int>(std::floor(e.center.x() - reach)), x1 = static_cast<int>(std::ceil(e.center.x() + reach));
    const int y0 = static_cast<int>(std::floor(e.center.y() - reach)), y1 = static_cast<int>(std::ceil(e.center.y() + reach));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const Point d = Point(x, y) - e.center;
        const Point q = rotate(d, -t);
        if (std::pow(q.x() / e.a_horiz, 2) + std::pow(q.y() / e.a_vert, 2) > 1.0) continue;
        if (d.norm() == 0.0) {
          put(x, y, 0, chord({1, 0}));
          continue;
        }
        const int cls = orientation_label(line_orientation_deg({0, 0}, d), n_ref).quantized;
        put(x, y, cls, chord(d / d.norm()));
      }
  }
  for (std::size_t i = 0; i < n; ++i) out.y[i] = best[i] >= 0.0 ? 1 : 0;
  return out;
}

FoldClassTable::FoldClassTable(std::vector<int> folds) : folds_(std::move(folds)) {
  if (folds_.empty()) throw UsageError("fold table is empty");
  auto sorted = folds_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw UsageError("fold table has duplicates");
  if (sorted.front() < 0) throw UsageError("fold values must be non-negative");
  if (sorted.front() != 0) throw UsageError("fold table must contain 0 (continuous rotation)");
}

FoldClassTable FoldClassTable::standard(int size) {
  if (size < 1) throw UsageError("fold table size must be positive");
  std::vector<int> folds{0};
  for (int f = 2; static_cast<int>(folds.size()) < size; ++f) folds.push_back(f);
  return FoldClassTable(folds);
}

int FoldClassTable::class_of(int fold) const {
  const auto it = std::find(folds_.begin(), folds_.end(), fold);
  if (it == folds_.end()) throw DataError("fold " + std::to_string(fold) + " is not in the fold table");
  return static_cast<int>(it - folds_.begin());
}

TaskMaps rasterize_rotation(const RotationAnnotation& ann, int height, int width, const FoldClassTable& table) {
  const std::size_t n = static_cast<std::size_t>(height) * width;
  TaskMaps out{std::vector<std::uint8_t>(n, 0), std::vector<std::int32_t>(n, table.size())};
  std::vector<double> best(n, std::numeric_limits<double>::infinity());
  for (const auto& obj : ann.objects) {
    const int cls = table.class_of(obj.fold);
    const double area = obj.area();
    const Point c = obj.center();
    const int cx = static_cast<int>(std::lround(c.x())), cy = static_cast<int>(std::lround(c.y()));
    for (int dy = -kCenterRadius; dy <= kCenterRadius; ++dy)
      for (int dx = -kCenterRadius; dx <= kCenterRadius; ++dx) {
        if (dx * dx + dy * dy > kCenterRadius * kCenterRadius) continue;
        const int x = cx + dx, y = cy + dy;
        if (x < 0 || y < 0 || x >= width || y >= height) continue;
        const std::size_t i = static_cast<std::size_t>(y) * width + x;
        if (area < best[i]) {
          best[i] = area;
          out.s[i] = cls;
          out.y[i] = 1;
        }
      }
  }
  return out;
}

SampleLabels make_labels(const ImageAnnotation& ann, int n_ref, const FoldClassTable& table) {
  SampleLabels labels;
  labels.height = ann.height;
  labels.width = ann.width;
  auto ref = rasterize_reflection(ann.ref, ann.height, ann.width, n_ref);
  auto rot = rasterize_rotation(ann.rot, ann.height, ann.width, table);
  labels.y_ref = std::move(ref.y);
  labels.s_ref = std::move(ref.s);
  labels.y_rot = std::move(rot.y);
  labels.s_rot = std::move(rot.s);
  return labels;
}

// ---------------------------------------------------------------------------
// synthetic corpus

std::string to_string(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::circle:
      return "circle";
    case ShapeKind::ellipse:
      return "ellipse";
    case ShapeKind::polygon:
      return "polygon";
    case ShapeKind::rectangle:
      return "rectangle";
  }
  return "circle";
}

namespace {

struct PlacedShape {
  ShapeKind kind;
  Point center;
  double reach = 0.0;
  int sides = 0;
  Ellipse ellipse;              // circle / ellipse
  std::vector<Point> vertices;  // polygon / rectangle, increasing pixel angle
  std::vector<AxisSegment> axes;
  std::vector<std::pair<double, double>> analytic_axes;  // (length, orientation in degrees) from the construction
  int fold = 0;

  bool inside(const Point& p) const {
    if (kind == ShapeKind::circle || kind == ShapeKind::ellipse) {
      const Point q = rotate(p - center, -ellipse.tilt_deg / kDeg);
      return std::pow(q.x() / ellipse.a_horiz, 2) + std::pow(q.y() / ellipse.a_vert, 2) <= 1.0;
    }
    const std::size_t n = vertices.size();
    for (std::size_t i = 0; i < n; ++i) {
      const Point e = vertices[(i + 1) % n] - vertices[i];
      const Point d = p - vertices[i];
      if (e.x() * d.y() - e.y() * d.x() < 0.0) return false;
    }
    return true;
  }
};

/// Distance from c along unit direction u to the boundary of a convex polygon.
double ray_exit(const Point& c, const Point& u, const std::vector<Point>& poly) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Point a = poly[i], b = poly[(i + 1) % poly.size()];
    const Point e = b - a;
    const double denom = u.x() * e.y() - u.y() * e.x();
    if (std::abs(denom) < 1e-12) continue;
    const Point w = a - c;
    const double t = (w.x() * e.y() - w.y() * e.x()) / denom;
    const double s = (w.x() * u.y() - w.y() * u.x()) / denom;
    if (t > 0 && s >= -1e-9 && s <= 1 + 1e-9) best = std::min(best, t);
  }
  return best;
}

/// Vertices ordered from the one closest to 12 o'clock, counter-clockwise on screen.
std::vector<Point> annotation_order(const Point& c, const std::vector<Point>& increasing) {
  const std::size_t n = increasing.size();
  std::size_t start = 0;
  double best = 1e9;
  for (std::size_t i = 0; i < n; ++i) {
    const double a = angle_between_deg(increasing[i] - c, {0, -1});
    if (a < best - 1e-9) {
      best = a;
      start = i;
    }
  }
  std::vector<Point> out{c};
  for (std::size_t k = 0; k < n; ++k) out.push_back(increasing[(start + n - k) % n]);
  return out;
}

PlacedShape make_shape(ShapeKind kind, const SyntheticSpec& spec, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  PlacedShape s;
  s.kind = kind;
  const double r = uniform(spec.min_radius, spec.max_radius);
  switch (kind) {
    case ShapeKind::circle:
      s.ellipse = {{0, 0}, r, r, 0.0};
      s.reach = r;
      s.fold = 0;
      break;
    case ShapeKind::ellipse: {
      const double minor = r * uniform(0.45, 0.75);
      const bool tall = unit(rng) < 0.5;
      s.ellipse = {{0, 0}, tall ? r : minor, tall ? minor : r, uniform(-kExtentSlackDeg, kExtentSlackDeg)};
      s.reach = r;
      s.fold = 2;
      s.analytic_axes = {{2 * s.ellipse.a_vert, s.ellipse.tilt_deg + 90.0}, {2 * s.ellipse.a_horiz, s.ellipse.tilt_deg}};
      break;
    }
    case ShapeKind::polygon: {
      std::uniform_int_distribution<int> sides(spec.min_polygon_sides, spec.max_polygon_sides);
      s.sides = sides(rng);
      const double theta0 = uniform(0.0, 2 * kPi);
      for (int j = 0; j < s.sides; ++j) s.vertices.push_back(rotate({r, 0}, theta0 + 2 * kPi * j / s.sides));
      s.reach = r;
      s.fold = s.sides;
      const double apothem = r * std::cos(kPi / s.sides);
      for (int k = 0; k < s.sides; ++k) {
        const double length = s.sides % 2 ? r + apothem : (k % 2 ? 2 * apothem : 2 * r);
        s.analytic_axes.emplace_back(length, (theta0 + kPi * k / s.sides) * kDeg);
      }
      break;
    }
    case ShapeKind::rectangle: {
      double beta = uniform(22.0, 38.0) / kDeg;
      if (unit(rng) < 0.5) beta = kPi / 2 - beta;
      const double hw = r * std::cos(beta), hh = r * std::sin(beta);
      const double t = uniform(0.0, kPi);
      for (const Point& v : {Point(hw, hh), Point(-hw, hh), Point(-hw, -hh), Point(hw, -hh)})
        s.vertices.push_back(rotate(v, t));
      s.reach = r;
      s.fold = 2;
      s.ellipse.tilt_deg = t * kDeg;
      s.ellipse.a_horiz = hw;
      s.ellipse.a_vert = hh;
      s.analytic_axes = {{2 * hw, t * kDeg}, {2 * hh, t * kDeg + 90.0}};
      break;
    }
  }
  return s;
}

void finalize_shape(PlacedShape& s) {
  s.ellipse.center = s.center;
  for (auto& v : s.vertices) v += s.center;
  const Point c = s.center;
  switch (s.kind) {
    case ShapeKind::circle:
      break;
    case ShapeKind::ellipse: {
      const double t = s.ellipse.tilt_deg / kDeg;
      s.axes.push_back({c + rotate({0, -s.ellipse.a_vert}, t), c + rotate({0, s.ellipse.a_vert}, t)});
      s.axes.push_back({c + rotate({-s.ellipse.a_horiz, 0}, t), c + rotate({s.ellipse.a_horiz, 0}, t)});
      break;
    }
    case ShapeKind::polygon: {
      const Point v0 = s.vertices[0] - c;
      const double theta0 = std::atan2(v0.y(), v0.x());
      for (int k = 0; k < s.sides; ++k) {
        const double phi = theta0 + kPi * k / s.sides;
        const Point u(std::cos(phi), std::sin(phi));
        s.axes.push_back({c + u * ray_exit(c, u, s.vertices), c - u * ray_exit(c, -u, s.vertices)});
      }
      break;
    }
    case ShapeKind::rectangle: {
      const double t = s.ellipse.tilt_deg / kDeg;
      s.axes.push_back({c + rotate({-s.ellipse.a_horiz, 0}, t), c + rotate({s.ellipse.a_horiz, 0}, t)});
      s.axes.push_back({c + rotate({0, -s.ellipse.a_vert}, t), c + rotate({0, s.ellipse.a_vert}, t)});
      break;
    }
  }
}

double luminance(const double* rgb) { return 0.299 * rgb[0] + 0.587 * rgb[1] + 0.114 * rgb[2]; }

SyntheticSample generate_sample(const SyntheticSpec& spec, int index, std::vector<PlacedShape>* placed_shapes) {
  if (spec.catalog.empty()) throw UsageError("synthetic catalog is empty");
  if (spec.min_shapes < 0 || spec.max_shapes < spec.min_shapes) throw UsageError("bad shapes-per-image range");
  if (spec.min_radius <= 1.0 || spec.max_radius < spec.min_radius) throw UsageError("bad radius range");
  if (2 * (spec.max_radius + 2) > std::min(spec.width, spec.height)) throw UsageError("image too small for radius");
  std::seed_seq seq{static_cast<std::uint32_t>(spec.seed), static_cast<std::uint32_t>(spec.seed >> 32),
                    static_cast<std::uint32_t>(index)};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };
  const int w = spec.width, h = spec.height;

  // background: base colour, low-frequency waves, per-pixel noise added at the end
  double bg[3];
  for (double& c : bg) c = uniform(40.0, 215.0);
  struct Wave {
    double fx, fy, phase, amp[3];
  };
  std::vector<Wave> waves(3);
  for (auto& wave : waves) {
    const double f = uniform(0.05, 0.25), dir = uniform(0.0, kPi);
    wave.fx = f * std::cos(dir);
    wave.fy = f * std::sin(dir);
    wave.phase = uniform(0.0, 2 * kPi);
    for (double& a : wave.amp) a = uniform(-18.0, 18.0);
  }
  std::vector<double> canvas(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double v = bg[c];
        for (const auto& wave : waves) v += wave.amp[c] * std::sin(wave.fx * x + wave.fy * y + wave.phase);
        canvas[(static_cast<std::size_t>(y) * w + x) * 3 + c] = v;
      }

  std::uniform_int_distribution<int> count_dist(spec.min_shapes, spec.max_shapes);
  const int wanted = count_dist(rng);
  std::uniform_int_distribution<std::size_t> kind_dist(0, spec.catalog.size() - 1);
  std::vector<PlacedShape> shapes;
  for (int k = 0; k < wanted; ++k) {
    PlacedShape s = make_shape(spec.catalog[kind_dist(rng)], spec, rng);
    bool placed = false;
    for (int attempt = 0; attempt < 100 && !placed; ++attempt) {
      const Point c(uniform(s.reach + 1.0, w - 2.0 - s.reach), uniform(s.reach + 1.0, h - 2.0 - s.reach));
      placed = std::all_of(shapes.begin(), shapes.end(),
                           [&](const PlacedShape& o) { return (o.center - c).norm() >= o.reach + s.reach + 2.0; });
      if (placed) s.center = c;
    }
    if (!placed) continue;
    finalize_shape(s);
    double fill[3];
    do {
      for (double& c : fill) c = uniform(0.0, 255.0);
    } while (std::abs(luminance(fill) - luminance(bg)) < 70.0);
    const int x0 = std::max(0, static_cast<int>(s.center.x() - s.reach - 1));
    const int x1 = std::min(w - 1, static_cast<int>(s.center.x() + s.reach + 1));
    const int y0 = std::max(0, static_cast<int>(s.center.y() - s.reach - 1));
    const int y1 = std::min(h - 1, static_cast<int>(s.center.y() + s.reach + 1));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        int hits = 0;
        for (double oy : {-0.25, 0.25})
          for (double ox : {-0.25, 0.25}) hits += s.inside({x + ox, y + oy}) ? 1 : 0;
        if (!hits) continue;
        const double cover = hits / 4.0;
        for (int c = 0; c < 3; ++c) {
          double& v = canvas[(static_cast<std::size_t>(y) * w + x) * 3 + c];
          v = (1 - cover) * v + cover * fill[c];
        }
      }
    shapes.push_back(std::move(s));
  }

  SyntheticSample out;
  out.image = Image(w, h, 3);
  for (std::size_t i = 0; i < canvas.size(); ++i)
    out.image.pixels[i] =
        static_cast<std::uint8_t>(std::clamp(std::lround(canvas[i] + uniform(-8.0, 8.0)), 0L, 255L));

  auto& ann = out.annotation;
  char id[32];
  std::snprintf(id, sizeof(id), "syn%06d", index);
  ann.image_id = id;
  ann.width = w;
  ann.height = h;
  for (const auto& s : shapes) {
    for (const auto& axis : s.axes) ann.ref.axes.push_back(axis);
    RotationObject obj;
    obj.fold = s.fold;
    if (s.kind == ShapeKind::circle || s.kind == ShapeKind::ellipse) {
      obj.shape = RotationObject::Shape::ellipse;
      obj.four = ellipse_to_four_shape(s.ellipse);
      if (s.kind == ShapeKind::circle) ann.ref.circles.push_back(obj.four);
    } else {
      obj.shape = RotationObject::Shape::polygon;
      obj.polygon = annotation_order(s.center, s.vertices);
    }
    ann.rot.objects.push_back(std::move(obj));
  }
  if (placed_shapes) *placed_shapes = std::move(shapes);
  return out;
}

}  // namespace

SyntheticSample generate_synthetic_sample(const SyntheticSpec& spec, int index) {
  return generate_sample(spec, index, nullptr);
}

std::vector<SyntheticSample> generate_synthetic(const SyntheticSpec& spec, int count, SyntheticBookkeeping* book,
                                                int n_ref) {
  std::vector<SyntheticSample> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  if (book) {
    *book = {};
    book->scale_bins.assign(kScaleBins, 0);
    book->orientation_bins.assign(static_cast<std::size_t>(n_ref), 0);
  }
  std::vector<PlacedShape> shapes;
  for (int i = 0; i < count; ++i) {
    out.push_back(generate_sample(spec, i, book ? &shapes : nullptr));
    if (!book) continue;
    const auto& ann = out.back().annotation;
    book->images += 1;
    book->centers_per_image[static_cast<int>(shapes.size())] += 1;
    for (const auto& shape : shapes) {
      book->shapes[shape.kind == ShapeKind::polygon ? "polygon" + std::to_string(shape.sides) : to_string(shape.kind)] += 1;
      book->folds[shape.fold] += 1;
      book->circles += shape.kind == ShapeKind::circle ? 1 : 0;
      book->axes += static_cast<int>(shape.analytic_axes.size());
      for (const auto& [length, angle] : shape.analytic_axes) {
        book->scale_bins[scale_bin(length, ann.width, ann.height)] += 1;
        book->orientation_bins[orientation_label(angle, n_ref).quantized] += 1;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// statistics

int scale_bin(double length, int width, int height) {
  const double v = length / std::hypot(static_cast<double>(width), static_cast<double>(height));
  return std::clamp(static_cast<int>(std::floor(v * kScaleBins)), 0, kScaleBins - 1);
}

std::vector<double> DatasetStats::ratios(const std::vector<int>& counts) {
  double total = 0;
  for (int c : counts) total += c;
  std::vector<double> out(counts.size(), 0.0);
  if (total > 0)
    for (std::size_t i = 0; i < counts.size(); ++i) out[i] = counts[i] / total;
  return out;
}

std::map<int, double> DatasetStats::ratios(const std::map<int, int>& counts) {
  double total = 0;
  for (const auto& [k, c] : counts) total += c;
  std::map<int, double> out;
  for (const auto& [k, c] : counts) out[k] = total > 0 ? c / total : 0.0;
  return out;
}

DatasetStats compute_stats(const std::vector<ImageAnnotation>& annotations, int n_ref) {
  DatasetStats st;
  st.scale_bins.assign(kScaleBins, 0);
  st.orientation_bins.assign(static_cast<std::size_t>(n_ref), 0);
  for (const auto& ann : annotations) {
    st.images += 1;
    st.circles += static_cast<int>(ann.ref.circles.size());
    for (const auto& axis : ann.ref.axes) {
      st.axes += 1;
      st.scale_bins[scale_bin((axis.b - axis.a).norm(), ann.width, ann.height)] += 1;
      st.orientation_bins[orientation_label(line_orientation_deg(axis.a, axis.b), n_ref).quantized] += 1;
    }
    for (const auto& obj : ann.rot.objects) st.folds[obj.fold] += 1;
    st.centers_per_image[static_cast<int>(ann.rot.objects.size())] += 1;
  }
  return st;
}

bool matches_bookkeeping(const DatasetStats& st, const SyntheticBookkeeping& book) {
  return st.images == book.images && st.axes == book.axes && st.circles == book.circles &&
         st.scale_bins == book.scale_bins && st.orientation_bins == book.orientation_bins && st.folds == book.folds &&
         st.centers_per_image == book.centers_per_image;
}

namespace {

std::string fixed(double v, int digits = 4) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(digits);
  out << v;
  return out.str();
}

}  // namespace

std::string format_stats(const DatasetStats& st) {
  auto pad = [](const std::string& text, std::size_t width) {
    return text.size() >= width ? text + ' ' : text + std::string(width - text.size(), ' ');
  };
  std::ostringstream out;
  out << "images " << st.images << "\naxes " << st.axes << "\ncircles " << st.circles << "\n\n";
  out << "axis scale (length / image diagonal)\n  " << pad("bin", 14) << pad("count", 8) << "ratio\n";
  const auto scale = DatasetStats::ratios(st.scale_bins);
  for (int b = 0; b < kScaleBins; ++b) {
    const std::string bin = "[" + fixed(b / 10.0, 1) + ", " + fixed((b + 1) / 10.0, 1) + (b + 1 == kScaleBins ? "]" : ")");
    out << "  " << pad(bin, 14) << pad(std::to_string(st.scale_bins[b]), 8) << fixed(scale[b]) << '\n';
  }
  out << "\naxis orientation\n  " << pad("bin(deg)", 14) << pad("count", 8) << "ratio\n";
  const auto orient = DatasetStats::ratios(st.orientation_bins);
  const double step = 180.0 / static_cast<double>(std::max<std::size_t>(1, st.orientation_bins.size()));
  for (std::size_t b = 0; b < st.orientation_bins.size(); ++b)
    out << "  " << pad(fixed(b * step, 2), 14) << pad(std::to_string(st.orientation_bins[b]), 8) << fixed(orient[b])
        << '\n';
  out << "\nrotation fold (0 = continuous)\n  " << pad("fold", 14) << pad("count", 8) << "ratio\n";
  for (const auto& [fold, ratio] : DatasetStats::ratios(st.folds))
    out << "  " << pad(std::to_string(fold), 14) << pad(std::to_string(st.folds.at(fold)), 8) << fixed(ratio) << '\n';
  out << "\nrotation centers per image\n  " << pad("centers", 14) << pad("images", 8) << "ratio\n";
  for (const auto& [k, ratio] : DatasetStats::ratios(st.centers_per_image))
    out << "  " << pad(std::to_string(k), 14) << pad(std::to_string(st.centers_per_image.at(k)), 8) << fixed(ratio)
        << '\n';
  return out.str();
}

std::string svg_bar_chart(const std::string& title, const std::vector<std::string>& labels,
                          const std::vector<double>& values) {
  const int bar = 36, gap = 8, left = 40, top = 40, plot_h = 200;
  const int n = static_cast<int>(values.size());
  const int width = left + n * (bar + gap) + 20;
  const int height = top + plot_h + 50;
  double vmax = 0.0;
  for (double v : values) vmax = std::max(vmax, v);
  if (vmax <= 0) vmax = 1;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << left << "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" << title << "</text>\n"
      << "<line x1=\"" << left << "\" y1=\"" << top + plot_h << "\" x2=\"" << width - 10 << "\" y2=\"" << top + plot_h
      << "\" stroke=\"black\"/>\n";
  for (int i = 0; i < n; ++i) {
    const double hgt = plot_h * values[i] / vmax;
    const int x = left + i * (bar + gap);
    out << "<rect x=\"" << x << "\" y=\"" << fixed(top + plot_h - hgt, 2) << "\" width=\"" << bar << "\" height=\""
        << fixed(hgt, 2) << "\" fill=\"steelblue\"/>\n"
        << "<text x=\"" << x + bar / 2 << "\" y=\"" << top + plot_h + 16
        << "\" font-family=\"sans-serif\" font-size=\"10\" text-anchor=\"middle\">"
        << (i < static_cast<int>(labels.size()) ? labels[i] : "") << "</text>\n"
        << "<text x=\"" << x + bar / 2 << "\" y=\"" << fixed(top + plot_h - hgt - 4, 2)
        << "\" font-family=\"sans-serif\" font-size=\"9\" text-anchor=\"middle\">" << fixed(values[i], 3)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace equisym
