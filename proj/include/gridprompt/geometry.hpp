// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <utility>
#include <vector>

namespace gridprompt {

/// Axis-aligned box: top-left corner plus size, in pixels. Zero-area boxes
/// are legal (they can arise after transforms) and are handled by the
/// assignment rules downstream, never rejected here.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  friend bool operator==(const Box&, const Box&) = default;
};

/// 2-D affine map (px, py) -> (a*px + b*py + tx, c*px + d*py + ty).
struct Affine2D {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
  double d = 1.0;
  double tx = 0.0;
  double ty = 0.0;

  std::pair<double, double> apply(double px, double py) const {
    return {a * px + b * py + tx, c * px + d * py + ty};
  }

  static Affine2D identity() { return {}; }
  static Affine2D translation(double dx, double dy);
  static Affine2D scaling(double sx, double sy);
  // Positive angles rotate counterclockwise in the raw coordinate frame
  // (visually clockwise when y points down). Multiples of 90 degrees use
  // exact {0, +-1} coefficients.
  static Affine2D rotation_deg(double degrees, double cx, double cy);
  static Affine2D hflip(double width);
  static Affine2D vflip(double height);

  friend bool operator==(const Affine2D&, const Affine2D&) = default;
};

/// t1 first, then t2.
Affine2D compose(const Affine2D& t2, const Affine2D& t1);

std::pair<double, double> center(const Box& box);

/// Transforms all four corners and returns their axis-aligned hull. The hull
/// may extend outside the image plane; out-of-border handling is the prompt
/// layer's job.
Box apply_affine(const Affine2D& t, const Box& box);

/// Even n-by-n partition of a width-by-height image plane. Block indices are
/// row-major, 0 at the top-left, n*n-1 at the bottom-right.
class BlockGrid {
 public:
  BlockGrid(int n, double width, double height);

  int n() const noexcept { return n_; }
  double width() const noexcept { return width_; }
  double height() const noexcept { return height_; }
  int block_count() const noexcept { return n_ * n_; }

  std::vector<double> column_edges() const;
  std::vector<double> row_edges() const;

  /// Block containing (px, py), or nullopt when the point lies strictly
  /// outside [0,width]x[0,height]. Interior edges belong to the higher-index
  /// side; the far right/bottom edges clamp inward to the last column/row.
  /// Placement against the rational edges i*extent/n is exact.
  std::optional<int> block_of_point(double px, double py) const;

 private:
  int n_;
  double width_;
  double height_;
};

}  // namespace gridprompt
