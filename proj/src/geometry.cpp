// SPDX-License-Identifier: Apache-2.0
#include "gridprompt/geometry.hpp"

#include <algorithm>
#include <cmath>

#include "gridprompt/errors.hpp"

namespace gridprompt {

namespace {

constexpr double kPi = 3.141592653589793238462643383279502884;

// Sign of a*b - c*d, exact for finite doubles (error-free transformation of
// both products; fma recovers the rounding term).
int exact_mul_compare(double a, double b, double c, double d) {
  const double p1 = a * b;
  const double e1 = std::fma(a, b, -p1);
  const double p2 = c * d;
  const double e2 = std::fma(c, d, -p2);
  if (p1 != p2) return p1 < p2 ? -1 : 1;
  if (e1 != e2) return e1 < e2 ? -1 : 1;
  return 0;
}

}  // namespace

Affine2D Affine2D::translation(double dx, double dy) {
  return {1.0, 0.0, 0.0, 1.0, dx, dy};
}

Affine2D Affine2D::scaling(double sx, double sy) {
  return {sx, 0.0, 0.0, sy, 0.0, 0.0};
}

Affine2D Affine2D::rotation_deg(double degrees, double cx, double cy) {
  double cosv;
  double sinv;
  const double turns = std::fmod(degrees, 360.0);
  if (turns == 0.0) {
    cosv = 1.0;
    sinv = 0.0;
  } else if (turns == 90.0 || turns == -270.0) {
    cosv = 0.0;
    sinv = 1.0;
  } else if (turns == 180.0 || turns == -180.0) {
    cosv = -1.0;
    sinv = 0.0;
  } else if (turns == 270.0 || turns == -90.0) {
    cosv = 0.0;
    sinv = -1.0;
  } else {
    const double rad = degrees * kPi / 180.0;
    cosv = std::cos(rad);
    sinv = std::sin(rad);
  }
  // Rotate about (cx, cy): translate to origin, rotate, translate back.
  Affine2D t;
  t.a = cosv;
  t.b = -sinv;
  t.c = sinv;
  t.d = cosv;
  t.tx = cx - (cosv * cx - sinv * cy);
  t.ty = cy - (sinv * cx + cosv * cy);
  return t;
}

Affine2D Affine2D::hflip(double width) {
  return {-1.0, 0.0, 0.0, 1.0, width, 0.0};
}

Affine2D Affine2D::vflip(double height) {
  return {1.0, 0.0, 0.0, -1.0, 0.0, height};
}

Affine2D compose(const Affine2D& t2, const Affine2D& t1) {
  Affine2D r;
  r.a = t2.a * t1.a + t2.b * t1.c;
  r.b = t2.a * t1.b + t2.b * t1.d;
  r.c = t2.c * t1.a + t2.d * t1.c;
  r.d = t2.c * t1.b + t2.d * t1.d;
  r.tx = t2.a * t1.tx + t2.b * t1.ty + t2.tx;
  r.ty = t2.c * t1.tx + t2.d * t1.ty + t2.ty;
  return r;
}

std::pair<double, double> center(const Box& box) {
  return {box.x + box.w / 2.0, box.y + box.h / 2.0};
}

Box apply_affine(const Affine2D& t, const Box& box) {
  if (t == Affine2D::identity()) {
    return box;  // exact; the corner walk would re-round x+w
  }
  const std::pair<double, double> corners[4] = {
      t.apply(box.x, box.y),
      t.apply(box.x + box.w, box.y),
      t.apply(box.x, box.y + box.h),
      t.apply(box.x + box.w, box.y + box.h),
  };
  double min_x = corners[0].first;
  double max_x = corners[0].first;
  double min_y = corners[0].second;
  double max_y = corners[0].second;
  for (int i = 1; i < 4; ++i) {
    min_x = std::min(min_x, corners[i].first);
    max_x = std::max(max_x, corners[i].first);
    min_y = std::min(min_y, corners[i].second);
    max_y = std::max(max_y, corners[i].second);
  }
  return {min_x, min_y, max_x - min_x, max_y - min_y};
}

BlockGrid::BlockGrid(int n, double width, double height)
    : n_(n), width_(width), height_(height) {
  if (n < 1) {
    throw Error(ErrorKind::Config, "grid side must be >= 1");
  }
  if (!(width > 0.0) || !(height > 0.0) || !std::isfinite(width) || !std::isfinite(height)) {
    throw Error(ErrorKind::Geometry, "grid extents must be positive finite");
  }
}

std::vector<double> BlockGrid::column_edges() const {
  std::vector<double> edges(static_cast<std::size_t>(n_) + 1);
  for (int i = 0; i <= n_; ++i) {
    edges[static_cast<std::size_t>(i)] = static_cast<double>(i) * width_ / n_;
  }
  return edges;
}

std::vector<double> BlockGrid::row_edges() const {
  std::vector<double> edges(static_cast<std::size_t>(n_) + 1);
  for (int i = 0; i <= n_; ++i) {
    edges[static_cast<std::size_t>(i)] = static_cast<double>(i) * height_ / n_;
  }
  return edges;
}

std::optional<int> BlockGrid::block_of_point(double px, double py) const {
  if (!(px >= 0.0 && px <= width_ && py >= 0.0 && py <= height_)) {
    return std::nullopt;  // also rejects NaN
  }
  const auto cell = [this](double p, double extent) {
    int i = static_cast<int>(std::floor(p * n_ / extent));
    i = std::clamp(i, 0, n_ - 1);
    // The double floor above can be off by one ulp near an edge; settle the
    // placement with exact comparisons of p*n against i*extent.
    while (i + 1 <= n_ - 1 &&
           exact_mul_compare(p, static_cast<double>(n_), static_cast<double>(i + 1), extent) >= 0) {
      ++i;
    }
    while (i > 0 &&
           exact_mul_compare(p, static_cast<double>(n_), static_cast<double>(i), extent) < 0) {
      --i;
    }
    return i;
  };
  return cell(py, height_) * n_ + cell(px, width_);
}

}  // namespace gridprompt
