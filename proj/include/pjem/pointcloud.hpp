#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pjem/common.hpp"

namespace pjem {

// A fixed-size set of 3-D points in normalized space, optionally labelled.
struct PointCloud {
  Matrix points;   // P x 3
  int label = -1;  // class index, -1 when unlabelled

  int point_count() const { return static_cast<int>(points.rows()); }
};

// The eight procedural surface classes, in label order.
enum class ShapeKind {
  kSphere,
  kCube,
  kCylinder,
  kCone,
  kTorus,
  kPlane,
  kTetrahedron,
  kEllipsoid,
};
inline constexpr int kShapeClassCount = 8;

const char* shape_name(ShapeKind kind);
ShapeKind shape_from_index(int index);  // throws on unknown index

// Uniform surface sample of the shape in its canonical frame, scaled so the
// farthest point sits on the unit sphere. Deterministic in (kind, n, seed).
PointCloud generate_primitive(ShapeKind kind, int n_points, std::uint64_t seed);

// Centroid to the origin, then scale so the max norm is 1. A cloud whose
// points all coincide collapses to the origin.
PointCloud normalize_unit_sphere(const PointCloud& cloud);

struct AugmentationConfig {
  enum class RotationMode { kZAxis, kFull3d };
  RotationMode rotation_mode = RotationMode::kZAxis;
  double rotation_max_angle = 6.283185307179586;  // radians; 0 disables rotation
  double translation = 0.2;                       // per-axis half-width
  double scale_min = 0.8;
  double scale_max = 1.25;
  double jitter_sigma = 0.01;
  double jitter_clip = 0.05;
  double cutout_radius = 0.3;
  bool cutout_enable = true;

  void validate() const;  // throws std::invalid_argument
};

// One stochastic view: rotation, scale, translation, jitter, then optional
// cutout (points inside a random ball are dropped and the cloud is refilled
// by resampling survivors with replacement). Pure in (cloud, config, seed).
// The draw is skipped if the ball would swallow every point. The output is
// intentionally not re-normalized.
PointCloud augment_view(const PointCloud& cloud, const AugmentationConfig& config, std::uint64_t seed);

PointCloud rotated_z(const PointCloud& cloud, double angle);

}  // namespace pjem
