#include "pjem/pointcloud.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "pjem/rng.hpp"

namespace pjem {

namespace {

constexpr double kPi = std::numbers::pi;

Eigen::RowVector3d unit_direction(Rng& rng) {
  double z = rng.uniform(-1.0, 1.0);
  double phi = rng.uniform(0.0, 2.0 * kPi);
  double r = std::sqrt(std::max(0.0, 1.0 - z * z));
  return {r * std::cos(phi), r * std::sin(phi), z};
}

Eigen::RowVector3d sample_sphere(Rng& rng) { return unit_direction(rng); }

Eigen::RowVector3d sample_cube(Rng& rng) {
  // Six equal-area faces of [-1,1]^3.
  int face = static_cast<int>(rng.below(6));
  double u = rng.uniform(-1.0, 1.0);
  double v = rng.uniform(-1.0, 1.0);
  double s = face % 2 == 0 ? 1.0 : -1.0;
  switch (face / 2) {
    case 0: return {s, u, v};
    case 1: return {u, s, v};
    default: return {u, v, s};
  }
}

Eigen::RowVector3d sample_cylinder(Rng& rng) {
  // Radius 0.5, z in [-1, 1]; lateral surface and both caps weighted by area.
  const double radius = 0.5;
  const double lateral = 2.0 * kPi * radius * 2.0;
  const double caps = 2.0 * kPi * radius * radius;
  double pick = rng.uniform(0.0, lateral + caps);
  double phi = rng.uniform(0.0, 2.0 * kPi);
  if (pick < lateral) {
    double z = rng.uniform(-1.0, 1.0);
    return {radius * std::cos(phi), radius * std::sin(phi), z};
  }
  double r = radius * std::sqrt(rng.uniform());
  double z = pick < lateral + caps / 2.0 ? 1.0 : -1.0;
  return {r * std::cos(phi), r * std::sin(phi), z};
}

Eigen::RowVector3d sample_cone(Rng& rng) {
  // Apex up; base radius 0.6, height 1.5, centered on the z midpoint.
  const double radius = 0.6;
  const double height = 1.5;
  const double slant = std::sqrt(radius * radius + height * height);
  const double lateral = kPi * radius * slant;
  const double base = kPi * radius * radius;
  double pick = rng.uniform(0.0, lateral + base);
  double phi = rng.uniform(0.0, 2.0 * kPi);
  if (pick < lateral) {
    double t = std::sqrt(rng.uniform());  // fraction of the way from apex to rim
    return {t * radius * std::cos(phi), t * radius * std::sin(phi), height / 2.0 - t * height};
  }
  double r = radius * std::sqrt(rng.uniform());
  return {r * std::cos(phi), r * std::sin(phi), -height / 2.0};
}

Eigen::RowVector3d sample_torus(Rng& rng) {
  // Major radius 0.7, minor 0.25, axis z; minor angle corrected by rejection.
  const double major = 0.7;
  const double minor = 0.25;
  double theta = rng.uniform(0.0, 2.0 * kPi);
  double psi;
  for (;;) {
    psi = rng.uniform(0.0, 2.0 * kPi);
    double accept = (major + minor * std::cos(psi)) / (major + minor);
    if (rng.uniform() < accept) break;
  }
  double ring = major + minor * std::cos(psi);
  return {ring * std::cos(theta), ring * std::sin(theta), minor * std::sin(psi)};
}

Eigen::RowVector3d sample_plane(Rng& rng) {
  return {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), 0.0};
}

Eigen::RowVector3d sample_tetrahedron(Rng& rng) {
  static const Eigen::RowVector3d verts[4] = {
      {1.0, 1.0, 1.0}, {1.0, -1.0, -1.0}, {-1.0, 1.0, -1.0}, {-1.0, -1.0, 1.0}};
  static const int faces[4][3] = {{0, 1, 2}, {0, 1, 3}, {0, 2, 3}, {1, 2, 3}};
  const int* f = faces[rng.below(4)];
  double u = std::sqrt(rng.uniform());
  double v = rng.uniform();
  return (1.0 - u) * verts[f[0]] + u * (1.0 - v) * verts[f[1]] + u * v * verts[f[2]];
}

Eigen::RowVector3d sample_ellipsoid(Rng& rng) {
  // Semi-axes (1, 0.65, 0.45); area-uniform via rejection on the local
  // surface element.
  const double a = 1.0, b = 0.65, c = 0.45;
  const double g_max = a * b;  // largest of bc, ac, ab
  for (;;) {
    Eigen::RowVector3d d = unit_direction(rng);
    double g = std::sqrt(std::pow(d.x() * b * c, 2) + std::pow(d.y() * a * c, 2) + std::pow(d.z() * a * b, 2));
    if (rng.uniform() < g / g_max) return {a * d.x(), b * d.y(), c * d.z()};
  }
}

Matrix rotation_z(double angle) {
  double cs = std::cos(angle);
  double sn = std::sin(angle);
  Matrix r(3, 3);
  r << cs, -sn, 0.0, sn, cs, 0.0, 0.0, 0.0, 1.0;
  return r;
}

Matrix rotation_axis_angle(const Eigen::RowVector3d& axis, double angle) {
  double cs = std::cos(angle);
  double sn = std::sin(angle);
  Matrix k(3, 3);
  k << 0.0, -axis.z(), axis.y(), axis.z(), 0.0, -axis.x(), -axis.y(), axis.x(), 0.0;
  return Matrix(Matrix::Identity(3, 3)) + sn * k + (1.0 - cs) * Matrix(k * k);
}

}  // namespace

const char* shape_name(ShapeKind kind) {
  switch (kind) {
    case ShapeKind::kSphere: return "sphere";
    case ShapeKind::kCube: return "cube";
    case ShapeKind::kCylinder: return "cylinder";
    case ShapeKind::kCone: return "cone";
    case ShapeKind::kTorus: return "torus";
    case ShapeKind::kPlane: return "plane";
    case ShapeKind::kTetrahedron: return "tetrahedron";
    case ShapeKind::kEllipsoid: return "ellipsoid";
  }
  return "?";
}

ShapeKind shape_from_index(int index) {
  if (index < 0 || index >= kShapeClassCount) {
    throw std::invalid_argument("shape_from_index: unknown shape class " + std::to_string(index));
  }
  return static_cast<ShapeKind>(index);
}

PointCloud generate_primitive(ShapeKind kind, int n_points, std::uint64_t seed) {
  if (n_points < 8) throw std::invalid_argument("generate_primitive: need at least 8 points");
  Rng rng(mix_seed(mix_seed(seed, static_cast<std::uint64_t>(kind)), static_cast<std::uint64_t>(n_points)));

  PointCloud cloud;
  cloud.points.resize(n_points, 3);
  cloud.label = static_cast<int>(kind);
  for (int i = 0; i < n_points; ++i) {
    Eigen::RowVector3d p;
    switch (kind) {
      case ShapeKind::kSphere: p = sample_sphere(rng); break;
      case ShapeKind::kCube: p = sample_cube(rng); break;
      case ShapeKind::kCylinder: p = sample_cylinder(rng); break;
      case ShapeKind::kCone: p = sample_cone(rng); break;
      case ShapeKind::kTorus: p = sample_torus(rng); break;
      case ShapeKind::kPlane: p = sample_plane(rng); break;
      case ShapeKind::kTetrahedron: p = sample_tetrahedron(rng); break;
      case ShapeKind::kEllipsoid: p = sample_ellipsoid(rng); break;
    }
    cloud.points.row(i) = p;
  }
  // Scale the canonical frame so the farthest point touches the unit sphere.
  double max_norm = cloud.points.rowwise().norm().maxCoeff();
  if (max_norm > 0.0) cloud.points /= max_norm;
  return cloud;
}

PointCloud normalize_unit_sphere(const PointCloud& cloud) {
  if (cloud.point_count() < 1) throw std::invalid_argument("normalize_unit_sphere: empty cloud");
  PointCloud out = cloud;
  Eigen::RowVector3d centroid = out.points.colwise().mean();
  out.points.rowwise() -= centroid;
  double max_norm = out.points.rowwise().norm().maxCoeff();
  if (max_norm > 0.0) {
    out.points /= max_norm;
  } else {
    out.points.setZero();  // all points coincide
  }
  return out;
}

void AugmentationConfig::validate() const {
  if (rotation_max_angle < 0.0) throw std::invalid_argument("augmentation: rotation_max_angle must be >= 0");
  if (translation < 0.0) throw std::invalid_argument("augmentation: translation must be >= 0");
  if (scale_min > scale_max) throw std::invalid_argument("augmentation: scale_min must be <= scale_max");
  if (scale_min <= 0.0) throw std::invalid_argument("augmentation: scale_min must be positive");
  if (jitter_sigma < 0.0) throw std::invalid_argument("augmentation: jitter_sigma must be >= 0");
  if (jitter_clip < 0.0) throw std::invalid_argument("augmentation: jitter_clip must be >= 0");
  if (cutout_radius < 0.0) throw std::invalid_argument("augmentation: cutout_radius must be >= 0");
}

PointCloud rotated_z(const PointCloud& cloud, double angle) {
  PointCloud out = cloud;
  out.points = out.points * rotation_z(angle).transpose();
  return out;
}

PointCloud augment_view(const PointCloud& cloud, const AugmentationConfig& config, std::uint64_t seed) {
  config.validate();
  Rng rng(seed);
  PointCloud out = cloud;
  const int n = out.point_count();

  // rotation
  Matrix rot(3, 3);
  if (config.rotation_mode == AugmentationConfig::RotationMode::kZAxis) {
    rot = rotation_z(rng.uniform(0.0, config.rotation_max_angle));
  } else {
    Eigen::RowVector3d axis = unit_direction(rng);
    rot = rotation_axis_angle(axis, rng.uniform(0.0, config.rotation_max_angle));
  }
  out.points = out.points * rot.transpose();

  // scale
  double scale = rng.uniform(config.scale_min, config.scale_max);
  out.points *= scale;

  // translation
  Eigen::RowVector3d shift(rng.uniform(-config.translation, config.translation),
                           rng.uniform(-config.translation, config.translation),
                           rng.uniform(-config.translation, config.translation));
  out.points.rowwise() += shift;

  // jitter
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < 3; ++j) {
      double noise = rng.normal(0.0, config.jitter_sigma);
      noise = std::min(std::max(noise, -config.jitter_clip), config.jitter_clip);
      out.points(i, j) += noise;
    }
  }

  // cutout: drop a random ball, refill from survivors with replacement
  if (config.cutout_enable) {
    Eigen::RowVector3d center = out.points.row(static_cast<int>(rng.below(static_cast<std::uint32_t>(n))));
    std::vector<int> survivors;
    survivors.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      if ((out.points.row(i) - center).norm() >= config.cutout_radius) survivors.push_back(i);
    }
    if (!survivors.empty() && static_cast<int>(survivors.size()) < n) {
      Matrix rebuilt(n, 3);
      int at = 0;
      for (int idx : survivors) rebuilt.row(at++) = out.points.row(idx);
      for (; at < n; ++at) {
        int idx = survivors[rng.below(static_cast<std::uint32_t>(survivors.size()))];
        rebuilt.row(at) = out.points.row(idx);
      }
      out.points = std::move(rebuilt);
    }
  }
  return out;
}

}  // namespace pjem
