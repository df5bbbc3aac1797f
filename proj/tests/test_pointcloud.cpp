#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "pjem/dataset.hpp"
#include "pjem/pointcloud.hpp"
#include "pjem/rng.hpp"

using namespace pjem;
namespace fs = std::filesystem;

namespace {

AugmentationConfig null_augmentation() {
  AugmentationConfig cfg;
  cfg.rotation_max_angle = 0.0;
  cfg.translation = 0.0;
  cfg.scale_min = 1.0;
  cfg.scale_max = 1.0;
  cfg.jitter_sigma = 0.0;
  cfg.jitter_clip = 0.0;
  cfg.cutout_enable = false;
  return cfg;
}

fs::path temp_dir(const char* tag) {
  fs::path dir = fs::temp_directory_path() / (std::string("pjem_test_") + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("sphere samples sit on the unit sphere") {
  PointCloud cloud = generate_primitive(ShapeKind::kSphere, 64, 3);
  for (int i = 0; i < cloud.point_count(); ++i) {
    CHECK(std::abs(cloud.points.row(i).norm() - 1.0) <= 1e-9);
  }
}

TEST_CASE("generation is deterministic in (kind, n, seed)") {
  PointCloud a = generate_primitive(ShapeKind::kTorus, 32, 9);
  PointCloud b = generate_primitive(ShapeKind::kTorus, 32, 9);
  CHECK(a.points == b.points);
  PointCloud c = generate_primitive(ShapeKind::kTorus, 32, 10);
  CHECK((a.points - c.points).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("plane samples keep one coordinate constant in the canonical frame") {
  PointCloud cloud = generate_primitive(ShapeKind::kPlane, 48, 21);
  CHECK(cloud.points.col(2).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("every shape class generates inside the unit sphere") {
  for (int k = 0; k < kShapeClassCount; ++k) {
    PointCloud cloud = generate_primitive(shape_from_index(k), 128, 77);
    CHECK(cloud.label == k);
    double max_norm = cloud.points.rowwise().norm().maxCoeff();
    CHECK(max_norm <= 1.0 + 1e-9);
    CHECK(max_norm >= 1.0 - 1e-9);  // the farthest point touches the sphere
    CHECK(cloud.points.allFinite());
  }
}

TEST_CASE("unknown shape index is rejected") {
  CHECK_THROWS_AS(shape_from_index(8), std::invalid_argument);
  CHECK_THROWS_AS(shape_from_index(-1), std::invalid_argument);
}

TEST_CASE("generate_primitive requires at least 8 points") {
  CHECK_THROWS_AS(generate_primitive(ShapeKind::kCube, 7, 1), std::invalid_argument);
}

TEST_CASE("normalization centers, scales and is idempotent") {
  PointCloud cloud = generate_primitive(ShapeKind::kCone, 64, 5);
  cloud.points *= 3.25;
  PointCloud n1 = normalize_unit_sphere(cloud);
  CHECK(n1.points.colwise().mean().norm() <= 1e-9);
  CHECK(std::abs(n1.points.rowwise().norm().maxCoeff() - 1.0) <= 1e-9);
  PointCloud n2 = normalize_unit_sphere(n1);
  CHECK((n1.points - n2.points).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("normalization is invariant to translation") {
  PointCloud cloud = generate_primitive(ShapeKind::kCylinder, 64, 6);
  PointCloud shifted = cloud;
  shifted.points.rowwise() += Eigen::RowVector3d(5.0, 5.0, 5.0);
  PointCloud a = normalize_unit_sphere(cloud);
  PointCloud b = normalize_unit_sphere(shifted);
  CHECK((a.points - b.points).cwiseAbs().maxCoeff() <= 1e-9);
}

TEST_CASE("a single repeated point normalizes to the origin") {
  PointCloud cloud;
  cloud.points = Matrix::Zero(5, 3);
  cloud.points.rowwise() += Eigen::RowVector3d(0.4, -0.2, 1.0);
  PointCloud n = normalize_unit_sphere(cloud);
  CHECK(n.points.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("null augmentation is the identity") {
  PointCloud cloud = normalize_unit_sphere(generate_primitive(ShapeKind::kCube, 64, 1));
  PointCloud view = augment_view(cloud, null_augmentation(), 42);
  CHECK((view.points - cloud.points).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("distinct seeds give distinct views, same seed gives identical views") {
  PointCloud cloud = normalize_unit_sphere(generate_primitive(ShapeKind::kSphere, 64, 2));
  AugmentationConfig cfg;
  PointCloud v1 = augment_view(cloud, cfg, 100);
  PointCloud v2 = augment_view(cloud, cfg, 101);
  PointCloud v3 = augment_view(cloud, cfg, 100);
  CHECK((v1.points - v2.points).cwiseAbs().maxCoeff() > 0.0);
  CHECK(v1.points == v3.points);
}

TEST_CASE("full-3d rotation mode also augments deterministically") {
  PointCloud cloud = normalize_unit_sphere(generate_primitive(ShapeKind::kTetrahedron, 64, 4));
  AugmentationConfig cfg;
  cfg.rotation_mode = AugmentationConfig::RotationMode::kFull3d;
  PointCloud v1 = augment_view(cloud, cfg, 7);
  PointCloud v2 = augment_view(cloud, cfg, 7);
  CHECK(v1.points == v2.points);
  CHECK(v1.points.allFinite());
}

TEST_CASE("cutout preserves cardinality and draws only from survivors") {
  PointCloud cloud = normalize_unit_sphere(generate_primitive(ShapeKind::kSphere, 128, 8));
  AugmentationConfig cfg = null_augmentation();
  cfg.cutout_enable = true;
  cfg.cutout_radius = 1.0;  // swallows roughly half the unit sphere
  PointCloud view = augment_view(cloud, cfg, 55);
  REQUIRE(view.point_count() == cloud.point_count());

  // Reproduce the ball: with null geometry augmentation the pre-cutout points
  // equal the input, so survivors are computable from the output itself.
  std::set<std::pair<double, double>> original;
  for (int i = 0; i < cloud.point_count(); ++i) original.insert({cloud.points(i, 0), cloud.points(i, 1)});
  int inside_any_original = 0;
  for (int i = 0; i < view.point_count(); ++i) {
    if (original.count({view.points(i, 0), view.points(i, 1)}) > 0) ++inside_any_original;
  }
  CHECK(inside_any_original == view.point_count());  // resampled points are copies of inputs
}

TEST_CASE("cutout that removes everything is skipped") {
  PointCloud cloud;
  cloud.points = Matrix::Zero(16, 3);  // all points coincide; any ball removes all
  AugmentationConfig cfg = null_augmentation();
  cfg.cutout_enable = true;
  cfg.cutout_radius = 0.5;
  PointCloud view = augment_view(cloud, cfg, 3);
  CHECK(view.points == cloud.points);
}

TEST_CASE("invalid augmentation configs are rejected") {
  AugmentationConfig cfg;
  cfg.scale_min = 1.5;
  cfg.scale_max = 0.5;
  PointCloud cloud = generate_primitive(ShapeKind::kSphere, 16, 1);
  CHECK_THROWS_AS(augment_view(cloud, cfg, 1), std::invalid_argument);
  AugmentationConfig cfg2;
  cfg2.jitter_sigma = -0.1;
  CHECK_THROWS_AS(augment_view(cloud, cfg2, 1), std::invalid_argument);
}

TEST_CASE("points file round-trips exactly") {
  fs::path dir = temp_dir("points_io");
  PointCloud cloud = generate_primitive(ShapeKind::kEllipsoid, 32, 12);
  write_points_file(dir / "cloud.txt", cloud.points);
  Matrix back = read_points_file(dir / "cloud.txt");
  CHECK(back == cloud.points);
}

TEST_CASE("points file reader skips comments and rejects bad lines") {
  fs::path dir = temp_dir("points_parse");
  {
    std::ofstream out(dir / "ok.txt");
    out << "# header comment\n0.5 0.25 -1\n# mid comment\n1 2 3\n";
  }
  Matrix pts = read_points_file(dir / "ok.txt");
  CHECK(pts.rows() == 2);
  CHECK(pts(0, 2) == -1.0);
  {
    std::ofstream out(dir / "bad.txt");
    out << "1 2\n";
  }
  CHECK_THROWS(read_points_file(dir / "bad.txt"));
}

TEST_CASE("synthetic dataset writes balanced classes and a stratified split") {
  fs::path dir = temp_dir("dataset_gen");
  SyntheticSpec spec;
  spec.classes = 4;
  spec.per_class = 10;
  spec.points_per_cloud = 32;
  spec.seed = 7;
  write_synthetic_dataset(spec, dir);

  DatasetManifest all = load_manifest(dir / "manifest.json");
  CHECK(all.class_names.size() == 4);
  CHECK(all.items.size() == 40);
  std::vector<int> counts(4, 0);
  for (const ManifestItem& item : all.items) counts[static_cast<std::size_t>(item.label)]++;
  for (int c : counts) CHECK(c == 10);

  DatasetManifest train = load_manifest(dir / "manifest.train.json");
  DatasetManifest test = load_manifest(dir / "manifest.test.json");
  CHECK(train.items.size() == 32);
  CHECK(test.items.size() == 8);
  std::vector<int> train_counts(4, 0), test_counts(4, 0);
  for (const ManifestItem& item : train.items) train_counts[static_cast<std::size_t>(item.label)]++;
  for (const ManifestItem& item : test.items) test_counts[static_cast<std::size_t>(item.label)]++;
  for (int c : train_counts) CHECK(c == 8);
  for (int c : test_counts) CHECK(c == 2);

  Dataset loaded = load_dataset(dir / "manifest.train.json");
  CHECK(loaded.size() == 32);
  CHECK(loaded.clouds[0].point_count() == 32);
  // ingestion normalizes
  CHECK(loaded.clouds[0].points.colwise().mean().norm() <= 1e-9);
}

TEST_CASE("dataset generation is byte-deterministic") {
  fs::path dir1 = temp_dir("dataset_det1");
  SyntheticSpec spec;
  spec.classes = 2;
  spec.per_class = 3;
  spec.points_per_cloud = 16;
  spec.seed = 11;
  write_synthetic_dataset(spec, dir1);
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  };
  std::string first = slurp(dir1 / "manifest.json") + slurp(dir1 / "points/sphere_0000.txt");
  fs::remove_all(dir1);
  write_synthetic_dataset(spec, dir1);
  std::string second = slurp(dir1 / "manifest.json") + slurp(dir1 / "points/sphere_0000.txt");
  CHECK(first == second);
}

TEST_CASE("manifest validation rejects bad labels and missing files") {
  fs::path dir = temp_dir("manifest_bad");
  {
    std::ofstream out(dir / "manifest.json");
    out << R"({"version":1,"classes":["a"],"items":[{"path":"missing.txt","label":0}]})";
  }
  CHECK_THROWS(load_manifest(dir / "manifest.json"));
  write_points_file(dir / "cloud.txt", Matrix::Zero(8, 3));
  {
    std::ofstream out(dir / "manifest.json");
    out << R"({"version":1,"classes":["a"],"items":[{"path":"cloud.txt","label":3}]})";
  }
  CHECK_THROWS(load_manifest(dir / "manifest.json"));
}
