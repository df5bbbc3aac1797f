#include "pjem/dataset.hpp"

#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "pjem/rng.hpp"

namespace pjem {

namespace fs = std::filesystem;
using nlohmann::json;

void write_points_file(const fs::path& path, const Matrix& points) {
  if (points.cols() != 3) throw std::invalid_argument("write_points_file: points must be P x 3");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_points_file: cannot open " + path.string());
  char line[128];
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    std::snprintf(line, sizeof(line), "%.17g %.17g %.17g\n", points(i, 0), points(i, 1), points(i, 2));
    out << line;
  }
  if (!out) throw std::runtime_error("write_points_file: write failed for " + path.string());
}

Matrix read_points_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_points_file: cannot open " + path.string());
  std::vector<double> coords;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::istringstream fields(line);
    double x, y, z;
    if (!(fields >> x >> y >> z)) {
      throw std::runtime_error("read_points_file: bad line " + std::to_string(line_no) + " in " + path.string());
    }
    std::string extra;
    if (fields >> extra) {
      throw std::runtime_error("read_points_file: trailing data on line " + std::to_string(line_no) + " in " +
                               path.string());
    }
    coords.push_back(x);
    coords.push_back(y);
    coords.push_back(z);
  }
  if (coords.empty()) throw std::runtime_error("read_points_file: no points in " + path.string());
  Matrix points(static_cast<Eigen::Index>(coords.size() / 3), 3);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    points(i, 0) = coords[static_cast<std::size_t>(3 * i)];
    points(i, 1) = coords[static_cast<std::size_t>(3 * i + 1)];
    points(i, 2) = coords[static_cast<std::size_t>(3 * i + 2)];
  }
  return points;
}

void save_manifest(const DatasetManifest& manifest, const fs::path& path) {
  json doc;
  doc["version"] = manifest.version;
  doc["classes"] = manifest.class_names;
  json items = json::array();
  for (const ManifestItem& item : manifest.items) {
    items.push_back({{"path", item.path}, {"label", item.label}});
  }
  doc["items"] = std::move(items);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_manifest: cannot open " + path.string());
  out << doc.dump(2) << '\n';
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_manifest: cannot open " + path.string());
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw std::runtime_error("load_manifest: " + path.string() + ": " + e.what());
  }
  DatasetManifest manifest;
  try {
    manifest.version = doc.at("version").get<int>();
    manifest.class_names = doc.at("classes").get<std::vector<std::string>>();
    for (const json& item : doc.at("items")) {
      manifest.items.push_back({item.at("path").get<std::string>(), item.at("label").get<int>()});
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("load_manifest: " + path.string() + ": " + e.what());
  }
  const int classes = static_cast<int>(manifest.class_names.size());
  const fs::path base = path.parent_path();
  for (const ManifestItem& item : manifest.items) {
    if (item.label < 0 || item.label >= classes) {
      throw std::runtime_error("load_manifest: label " + std::to_string(item.label) + " out of range for " +
                               item.path);
    }
    if (!fs::exists(base / item.path)) {
      throw std::runtime_error("load_manifest: missing points file " + (base / item.path).string());
    }
  }
  return manifest;
}

Dataset load_dataset(const fs::path& manifest_path, bool normalize) {
  DatasetManifest manifest = load_manifest(manifest_path);
  Dataset out;
  out.class_names = manifest.class_names;
  out.clouds.reserve(manifest.items.size());
  const fs::path base = manifest_path.parent_path();
  int points_per_cloud = -1;
  for (const ManifestItem& item : manifest.items) {
    PointCloud cloud;
    cloud.points = read_points_file(base / item.path);
    cloud.label = item.label;
    if (points_per_cloud < 0) points_per_cloud = cloud.point_count();
    if (cloud.point_count() != points_per_cloud) {
      throw std::runtime_error("load_dataset: " + item.path + " has " + std::to_string(cloud.point_count()) +
                               " points, expected " + std::to_string(points_per_cloud));
    }
    out.clouds.push_back(normalize ? normalize_unit_sphere(cloud) : std::move(cloud));
  }
  return out;
}

std::vector<PointCloud> build_synthetic_clouds(const SyntheticSpec& spec) {
  if (spec.classes < 1 || spec.classes > kShapeClassCount) {
    throw std::invalid_argument("synthetic dataset: classes must be in [1, " + std::to_string(kShapeClassCount) +
                                "]");
  }
  if (spec.per_class < 1) throw std::invalid_argument("synthetic dataset: per_class must be >= 1");
  std::vector<PointCloud> clouds;
  clouds.reserve(static_cast<std::size_t>(spec.classes * spec.per_class));
  for (int label = 0; label < spec.classes; ++label) {
    for (int idx = 0; idx < spec.per_class; ++idx) {
      std::uint64_t sample_seed = mix_seed(mix_seed(spec.seed, static_cast<std::uint64_t>(label)),
                                           static_cast<std::uint64_t>(idx));
      PointCloud cloud = generate_primitive(shape_from_index(label), spec.points_per_cloud, sample_seed);
      // Random heading so samples of one class do not share a pose.
      Rng pose(mix_seed(sample_seed, 0x705Eull));
      cloud = rotated_z(cloud, pose.uniform(0.0, 2.0 * std::numbers::pi));
      clouds.push_back(std::move(cloud));
    }
  }
  return clouds;
}

void write_synthetic_dataset(const SyntheticSpec& spec, const fs::path& out_dir) {
  std::vector<PointCloud> clouds = build_synthetic_clouds(spec);
  fs::create_directories(out_dir / "points");

  DatasetManifest all, train, test;
  for (DatasetManifest* m : {&all, &train, &test}) {
    m->version = 1;
    for (int label = 0; label < spec.classes; ++label) {
      m->class_names.push_back(shape_name(shape_from_index(label)));
    }
  }

  char name[128];
  for (int label = 0; label < spec.classes; ++label) {
    for (int idx = 0; idx < spec.per_class; ++idx) {
      const PointCloud& cloud = clouds[static_cast<std::size_t>(label * spec.per_class + idx)];
      std::snprintf(name, sizeof(name), "points/%s_%04d.txt", shape_name(shape_from_index(label)), idx);
      write_points_file(out_dir / name, cloud.points);
      all.items.push_back({name, label});
    }
  }

  // Per-class 80/20 split; both sides keep at least one sample when possible.
  for (int label = 0; label < spec.classes; ++label) {
    Rng rng(mix_seed(mix_seed(spec.seed, 0x5917ull), static_cast<std::uint64_t>(label)));
    std::vector<int> order = rng.permutation(spec.per_class);
    int train_count = spec.per_class * 8 / 10;
    if (spec.per_class >= 2) {
      train_count = std::max(1, std::min(spec.per_class - 1, train_count));
    } else {
      train_count = spec.per_class;
    }
    std::vector<bool> in_train(static_cast<std::size_t>(spec.per_class), false);
    for (int i = 0; i < train_count; ++i) in_train[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])] = true;
    for (int idx = 0; idx < spec.per_class; ++idx) {
      const ManifestItem& item = all.items[static_cast<std::size_t>(label * spec.per_class + idx)];
      (in_train[static_cast<std::size_t>(idx)] ? train : test).items.push_back(item);
    }
  }

  save_manifest(all, out_dir / "manifest.json");
  save_manifest(train, out_dir / "manifest.train.json");
  save_manifest(test, out_dir / "manifest.test.json");
}

}  // namespace pjem
