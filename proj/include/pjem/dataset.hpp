#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pjem/pointcloud.hpp"

namespace pjem {

struct ManifestItem {
  std::string path;  // relative to the manifest's directory
  int label = 0;
};

struct DatasetManifest {
  int version = 1;
  std::vector<std::string> class_names;
  std::vector<ManifestItem> items;
};

struct Dataset {
  std::vector<std::string> class_names;
  std::vector<PointCloud> clouds;

  int class_count() const { return static_cast<int>(class_names.size()); }
  int size() const { return static_cast<int>(clouds.size()); }
};

// Points file: one point per line, three whitespace-separated decimals,
// lines beginning with '#' ignored. Written with 17 significant digits.
void write_points_file(const std::filesystem::path& path, const Matrix& points);
Matrix read_points_file(const std::filesystem::path& path);

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
// Validates labels against the class list and that every item resolves to an
// existing file next to the manifest.
DatasetManifest load_manifest(const std::filesystem::path& path);

// Loads every item; all clouds must share one point count. Clouds are
// re-normalized to the unit sphere unless `normalize` is false.
Dataset load_dataset(const std::filesystem::path& manifest_path, bool normalize = true);

struct SyntheticSpec {
  int classes = 8;
  int per_class = 125;
  int points_per_cloud = 256;
  std::uint64_t seed = 1;
};

// Procedural benchmark clouds: per class, `per_class` independent surface
// samples, each given a random heading about z so poses vary within a class.
std::vector<PointCloud> build_synthetic_clouds(const SyntheticSpec& spec);

// Writes points/*.txt plus manifest.json (all items), manifest.train.json and
// manifest.test.json (per-class 80/20 split drawn from the same seed).
void write_synthetic_dataset(const SyntheticSpec& spec, const std::filesystem::path& out_dir);

}  // namespace pjem
