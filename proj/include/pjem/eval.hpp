#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include <json.hpp>

#include "pjem/dataset.hpp"
#include "pjem/model.hpp"

namespace pjem {

struct ProbeConfig {
  enum class Mode { kLinear, kKnn };
  Mode mode = Mode::kLinear;
  double label_fraction = 1.0;
  int epochs = 200;   // linear mode
  double lr = 1e-2;   // linear mode
  int k = 10;         // knn mode
  std::uint64_t seed = 1;

  void validate() const;
};

struct Embeddings {
  Matrix h;                 // one row per sample
  std::vector<int> labels;  // aligned with rows
};

// Frozen-encoder representations of un-augmented clouds.
Embeddings extract_embeddings(const ParameterStore& store, const Dataset& dataset);

struct ProbeResult {
  double accuracy = 0.0;
  Vector per_class_accuracy;  // 0 for classes absent from the test set
  Eigen::MatrixXi confusion;  // rows: true label, cols: prediction
  int n_train = 0;
  int n_test = 0;
};

// Seeded per-class selection of round(fraction * count) >= 1 samples. For a
// shared seed the subset at a smaller fraction is contained in the subset at
// a larger one. Throws if any class has no training sample at all.
std::vector<int> select_labeled_subset(const std::vector<int>& labels, double fraction, int n_classes,
                                       std::uint64_t seed);

// Multinomial logistic regression on the frozen embeddings (full-batch Adam,
// zero-initialized weights); accuracy is reported on the full test set. The
// label fraction and seed of `config` pick the labeled training subset.
ProbeResult linear_probe(const Embeddings& train, const Embeddings& test, int n_classes,
                         const ProbeConfig& config);

// Cosine-similarity majority vote over the k nearest train embeddings; vote
// ties go to the class of the nearest tied neighbor.
ProbeResult knn_probe(const Embeddings& train, const Embeddings& test, int n_classes, int k);

// CSV export: '#' comment header (config echo + seed), then one row per
// sample: label, then the representation at 17 significant digits.
void write_embeddings_csv(const Embeddings& embeddings, const std::filesystem::path& path,
                          const std::string& config_json, std::uint64_t seed);

nlohmann::json probe_result_to_json(const ProbeResult& result);

}  // namespace pjem
