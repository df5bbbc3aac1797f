#include "pjem/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "pjem/rng.hpp"
#include "pjem/tape.hpp"
#include "pjem/train.hpp"

namespace pjem {

void ProbeConfig::validate() const {
  if (label_fraction <= 0.0 || label_fraction > 1.0) {
    throw std::invalid_argument("probe: label_fraction must be in (0, 1]");
  }
  if (epochs < 1) throw std::invalid_argument("probe: epochs must be >= 1");
  if (lr <= 0.0) throw std::invalid_argument("probe: lr must be positive");
  if (k < 1) throw std::invalid_argument("probe: k must be >= 1");
}

Embeddings extract_embeddings(const ParameterStore& store, const Dataset& dataset) {
  if (dataset.size() < 1) throw std::invalid_argument("extract_embeddings: dataset is empty");
  Embeddings out;
  out.h = encode(store, dataset.clouds);
  out.labels.reserve(dataset.clouds.size());
  for (const PointCloud& cloud : dataset.clouds) out.labels.push_back(cloud.label);
  return out;
}

std::vector<int> select_labeled_subset(const std::vector<int>& labels, double fraction, int n_classes,
                                       std::uint64_t seed) {
  if (fraction <= 0.0 || fraction > 1.0) throw std::invalid_argument("label subset: fraction must be in (0, 1]");
  std::vector<std::vector<int>> per_class(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    int label = labels[i];
    if (label < 0 || label >= n_classes) {
      throw std::invalid_argument("label subset: label " + std::to_string(label) + " out of range");
    }
    per_class[static_cast<std::size_t>(label)].push_back(static_cast<int>(i));
  }
  std::vector<int> chosen;
  for (int c = 0; c < n_classes; ++c) {
    const std::vector<int>& members = per_class[static_cast<std::size_t>(c)];
    if (members.empty()) {
      throw std::invalid_argument("label subset: class " + std::to_string(c) + " has no training samples");
    }
    int count = static_cast<int>(members.size());
    int take = std::max(1, static_cast<int>(std::floor(fraction * count + 1e-12)));
    Rng rng(mix_seed(mix_seed(seed, 0x5AB5ull), static_cast<std::uint64_t>(c)));
    std::vector<int> order = rng.permutation(count);
    for (int i = 0; i < take; ++i) chosen.push_back(members[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])]);
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

namespace {

ProbeResult score_predictions(const std::vector<int>& truth, const std::vector<int>& predicted, int n_classes,
                              int n_train) {
  ProbeResult result;
  result.n_train = n_train;
  result.n_test = static_cast<int>(truth.size());
  result.confusion = Eigen::MatrixXi::Zero(n_classes, n_classes);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    result.confusion(truth[i], predicted[i]) += 1;
  }
  result.accuracy = static_cast<double>(result.confusion.trace()) / static_cast<double>(truth.size());
  result.per_class_accuracy = Vector::Zero(n_classes);
  for (int c = 0; c < n_classes; ++c) {
    int total = result.confusion.row(c).sum();
    if (total > 0) result.per_class_accuracy[c] = static_cast<double>(result.confusion(c, c)) / total;
  }
  return result;
}

std::vector<int> argmax_rows(const Matrix& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    int best = 0;
    for (Eigen::Index j = 1; j < logits.cols(); ++j) {
      if (logits(i, j) > logits(i, best)) best = static_cast<int>(j);
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

}  // namespace

ProbeResult linear_probe(const Embeddings& train, const Embeddings& test, int n_classes,
                         const ProbeConfig& config) {
  config.validate();
  if (train.h.rows() != static_cast<Eigen::Index>(train.labels.size()) ||
      test.h.rows() != static_cast<Eigen::Index>(test.labels.size())) {
    throw std::invalid_argument("linear_probe: embedding/label size mismatch");
  }
  std::vector<int> subset = select_labeled_subset(train.labels, config.label_fraction, n_classes, config.seed);

  const Eigen::Index dim = train.h.cols();
  const int n = static_cast<int>(subset.size());
  Matrix x(n, dim);
  Matrix one_hot = Matrix::Zero(n, n_classes);
  std::vector<bool> present(static_cast<std::size_t>(n_classes), false);
  for (int i = 0; i < n; ++i) {
    x.row(i) = train.h.row(subset[static_cast<std::size_t>(i)]);
    int label = train.labels[static_cast<std::size_t>(subset[static_cast<std::size_t>(i)])];
    one_hot(i, label) = 1.0;
    present[static_cast<std::size_t>(label)] = true;
  }
  int classes_present = 0;
  for (bool p : present) classes_present += p ? 1 : 0;
  if (classes_present < 2) throw std::invalid_argument("linear_probe: needs at least 2 classes in the subset");

  // Softmax regression, full batch; the tape is built once and replayed.
  Tape tape;
  ValueId xin = tape.input(NumericArray::from_matrix(x));
  ValueId mask = tape.input(NumericArray::from_matrix(one_hot));
  ValueId weights = tape.parameter(NumericArray::zeros({static_cast<int>(dim), n_classes}), "probe.weight");
  ValueId bias = tape.parameter(NumericArray::zeros({n_classes}), "probe.bias");
  ValueId logits = add(tape, matmul(tape, xin, weights), bias);
  ValueId picked = elementwise_mul(tape, log_eps(tape, row_softmax(tape, logits)), mask);
  ValueId loss = scalar_mul(tape, sum_all(tape, picked), -1.0 / static_cast<double>(n));

  ParameterStore probe_params;
  probe_params.add("probe.weight", tape.value(weights));
  probe_params.add("probe.bias", tape.value(bias));
  AdamState state = AdamState::init(probe_params);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    tape.backward(loss);
    std::vector<NumericArray> grads{tape.adjoint(weights), tape.adjoint(bias)};
    adam_step(probe_params, grads, state, config.lr, 0.0);
    tape.set_leaf_value(weights, probe_params.at("probe.weight"));
    tape.set_leaf_value(bias, probe_params.at("probe.bias"));
    tape.replay();
  }

  Matrix w = probe_params.at("probe.weight").to_matrix();
  Vector b = probe_params.at("probe.bias").to_vector();
  Matrix test_logits = (test.h * w).rowwise() + b.transpose();
  return score_predictions(test.labels, argmax_rows(test_logits), n_classes, n);
}

ProbeResult knn_probe(const Embeddings& train, const Embeddings& test, int n_classes, int k) {
  const int n_train = static_cast<int>(train.h.rows());
  if (n_train < 1) throw std::invalid_argument("knn_probe: empty train set");
  if (k < 1 || k > n_train) {
    throw std::invalid_argument("knn_probe: k " + std::to_string(k) + " out of range for " +
                                std::to_string(n_train) + " train samples");
  }

  auto normalized = [](const Matrix& m) {
    Matrix out = m;
    for (Eigen::Index i = 0; i < out.rows(); ++i) {
      double norm = out.row(i).norm();
      if (norm > 0.0) out.row(i) /= norm;
    }
    return out;
  };
  Matrix train_unit = normalized(train.h);
  Matrix test_unit = normalized(test.h);

  std::vector<int> predictions(static_cast<std::size_t>(test_unit.rows()));
  std::vector<int> order(static_cast<std::size_t>(n_train));
  for (Eigen::Index i = 0; i < test_unit.rows(); ++i) {
    Vector sims = train_unit * test_unit.row(i).transpose();
    for (int j = 0; j < n_train; ++j) order[static_cast<std::size_t>(j)] = j;
    std::partial_sort(order.begin(), order.begin() + k, order.end(), [&](int a, int b) {
      if (sims[a] != sims[b]) return sims[a] > sims[b];
      return a < b;
    });
    std::vector<int> votes(static_cast<std::size_t>(n_classes), 0);
    for (int j = 0; j < k; ++j) votes[static_cast<std::size_t>(train.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])])] += 1;
    int best_votes = *std::max_element(votes.begin(), votes.end());
    // vote tie: the nearest neighbor belonging to a tied class decides
    int prediction = -1;
    for (int j = 0; j < k && prediction < 0; ++j) {
      int label = train.labels[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])];
      if (votes[static_cast<std::size_t>(label)] == best_votes) prediction = label;
    }
    predictions[static_cast<std::size_t>(i)] = prediction;
  }
  return score_predictions(test.labels, predictions, n_classes, n_train);
}

void write_embeddings_csv(const Embeddings& embeddings, const std::filesystem::path& path,
                          const std::string& config_json, std::uint64_t seed) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("embeddings: cannot open " + path.string());
  out << "# pointjem embeddings: label, then representation values\n";
  out << "# config: " << (config_json.empty() ? "{}" : config_json) << '\n';
  out << "# seed: " << seed << '\n';
  char cell[64];
  for (Eigen::Index i = 0; i < embeddings.h.rows(); ++i) {
    out << embeddings.labels[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < embeddings.h.cols(); ++j) {
      std::snprintf(cell, sizeof(cell), ",%.17g", embeddings.h(i, j));
      out << cell;
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("embeddings: write failed for " + path.string());
}

nlohmann::json probe_result_to_json(const ProbeResult& result) {
  nlohmann::json doc;
  doc["accuracy"] = result.accuracy;
  doc["per_class_accuracy"] = std::vector<double>(result.per_class_accuracy.data(),
                                                  result.per_class_accuracy.data() + result.per_class_accuracy.size());
  nlohmann::json confusion = nlohmann::json::array();
  for (Eigen::Index i = 0; i < result.confusion.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < result.confusion.cols(); ++j) row.push_back(result.confusion(i, j));
    confusion.push_back(std::move(row));
  }
  doc["confusion"] = std::move(confusion);
  doc["n_train"] = result.n_train;
  doc["n_test"] = result.n_test;
  return doc;
}

}  // namespace pjem
