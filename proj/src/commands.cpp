#include "pjem/commands.hpp"

#include <fstream>
#include <iostream>

#include "pjem/checkpoint.hpp"
#include "pjem/rng.hpp"

namespace pjem {

namespace fs = std::filesystem;

namespace {

void require_file(const fs::path& path, const char* what) {
  if (path.empty()) throw std::invalid_argument(std::string(what) + " path is missing");
  if (!fs::exists(path)) throw std::runtime_error(std::string(what) + " not found: " + path.string());
}

Dataset load_split(const fs::path& data_dir, const char* manifest_name) {
  fs::path manifest = data_dir / manifest_name;
  require_file(manifest, "dataset manifest");
  return load_dataset(manifest);
}

// The checkpoint's stored configuration is authoritative for the model
// shape; a store whose arrays disagree with it is rejected.
void validate_store_shapes(const ParameterStore& store) {
  ParameterStore expected;
  expected.encoder = store.encoder;
  expected.layout = store.layout;
  expected.projector = store.projector;
  ParameterStore reference = init_parameters(store.encoder, store.layout, store.projector, 0);
  if (reference.size() != store.size()) {
    throw std::runtime_error("checkpoint: parameter count does not match its layout metadata");
  }
  for (std::size_t i = 0; i < store.size(); ++i) {
    const auto& [name, value] = store.items()[i];
    const auto& [expected_name, expected_value] = reference.items()[i];
    if (name != expected_name || !value.same_shape(expected_value)) {
      throw std::runtime_error("checkpoint: parameter " + name + " does not match the stored layout");
    }
  }
}

ParameterStore load_model(const fs::path& path) {
  require_file(path, "checkpoint");
  ParameterStore store = load_checkpoint(path);
  validate_store_shapes(store);
  return store;
}

void write_json(const nlohmann::json& doc, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace

void run_gen(const CommandOptions& options) {
  if (options.out.empty()) throw std::invalid_argument("gen: --out directory is missing");
  SyntheticSpec spec;
  spec.classes = options.classes;
  spec.per_class = options.per_class;
  spec.points_per_cloud = options.points;
  spec.seed = options.seed;
  write_synthetic_dataset(spec, options.out);
  std::cout << "gen: wrote " << spec.classes * spec.per_class << " clouds (" << spec.classes << " classes) to "
            << options.out.string() << "\n";
}

void run_pretrain(const CommandOptions& options, const RunConfig& config) {
  if (options.checkpoint.empty()) throw std::invalid_argument("pretrain: --out checkpoint path is missing");
  if (options.log.empty()) throw std::invalid_argument("pretrain: --log path is missing");
  Dataset dataset = load_split(options.data_dir, "manifest.train.json");

  PretrainResult result = pretrain(dataset, config.encoder, config.layout, config.projector, config.train);
  result.params.config_json = config.to_json();
  result.log.config_json = result.params.config_json;
  save_checkpoint(result.params, options.checkpoint);
  write_train_log_csv(result.log, options.log);
  const TrainLogRow& last = result.log.rows.back();
  std::cout << "pretrain: " << result.log.rows.size() << " epochs, final loss " << last.loss_total
            << ", min segment entropy " << last.min_segment_entropy << "\n";
}

ProbeResult run_probe(const CommandOptions& options, const RunConfig& config) {
  ParameterStore store = load_model(options.checkpoint);
  Dataset train = load_split(options.data_dir, "manifest.train.json");
  Dataset test = load_split(options.data_dir, "manifest.test.json");
  if (train.class_count() < 2) throw std::runtime_error("probe: dataset needs at least 2 classes");

  Embeddings train_emb = extract_embeddings(store, train);
  Embeddings test_emb = extract_embeddings(store, test);

  ProbeResult result;
  if (config.probe.mode == ProbeConfig::Mode::kLinear) {
    result = linear_probe(train_emb, test_emb, train.class_count(), config.probe);
  } else {
    std::vector<int> subset =
        select_labeled_subset(train_emb.labels, config.probe.label_fraction, train.class_count(), config.probe.seed);
    Embeddings labeled;
    labeled.h.resize(static_cast<Eigen::Index>(subset.size()), train_emb.h.cols());
    for (std::size_t i = 0; i < subset.size(); ++i) {
      labeled.h.row(static_cast<Eigen::Index>(i)) = train_emb.h.row(subset[i]);
      labeled.labels.push_back(train_emb.labels[static_cast<std::size_t>(subset[i])]);
    }
    int k = std::min(config.probe.k, static_cast<int>(subset.size()));
    result = knn_probe(labeled, test_emb, train.class_count(), k);
  }

  nlohmann::json doc = probe_result_to_json(result);
  doc["config"] = nlohmann::json::parse(config.to_json());
  doc["seed"] = config.probe.seed;
  doc["mode"] = config.probe.mode == ProbeConfig::Mode::kLinear ? "linear" : "knn";
  doc["label_fraction"] = config.probe.label_fraction;
  std::cout << "probe: accuracy " << result.accuracy << " on " << result.n_test << " held-out clouds ("
            << result.n_train << " labeled)\n";
  if (!options.out.empty()) write_json(doc, options.out);
  return result;
}

void run_diagnose(const CommandOptions& options, const RunConfig& config) {
  if (options.out.empty()) throw std::invalid_argument("diagnose: --out path is missing");
  ParameterStore store = load_model(options.checkpoint);
  Dataset dataset = load_split(options.data_dir, "manifest.json");

  // Two seeded views per cloud, mirroring the training-time estimator.
  std::vector<PointCloud> views1, views2;
  views1.reserve(dataset.clouds.size());
  views2.reserve(dataset.clouds.size());
  for (std::size_t i = 0; i < dataset.clouds.size(); ++i) {
    views1.push_back(augment_view(dataset.clouds[i], config.train.aug_branch1,
                                  view_seed(config.train.seed, 0, static_cast<int>(i), 1)));
    views2.push_back(augment_view(dataset.clouds[i], config.train.aug_branch2,
                                  view_seed(config.train.seed, 0, static_cast<int>(i), 2)));
  }
  SegmentScores q1 = segment_softmax(project(store, encode(store, views1)), store.layout);
  SegmentScores q2 = segment_softmax(project(store, encode(store, views2)), store.layout);

  MutualInfoReport mi = mutual_info_report(q1, q2);
  SegmentScores stacked;
  stacked.segments = q1.segments;
  stacked.entries = q1.entries;
  stacked.q.resize(q1.q.rows() + q2.q.rows(), q1.q.cols());
  stacked.q << q1.q, q2.q;
  CollapseReport collapse = collapse_report(stacked, config.train.collapse_threshold);

  nlohmann::json doc = diagnostics_to_json(mi, collapse);
  doc["config"] = nlohmann::json::parse(config.to_json());
  doc["seed"] = config.train.seed;
  std::cout << "diagnose: mean off-diagonal MI " << mi.mean_offdiag_mi << ", min segment entropy "
            << collapse.min_segment_entropy << " over " << dataset.size() << " clouds\n";
  write_json(doc, options.out);
}

void run_embed(const CommandOptions& options, const RunConfig& config) {
  if (options.out.empty()) throw std::invalid_argument("embed: --out path is missing");
  ParameterStore store = load_model(options.checkpoint);
  Dataset dataset = load_split(options.data_dir, "manifest.json");
  Embeddings embeddings = extract_embeddings(store, dataset);
  write_embeddings_csv(embeddings, options.out, config.to_json(), config.train.seed);
  std::cout << "embed: wrote " << dataset.size() << " rows of width " << embeddings.h.cols() << " to "
            << options.out.string() << "\n";
}

int dispatch(const std::string& command, const CommandOptions& options, const RunConfig& config) {
  try {
    if (command == "gen") run_gen(options);
    else if (command == "pretrain") run_pretrain(options, config);
    else if (command == "probe") run_probe(options, config);
    else if (command == "diagnose") run_diagnose(options, config);
    else if (command == "embed") run_embed(options, config);
    else throw std::invalid_argument("unknown command: " + command);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace pjem
