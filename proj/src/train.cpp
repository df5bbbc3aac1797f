#include "pjem/train.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include "pjem/rng.hpp"

namespace pjem {

void TrainConfig::validate() const {
  if (batch_size < 2) throw std::invalid_argument("train: batch_size must be >= 2");
  if (epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (lr0 <= 0.0) throw std::invalid_argument("train: lr0 must be positive");
  if (weight_decay < 0.0) throw std::invalid_argument("train: weight_decay must be >= 0");
  if (loss.lambda_ti < 0.0) throw std::invalid_argument("train: lambda must be >= 0");
  if (collapse_threshold <= 0.0 || collapse_threshold >= 1.0) {
    throw std::invalid_argument("train: collapse_threshold must be in (0, 1)");
  }
  aug_branch1.validate();
  aug_branch2.validate();
}

AdamState AdamState::init(const ParameterStore& params) {
  AdamState state;
  state.first_moment.reserve(params.size());
  state.second_moment.reserve(params.size());
  for (const auto& [name, value] : params.items()) {
    state.first_moment.push_back(NumericArray::zeros(value.shape()));
    state.second_moment.push_back(NumericArray::zeros(value.shape()));
  }
  return state;
}

double cosine_lr(int epoch, int total_epochs, double lr0) {
  if (total_epochs < 1) throw std::invalid_argument("cosine_lr: total_epochs must be >= 1");
  if (epoch < 0 || epoch > total_epochs) throw std::invalid_argument("cosine_lr: epoch out of range");
  return lr0 * 0.5 * (1.0 + std::cos(std::numbers::pi * static_cast<double>(epoch) / total_epochs));
}

void adam_step(ParameterStore& params, const std::vector<NumericArray>& grads, AdamState& state, double lr,
               double weight_decay) {
  if (grads.size() != params.size() || state.first_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: gradient/state count mismatch");
  }
  state.step += 1;
  const double bias1 = 1.0 - std::pow(kAdamBeta1, static_cast<double>(state.step));
  const double bias2 = 1.0 - std::pow(kAdamBeta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& [name, value] = params.items()[i];
    const NumericArray& grad = grads[i];
    if (!grad.same_shape(value)) throw std::invalid_argument("adam_step: gradient shape mismatch for " + name);
    if (!grad.all_finite()) throw std::runtime_error("adam_step: non-finite gradient for parameter " + name);
    auto g = grad.flat().array() + weight_decay * value.flat().array();
    auto m = state.first_moment[i].flat().array();
    auto v = state.second_moment[i].flat().array();
    m = kAdamBeta1 * m + (1.0 - kAdamBeta1) * g;
    v = kAdamBeta2 * v + (1.0 - kAdamBeta2) * g.square();
    value.flat().array() -= lr * (m / bias1) / ((v / bias2).sqrt() + kAdamEps);
  }
}

std::uint64_t view_seed(std::uint64_t run_seed, int epoch, int sample_index, int branch) {
  std::uint64_t s = mix_seed(run_seed, 0xA06ull);
  s = mix_seed(s, static_cast<std::uint64_t>(epoch));
  s = mix_seed(s, static_cast<std::uint64_t>(sample_index));
  return mix_seed(s, static_cast<std::uint64_t>(branch));
}

StepResult train_step(ParameterStore& params, AdamState& state, std::span<const PointCloud> batch,
                      std::span<const std::uint64_t> seeds1, std::span<const std::uint64_t> seeds2, double lr,
                      const TrainConfig& config) {
  const int n = static_cast<int>(batch.size());
  if (n < 2) throw std::invalid_argument("train_step: batch must have at least 2 clouds");
  if (seeds1.size() != batch.size() || seeds2.size() != batch.size()) {
    throw std::invalid_argument("train_step: per-sample seed count mismatch");
  }

  std::vector<PointCloud> views;
  views.reserve(2 * batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    views.push_back(augment_view(batch[i], config.aug_branch1, seeds1[i]));
  }
  for (std::size_t i = 0; i < batch.size(); ++i) {
    views.push_back(augment_view(batch[i], config.aug_branch2, seeds2[i]));
  }

  Tape tape;
  ModelGraph graph = build_model_graph(tape, params, stack_points(views), 2 * n);
  ValueId z1 = slice(tape, graph.embedding, 0, 0, n);
  ValueId z2 = slice(tape, graph.embedding, 0, n, n);
  LossGraph loss = build_loss_graph(tape, z1, z2, params.layout, config.loss);
  tape.backward(loss.total);

  std::vector<NumericArray> grads;
  grads.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) grads.push_back(tape.adjoint(graph.params[i]));

  StepResult result;
  result.loss.jed = tape.value(loss.jed).value();
  result.loss.jeo = tape.value(loss.jeo).value();
  result.loss.ti = tape.value(loss.ti).value();
  result.loss.lambda = config.loss.lambda_ti;
  result.loss.total = tape.value(loss.total).value();
  result.loss.grad_z1 = tape.adjoint(z1).to_matrix();
  result.loss.grad_z2 = tape.adjoint(z2).to_matrix();
  result.scores1 = segment_softmax(tape.value(z1).to_matrix(), params.layout);
  result.scores2 = segment_softmax(tape.value(z2).to_matrix(), params.layout);

  adam_step(params, grads, state, lr, config.weight_decay);
  return result;
}

void write_train_log_csv(const TrainLog& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("train log: cannot open " + path.string());
  out << "# pointjem pretraining log\n";
  out << "# config: " << (log.config_json.empty() ? "{}" : log.config_json) << '\n';
  out << "# seed: " << log.seed << '\n';
  out << "epoch,loss_total,loss_jed,loss_jeo,loss_ti,lr,mean_offdiag_mi,min_segment_entropy\n";
  char line[512];
  for (const TrainLogRow& row : log.rows) {
    std::snprintf(line, sizeof(line), "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", row.epoch, row.loss_total,
                  row.loss_jed, row.loss_jeo, row.loss_ti, row.lr, row.mean_offdiag_mi, row.min_segment_entropy);
    out << line;
  }
  if (!out) throw std::runtime_error("train log: write failed for " + path.string());
}

PretrainResult pretrain(const Dataset& dataset, const EncoderConfig& encoder, const SegmentLayout& layout,
                        const ProjectorConfig& projector, const TrainConfig& config) {
  config.validate();
  if (dataset.size() < 1) throw std::invalid_argument("pretrain: dataset is empty");
  if (dataset.size() < config.batch_size) {
    throw std::invalid_argument("pretrain: dataset of " + std::to_string(dataset.size()) +
                                " clouds is smaller than one batch of " + std::to_string(config.batch_size));
  }

  PretrainResult result;
  result.params = init_parameters(encoder, layout, projector, config.seed);
  result.log.seed = config.seed;
  AdamState state = AdamState::init(result.params);

  const int n = dataset.size();
  const int batches = n / config.batch_size;
  std::vector<PointCloud> batch(static_cast<std::size_t>(config.batch_size));
  std::vector<std::uint64_t> seeds1(batch.size()), seeds2(batch.size());

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double lr = cosine_lr(epoch, config.epochs, config.lr0);
    Rng shuffle_rng(mix_seed(mix_seed(config.seed, 0xE70Cull), static_cast<std::uint64_t>(epoch)));
    std::vector<int> order = shuffle_rng.permutation(n);

    TrainLogRow row;
    row.epoch = epoch + 1;
    row.lr = lr;
    StepResult last_step;
    for (int b = 0; b < batches; ++b) {
      for (int j = 0; j < config.batch_size; ++j) {
        int index = order[static_cast<std::size_t>(b * config.batch_size + j)];
        batch[static_cast<std::size_t>(j)] = dataset.clouds[static_cast<std::size_t>(index)];
        seeds1[static_cast<std::size_t>(j)] = view_seed(config.seed, epoch, index, 1);
        seeds2[static_cast<std::size_t>(j)] = view_seed(config.seed, epoch, index, 2);
      }
      last_step = train_step(result.params, state, batch, seeds1, seeds2, lr, config);
      row.loss_total += last_step.loss.total;
      row.loss_jed += last_step.loss.jed;
      row.loss_jeo += last_step.loss.jeo;
      row.loss_ti += last_step.loss.ti;
    }
    row.loss_total /= batches;
    row.loss_jed /= batches;
    row.loss_jeo /= batches;
    row.loss_ti /= batches;

    // diagnostics on the epoch's last batch
    MutualInfoReport mi = mutual_info_report(last_step.scores1, last_step.scores2);
    SegmentScores stacked;
    stacked.segments = last_step.scores1.segments;
    stacked.entries = last_step.scores1.entries;
    stacked.q.resize(last_step.scores1.q.rows() + last_step.scores2.q.rows(), last_step.scores1.q.cols());
    stacked.q << last_step.scores1.q, last_step.scores2.q;
    CollapseReport collapse = collapse_report(stacked, config.collapse_threshold);
    row.mean_offdiag_mi = mi.mean_offdiag_mi;
    row.min_segment_entropy = collapse.min_segment_entropy;

    result.log.rows.push_back(row);
  }
  return result;
}

}  // namespace pjem
