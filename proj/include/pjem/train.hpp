#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "pjem/dataset.hpp"
#include "pjem/diagnostics.hpp"
#include "pjem/jemloss.hpp"
#include "pjem/model.hpp"

namespace pjem {

inline constexpr double kAdamBeta1 = 0.9;
inline constexpr double kAdamBeta2 = 0.999;
inline constexpr double kAdamEps = 1e-8;

struct TrainConfig {
  int batch_size = 32;
  int epochs = 100;
  double lr0 = 1e-3;
  double weight_decay = 1e-6;
  LossWeights loss;
  std::uint64_t seed = 1;
  AugmentationConfig aug_branch1;
  AugmentationConfig aug_branch2;
  double collapse_threshold = 0.5;  // fraction of ln M

  void validate() const;
};

struct AdamState {
  std::vector<NumericArray> first_moment;   // aligned with ParameterStore items
  std::vector<NumericArray> second_moment;
  long step = 0;

  static AdamState init(const ParameterStore& params);
};

// lr0 * 0.5 * (1 + cos(pi * epoch / total_epochs)), stepped per epoch.
double cosine_lr(int epoch, int total_epochs, double lr0);

// Classic Adam with bias correction; weight decay enters as an L2 term added
// to the gradient before the moment updates. A non-finite gradient aborts
// with the offending parameter's name.
void adam_step(ParameterStore& params, const std::vector<NumericArray>& grads, AdamState& state, double lr,
               double weight_decay);

// Augmentation seed for one (run, epoch, sample, branch) tuple; the whole
// view schedule is a pure function of these.
std::uint64_t view_seed(std::uint64_t run_seed, int epoch, int sample_index, int branch);

struct StepResult {
  LossBreakdown loss;
  SegmentScores scores1;  // per-branch scores of this batch, for diagnostics
  SegmentScores scores2;
};

// One optimization step: augment two views per cloud, run both through the
// shared encoder/projector on a single tape, minimize the total loss.
StepResult train_step(ParameterStore& params, AdamState& state, std::span<const PointCloud> batch,
                      std::span<const std::uint64_t> seeds1, std::span<const std::uint64_t> seeds2, double lr,
                      const TrainConfig& config);

struct TrainLogRow {
  int epoch = 0;  // 1-based
  double loss_total = 0.0;
  double loss_jed = 0.0;
  double loss_jeo = 0.0;
  double loss_ti = 0.0;
  double lr = 0.0;
  double mean_offdiag_mi = 0.0;
  double min_segment_entropy = 0.0;
};

struct TrainLog {
  std::string config_json;  // echoed into the CSV header
  std::uint64_t seed = 0;
  std::vector<TrainLogRow> rows;
};

// CSV with '#' header comments (config echo, seed) followed by
// epoch,loss_total,loss_jed,loss_jeo,loss_ti,lr,mean_offdiag_mi,min_segment_entropy
void write_train_log_csv(const TrainLog& log, const std::filesystem::path& path);

struct PretrainResult {
  ParameterStore params;
  TrainLog log;
};

// Per-epoch seeded shuffle, short final batch dropped, loss columns averaged
// over the epoch, diagnostics taken on its last batch.
PretrainResult pretrain(const Dataset& dataset, const EncoderConfig& encoder, const SegmentLayout& layout,
                        const ProjectorConfig& projector, const TrainConfig& config);

}  // namespace pjem
