#pragma once

#include "pjem/model.hpp"
#include "pjem/tape.hpp"

namespace pjem {

// Per-segment softmax scores: one M-entry simplex per (sample, segment).
struct SegmentScores {
  Matrix q;     // N x (K*M)
  int segments = 0;
  int entries = 0;

  int batch() const { return static_cast<int>(q.rows()); }
  auto segment(int k) { return q.middleCols(static_cast<Eigen::Index>(k) * entries, entries); }
  auto segment(int k) const { return q.middleCols(static_cast<Eigen::Index>(k) * entries, entries); }
};

SegmentScores segment_softmax(const Matrix& z, const SegmentLayout& layout);

// Empirical cross-branch joint distribution: block (k1, k2) holds the M x M
// frequencies (1/N) sum_i q1_i(k1, m1) * q2_i(k2, m2). Every block sums to 1.
struct JointDistribution {
  Matrix p;  // (K*M) x (K*M)
  int segments = 0;
  int entries = 0;

  auto block(int k1, int k2) const {
    return p.block(static_cast<Eigen::Index>(k1) * entries, static_cast<Eigen::Index>(k2) * entries, entries,
                   entries);
  }
};

JointDistribution joint_distribution(const SegmentScores& q1, const SegmentScores& q2);

// Mean over diagonal blocks of sum_m P(m, m) * log(P(m, m) + eps); minimizing
// this maximizes the entropy carried by the diagonal entries.
double loss_jed(const JointDistribution& joint);
// Mean over off-diagonal blocks of the full sum_{m1, m2} P * log(P + eps).
double loss_jeo(const JointDistribution& joint);
// - mean over (sample, segment) of log of the per-segment inner product of
// the two branches' scores.
double loss_ti(const SegmentScores& q1, const SegmentScores& q2);

// Term switches for ablations; the default is the full objective.
struct LossWeights {
  bool use_jed = true;
  bool use_jeo = true;
  double lambda_ti = 1.0;
};

struct LossBreakdown {
  double jed = 0.0;
  double jeo = 0.0;
  double ti = 0.0;
  double lambda = 1.0;
  double total = 0.0;
  Matrix grad_z1;  // d total / d z1
  Matrix grad_z2;  // d total / d z2
};

// Builds all loss terms from raw embeddings on one tape, so one backward
// sweep yields gradients for everything upstream of z1/z2.
struct LossGraph {
  ValueId jed;
  ValueId jeo;
  ValueId ti;
  ValueId total;
};
LossGraph build_loss_graph(Tape& tape, ValueId z1, ValueId z2, const SegmentLayout& layout,
                           const LossWeights& weights);

// Convenience: evaluates the graph on a private tape and returns values plus
// gradients with respect to the two raw embeddings.
LossBreakdown total_loss(const Matrix& z1, const Matrix& z2, const SegmentLayout& layout,
                         const LossWeights& weights = {});

}  // namespace pjem
