#pragma once

#include <vector>

#include <json.hpp>

#include "pjem/jemloss.hpp"

namespace pjem {

// Entropies here use the exact convention 0 * log 0 = 0 (no epsilon inside
// the logarithm); the stated 1e-9 tolerances on the mutual-information
// identities require it. All values are in nats.

// -sum P log P over an M x M block. The block must be non-negative and sum
// to 1 within 1e-6.
double block_joint_entropy(const Matrix& block);

// Entropy of the block's marginal: axis 0 marginalizes out the columns (row
// sums), axis 1 the rows (column sums).
double marginal_entropy(const Matrix& block, int axis);

// H(rows) + H(cols) - H(joint); tiny negatives from rounding are clamped to 0.
double mutual_information(const Matrix& block);

struct MutualInfoReport {
  Matrix mi;                 // K x K pairwise segment mutual information
  Vector marginal_entropy;   // per-segment H(k) of the batch marginal
  double mean_offdiag_mi = 0.0;
};

// Plug-in estimate over the batch-empirical joint distribution, averaged
// over the two branch orders so the matrix is symmetric.
MutualInfoReport mutual_info_report(const SegmentScores& q1, const SegmentScores& q2);

struct CollapseReport {
  double min_segment_entropy = 0.0;
  std::vector<int> collapsed_segments;      // H(k) < threshold_fraction * ln M
  double batch_variance_of_scores = 0.0;    // mean over (k, m) of the batch variance
};

CollapseReport collapse_report(const SegmentScores& q, double threshold_fraction);

nlohmann::json diagnostics_to_json(const MutualInfoReport& mi, const CollapseReport& collapse);

}  // namespace pjem
