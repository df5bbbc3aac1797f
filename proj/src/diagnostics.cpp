#include "pjem/diagnostics.hpp"

#include <cmath>
#include <stdexcept>

namespace pjem {

namespace {

double exact_entropy_term(double p) { return p > 0.0 ? p * std::log(p) : 0.0; }

void check_block(const Matrix& block) {
  if (block.rows() != block.cols() || block.rows() < 1) {
    throw std::invalid_argument("diagnostics: block must be square, got " + std::to_string(block.rows()) + " x " +
                                std::to_string(block.cols()));
  }
  if (block.minCoeff() < 0.0) throw std::invalid_argument("diagnostics: block has negative entries");
  double sum = block.sum();
  if (std::abs(sum - 1.0) > 1e-6) {
    throw std::invalid_argument("diagnostics: block sums to " + std::to_string(sum) + ", expected 1");
  }
}

double entropy_of(const Vector& dist) {
  double acc = 0.0;
  for (Eigen::Index i = 0; i < dist.size(); ++i) acc += exact_entropy_term(dist[i]);
  return -acc;
}

}  // namespace

double block_joint_entropy(const Matrix& block) {
  check_block(block);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < block.rows(); ++i) {
    for (Eigen::Index j = 0; j < block.cols(); ++j) acc += exact_entropy_term(block(i, j));
  }
  return -acc;
}

double marginal_entropy(const Matrix& block, int axis) {
  check_block(block);
  if (axis != 0 && axis != 1) throw std::invalid_argument("marginal_entropy: axis must be 0 or 1");
  Vector marginal = axis == 0 ? Vector(block.rowwise().sum()) : Vector(block.colwise().sum());
  return entropy_of(marginal);
}

double mutual_information(const Matrix& block) {
  double mi = marginal_entropy(block, 0) + marginal_entropy(block, 1) - block_joint_entropy(block);
  if (mi < 0.0 && mi > -1e-9) mi = 0.0;
  return mi;
}

MutualInfoReport mutual_info_report(const SegmentScores& q1, const SegmentScores& q2) {
  JointDistribution joint = joint_distribution(q1, q2);
  const int k_count = joint.segments;
  const int m = joint.entries;

  MutualInfoReport report;
  report.mi.resize(k_count, k_count);
  report.marginal_entropy.resize(k_count);

  // The reversed-branch estimate equals the blockwise transpose, so branch
  // averaging needs only one joint distribution.
  for (int k1 = 0; k1 < k_count; ++k1) {
    for (int k2 = 0; k2 < k_count; ++k2) {
      Matrix symmetrized = 0.5 * (Matrix(joint.block(k1, k2)) + Matrix(joint.block(k2, k1).transpose()));
      report.mi(k1, k2) = mutual_information(symmetrized);
    }
  }

  const double inv = 1.0 / (2.0 * q1.batch());
  for (int k = 0; k < k_count; ++k) {
    Vector marginal(m);
    for (int j = 0; j < m; ++j) {
      marginal[j] = inv * (q1.segment(k).col(j).sum() + q2.segment(k).col(j).sum());
    }
    report.marginal_entropy[k] = entropy_of(marginal);
  }

  double acc = 0.0;
  for (int k1 = 0; k1 < k_count; ++k1) {
    for (int k2 = 0; k2 < k_count; ++k2) {
      if (k1 != k2) acc += report.mi(k1, k2);
    }
  }
  report.mean_offdiag_mi = k_count > 1 ? acc / static_cast<double>(k_count * (k_count - 1)) : 0.0;
  return report;
}

CollapseReport collapse_report(const SegmentScores& q, double threshold_fraction) {
  if (threshold_fraction <= 0.0 || threshold_fraction >= 1.0) {
    throw std::invalid_argument("collapse_report: threshold_fraction must be in (0, 1)");
  }
  if (q.batch() < 1) throw std::invalid_argument("collapse_report: empty batch");

  CollapseReport report;
  report.min_segment_entropy = std::numeric_limits<double>::infinity();
  const double log_m = std::log(static_cast<double>(q.entries));
  double variance_acc = 0.0;
  for (int k = 0; k < q.segments; ++k) {
    auto scores = q.segment(k);
    Vector marginal = scores.colwise().mean();
    double h = entropy_of(marginal);
    report.min_segment_entropy = std::min(report.min_segment_entropy, h);
    if (h < threshold_fraction * log_m) report.collapsed_segments.push_back(k);
    for (int j = 0; j < q.entries; ++j) {
      variance_acc += (scores.col(j).array() - marginal[j]).square().mean();
    }
  }
  report.batch_variance_of_scores = variance_acc / static_cast<double>(q.segments * q.entries);
  return report;
}

nlohmann::json diagnostics_to_json(const MutualInfoReport& mi, const CollapseReport& collapse) {
  nlohmann::json doc;
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < mi.mi.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < mi.mi.cols(); ++j) row.push_back(mi.mi(i, j));
    rows.push_back(std::move(row));
  }
  doc["mi_matrix"] = std::move(rows);
  doc["marginal_entropies"] = std::vector<double>(mi.marginal_entropy.data(),
                                                  mi.marginal_entropy.data() + mi.marginal_entropy.size());
  doc["mean_offdiag_mi"] = mi.mean_offdiag_mi;
  doc["min_segment_entropy"] = collapse.min_segment_entropy;
  doc["collapsed_segments"] = collapse.collapsed_segments;
  return doc;
}

}  // namespace pjem
