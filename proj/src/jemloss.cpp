#include "pjem/jemloss.hpp"

#include <cmath>
#include <stdexcept>

namespace pjem {

namespace {

double entropy_term(double p) { return p * std::log(p + kLogEps); }

void check_pair(const SegmentScores& q1, const SegmentScores& q2) {
  if (q1.segments != q2.segments || q1.entries != q2.entries) {
    throw std::invalid_argument("scores: branch layouts differ");
  }
  if (q1.batch() != q2.batch()) throw std::invalid_argument("scores: branch batch sizes differ");
  if (q1.batch() < 1) throw std::invalid_argument("scores: batch must be non-empty");
}

}  // namespace

SegmentScores segment_softmax(const Matrix& z, const SegmentLayout& layout) {
  if (z.cols() != layout.embed_dim()) {
    throw std::invalid_argument("segment_softmax: embedding width " + std::to_string(z.cols()) +
                                " does not match K*M = " + std::to_string(layout.embed_dim()));
  }
  SegmentScores scores;
  scores.segments = layout.segments;
  scores.entries = layout.entries_per_segment;
  scores.q.resize(z.rows(), z.cols());
  const int m = layout.entries_per_segment;
  for (int k = 0; k < layout.segments; ++k) {
    auto logits = z.middleCols(static_cast<Eigen::Index>(k) * m, m);
    auto out = scores.q.middleCols(static_cast<Eigen::Index>(k) * m, m);
    Vector row_max = logits.rowwise().maxCoeff();
    out = (logits.colwise() - row_max).array().exp();
    Vector row_sum = out.rowwise().sum();
    out.array().colwise() /= row_sum.array();
  }
  return scores;
}

JointDistribution joint_distribution(const SegmentScores& q1, const SegmentScores& q2) {
  check_pair(q1, q2);
  JointDistribution joint;
  joint.segments = q1.segments;
  joint.entries = q1.entries;
  // Mean of per-sample outer products, accumulated in sample order. Entry
  // (a, b) sees exactly the multiply-add sequence of its transposed twin, so
  // swapping the branches transposes the matrix bit-for-bit.
  joint.p = Matrix::Zero(q1.q.cols(), q2.q.cols());
  for (int i = 0; i < q1.batch(); ++i) {
    joint.p.noalias() += q1.q.row(i).transpose() * q2.q.row(i);
  }
  joint.p /= static_cast<double>(q1.batch());
  return joint;
}

double loss_jed(const JointDistribution& joint) {
  double acc = 0.0;
  for (int k = 0; k < joint.segments; ++k) {
    auto block = joint.block(k, k);
    double block_sum = 0.0;
    for (int m = 0; m < joint.entries; ++m) block_sum += entropy_term(block(m, m));
    acc += block_sum;
  }
  return acc / static_cast<double>(joint.segments);
}

double loss_jeo(const JointDistribution& joint) {
  if (joint.segments < 2) throw std::invalid_argument("loss_jeo: needs K >= 2 segments");
  double acc = 0.0;
  for (int k1 = 0; k1 < joint.segments; ++k1) {
    for (int k2 = 0; k2 < joint.segments; ++k2) {
      if (k1 == k2) continue;
      auto block = joint.block(k1, k2);
      double block_sum = 0.0;
      for (int m1 = 0; m1 < joint.entries; ++m1) {
        double row = 0.0;
        for (int m2 = 0; m2 < joint.entries; ++m2) row += entropy_term(block(m1, m2));
        block_sum += row;
      }
      acc += block_sum;
    }
  }
  return acc / static_cast<double>(joint.segments * (joint.segments - 1));
}

double loss_ti(const SegmentScores& q1, const SegmentScores& q2) {
  check_pair(q1, q2);
  double acc = 0.0;
  for (int k = 0; k < q1.segments; ++k) {
    auto a = q1.segment(k);
    auto b = q2.segment(k);
    double segment_sum = 0.0;
    for (int i = 0; i < q1.batch(); ++i) {
      double inner = a.row(i).dot(b.row(i));
      segment_sum += std::log(inner + kLogEps);
    }
    acc += segment_sum;
  }
  return -acc / static_cast<double>(q1.batch() * q1.segments);
}

LossGraph build_loss_graph(Tape& tape, ValueId z1, ValueId z2, const SegmentLayout& layout,
                           const LossWeights& weights) {
  const int k_count = layout.segments;
  const int m = layout.entries_per_segment;
  if (k_count < 2) throw std::invalid_argument("build_loss_graph: needs K >= 2 segments");
  for (ValueId z : {z1, z2}) {
    if (tape.value(z).rank() != 2 || tape.value(z).cols() != layout.embed_dim()) {
      throw std::invalid_argument("build_loss_graph: embedding shape " + shape_string(tape.value(z).shape()) +
                                  " does not match K*M = " + std::to_string(layout.embed_dim()));
    }
  }
  const int batch = tape.value(z1).rows();
  if (tape.value(z2).rows() != batch) throw std::invalid_argument("build_loss_graph: branch batch sizes differ");
  if (weights.lambda_ti < 0.0) throw std::invalid_argument("build_loss_graph: lambda must be >= 0");

  std::vector<ValueId> scores1, scores2;
  for (int k = 0; k < k_count; ++k) {
    scores1.push_back(row_softmax(tape, slice(tape, z1, 1, k * m, m)));
    scores2.push_back(row_softmax(tape, slice(tape, z2, 1, k * m, m)));
  }

  NumericArray eye = NumericArray::zeros({m, m});
  for (int i = 0; i < m; ++i) eye.mat()(i, i) = 1.0;
  ValueId diag_mask = tape.input(std::move(eye));

  auto joint_block = [&](int k1, int k2) {
    return scalar_mul(tape, matmul(tape, scores1[static_cast<std::size_t>(k1)],
                                   scores2[static_cast<std::size_t>(k2)], true, false),
                      1.0 / static_cast<double>(batch));
  };
  auto plogp = [&](ValueId block) { return elementwise_mul(tape, block, log_eps(tape, block)); };

  // diagonal entries of diagonal blocks
  ValueId jed{};
  for (int k = 0; k < k_count; ++k) {
    ValueId masked = elementwise_mul(tape, plogp(joint_block(k, k)), diag_mask);
    ValueId block_sum = sum_all(tape, masked);
    jed = k == 0 ? block_sum : add(tape, jed, block_sum);
  }
  jed = scalar_mul(tape, jed, 1.0 / static_cast<double>(k_count));

  // every entry of every off-diagonal block
  ValueId jeo{};
  bool first = true;
  for (int k1 = 0; k1 < k_count; ++k1) {
    for (int k2 = 0; k2 < k_count; ++k2) {
      if (k1 == k2) continue;
      ValueId block_sum = sum_all(tape, plogp(joint_block(k1, k2)));
      jeo = first ? block_sum : add(tape, jeo, block_sum);
      first = false;
    }
  }
  jeo = scalar_mul(tape, jeo, 1.0 / static_cast<double>(k_count * (k_count - 1)));

  // per-segment inner products between the branches
  ValueId ti{};
  for (int k = 0; k < k_count; ++k) {
    ValueId inner = sum_axis(tape, elementwise_mul(tape, scores1[static_cast<std::size_t>(k)],
                                                   scores2[static_cast<std::size_t>(k)]), 1);
    ValueId segment_sum = sum_axis(tape, log_eps(tape, inner), 0);
    ti = k == 0 ? segment_sum : add(tape, ti, segment_sum);
  }
  ti = scalar_mul(tape, ti, -1.0 / static_cast<double>(batch * k_count));

  LossGraph graph;
  graph.jed = jed;
  graph.jeo = jeo;
  graph.ti = ti;
  graph.total = add(tape, add(tape, scalar_mul(tape, jed, weights.use_jed ? 1.0 : 0.0),
                              scalar_mul(tape, jeo, weights.use_jeo ? 1.0 : 0.0)),
                    scalar_mul(tape, ti, weights.lambda_ti));
  return graph;
}

LossBreakdown total_loss(const Matrix& z1, const Matrix& z2, const SegmentLayout& layout,
                         const LossWeights& weights) {
  Tape tape;
  ValueId p1 = tape.parameter(NumericArray::from_matrix(z1), "z1");
  ValueId p2 = tape.parameter(NumericArray::from_matrix(z2), "z2");
  LossGraph graph = build_loss_graph(tape, p1, p2, layout, weights);
  tape.backward(graph.total);

  LossBreakdown out;
  out.jed = tape.value(graph.jed).value();
  out.jeo = tape.value(graph.jeo).value();
  out.ti = tape.value(graph.ti).value();
  out.lambda = weights.lambda_ti;
  out.total = tape.value(graph.total).value();
  out.grad_z1 = tape.adjoint(p1).to_matrix();
  out.grad_z2 = tape.adjoint(p2).to_matrix();
  return out;
}

}  // namespace pjem
