#include <doctest.h>

#include <cmath>

#include "pjem/jemloss.hpp"
#include "pjem/rng.hpp"
#include "test_support.hpp"

using namespace pjem;
using pjem::testing::make_optimum_scores;
using pjem::testing::random_embeddings;
using pjem::testing::random_scores;

namespace {

SegmentScores scores_from_rows(int segments, int entries, const Matrix& q) {
  SegmentScores s;
  s.segments = segments;
  s.entries = entries;
  s.q = q;
  return s;
}

JointDistribution joint_from_matrix(int segments, int entries, const Matrix& p) {
  JointDistribution joint;
  joint.segments = segments;
  joint.entries = entries;
  joint.p = p;
  return joint;
}

SegmentLayout layout_of(int k, int m) {
  SegmentLayout layout;
  layout.segments = k;
  layout.entries_per_segment = m;
  return layout;
}

}  // namespace

TEST_CASE("segment_softmax: uniform logits give uniform scores") {
  SegmentScores s = segment_softmax(Matrix::Zero(3, 8), layout_of(2, 4));
  CHECK((s.q.array() - 0.25).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("segment_softmax: shifting one segment's logits changes nothing") {
  Rng rng(3);
  SegmentLayout layout = layout_of(3, 4);
  Matrix z = random_embeddings(rng, 5, layout);
  Matrix shifted = z;
  shifted.middleCols(4, 4).array() += 13.5;
  SegmentScores a = segment_softmax(z, layout);
  SegmentScores b = segment_softmax(shifted, layout);
  CHECK((a.q - b.q).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("segment_softmax: hand value for [ln 3, 0]") {
  Matrix z(1, 2);
  z << std::log(3.0), 0.0;
  SegmentScores s = segment_softmax(z, layout_of(1, 2));
  CHECK(s.q(0, 0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(s.q(0, 1) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("joint_distribution: single outer product") {
  Matrix q1(1, 2), q2(1, 2);
  q1 << 1, 0;
  q2 << 0, 1;
  JointDistribution joint = joint_distribution(scores_from_rows(1, 2, q1), scores_from_rows(1, 2, q2));
  CHECK(joint.p(0, 0) == 0.0);
  CHECK(joint.p(0, 1) == 1.0);
  CHECK(joint.p(1, 0) == 0.0);
  CHECK(joint.p(1, 1) == 0.0);
}

TEST_CASE("joint_distribution: uniform scores factorize") {
  Matrix q = Matrix::Constant(4, 2, 0.5);
  JointDistribution joint = joint_distribution(scores_from_rows(1, 2, q), scores_from_rows(1, 2, q));
  CHECK((joint.p.array() - 0.25).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("joint_distribution: average of outer products") {
  Matrix q(2, 2);
  q << 1, 0, 0, 1;
  JointDistribution joint = joint_distribution(scores_from_rows(1, 2, q), scores_from_rows(1, 2, q));
  CHECK(joint.p(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(joint.p(0, 1) == 0.0);
  CHECK(joint.p(1, 0) == 0.0);
  CHECK(joint.p(1, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("joint_distribution: empty batch is rejected") {
  Matrix q(0, 2);
  CHECK_THROWS_AS(joint_distribution(scores_from_rows(1, 2, q), scores_from_rows(1, 2, q)),
                  std::invalid_argument);
}

TEST_CASE("loss_jed values") {
  Matrix p(2, 2);
  p << 0.5, 0.0, 0.0, 0.5;
  CHECK(loss_jed(joint_from_matrix(1, 2, p)) == doctest::Approx(-std::log(2.0)).epsilon(1e-9));
  p << 1.0, 0.0, 0.0, 0.0;
  CHECK(std::abs(loss_jed(joint_from_matrix(1, 2, p))) <= 1e-6);
  p << 0.7, 0.0, 0.0, 0.3;
  CHECK(loss_jed(joint_from_matrix(1, 2, p)) == doctest::Approx(-0.610864).epsilon(1e-5));
}

TEST_CASE("loss_jeo values") {
  // K=2, M=2: the two off-diagonal blocks carry the loss
  Matrix p = Matrix::Zero(4, 4);
  auto fill_offdiag = [&](double p01, double p02, double p03, double p04, bool second_uniform) {
    p.block(0, 2, 2, 2) << p01, p02, p03, p04;
    if (second_uniform) {
      p.block(2, 0, 2, 2) << 0.25, 0.25, 0.25, 0.25;
    } else {
      p.block(2, 0, 2, 2) << p01, p02, p03, p04;
    }
  };
  fill_offdiag(0.25, 0.25, 0.25, 0.25, true);
  CHECK(loss_jeo(joint_from_matrix(2, 2, p)) == doctest::Approx(-1.386294).epsilon(1e-5));
  fill_offdiag(1.0, 0.0, 0.0, 0.0, false);
  CHECK(std::abs(loss_jeo(joint_from_matrix(2, 2, p))) <= 1e-6);
  fill_offdiag(1.0, 0.0, 0.0, 0.0, true);  // one uniform block, one collapsed block
  CHECK(loss_jeo(joint_from_matrix(2, 2, p)) == doctest::Approx(-0.693147).epsilon(1e-5));

  Matrix single(2, 2);
  CHECK_THROWS_AS(loss_jeo(joint_from_matrix(1, 2, single)), std::invalid_argument);
}

TEST_CASE("loss_ti values") {
  Matrix one_hot(1, 2);
  one_hot << 1, 0;
  CHECK(std::abs(loss_ti(scores_from_rows(1, 2, one_hot), scores_from_rows(1, 2, one_hot))) <= 1e-6);

  Matrix soft(1, 2);
  soft << 0.6, 0.4;
  CHECK(loss_ti(scores_from_rows(1, 2, one_hot), scores_from_rows(1, 2, soft)) ==
        doctest::Approx(0.510826).epsilon(1e-5));

  Matrix other(1, 2);
  other << 0, 1;
  CHECK(loss_ti(scores_from_rows(1, 2, one_hot), scores_from_rows(1, 2, other)) ==
        doctest::Approx(-std::log(kLogEps)).epsilon(1e-6));
}

TEST_CASE("total_loss with lambda 0 drops the invariance term exactly") {
  Rng rng(4);
  SegmentLayout layout = layout_of(3, 4);
  Matrix z1 = random_embeddings(rng, 4, layout);
  Matrix z2 = random_embeddings(rng, 4, layout);
  LossWeights weights;
  weights.lambda_ti = 0.0;
  LossBreakdown out = total_loss(z1, z2, layout, weights);
  CHECK(out.total == out.jed + out.jeo);
  CHECK(out.ti > 0.0);  // still reported
}

TEST_CASE("total_loss matches the plain route and sums its terms") {
  Rng rng(5);
  SegmentLayout layout = layout_of(3, 4);
  Matrix z1 = random_embeddings(rng, 6, layout);
  Matrix z2 = random_embeddings(rng, 6, layout);
  LossBreakdown out = total_loss(z1, z2, layout);

  SegmentScores q1 = segment_softmax(z1, layout);
  SegmentScores q2 = segment_softmax(z2, layout);
  JointDistribution joint = joint_distribution(q1, q2);
  CHECK(out.jed == doctest::Approx(loss_jed(joint)).epsilon(1e-12));
  CHECK(out.jeo == doctest::Approx(loss_jeo(joint)).epsilon(1e-12));
  CHECK(out.ti == doctest::Approx(loss_ti(q1, q2)).epsilon(1e-12));
  CHECK(std::abs(out.total - (out.jed + out.jeo + out.lambda * out.ti)) <= 1e-12);
  CHECK(out.grad_z1.rows() == 6);
  CHECK(out.grad_z1.cols() == layout.embed_dim());
  CHECK(out.grad_z2.allFinite());
}

TEST_CASE("the independent-segment optimum attains every bound") {
  for (auto [k, m] : {std::pair{2, 2}, {2, 4}, {2, 8}, {4, 4}, {4, 8}}) {
    SegmentScores q = make_optimum_scores(k, m);
    JointDistribution joint = joint_distribution(q, q);
    double log_m = std::log(static_cast<double>(m));
    CHECK(loss_jed(joint) == doctest::Approx(-log_m).epsilon(1e-9));
    CHECK(loss_jeo(joint) == doctest::Approx(-2.0 * log_m).epsilon(1e-9));
    CHECK(std::abs(loss_ti(q, q)) <= 1e-6);
  }
}

TEST_CASE("optimum scores fold into total_loss at -3 ln M") {
  // Drive the raw-embedding route with logits whose softmax is numerically
  // one-hot, mirroring the exact-score construction.
  int k = 2, m = 4;
  SegmentScores target = make_optimum_scores(k, m);
  Matrix z = (target.q.array() * 80.0).matrix();  // softmax(80, 0, ...) ~ one-hot
  SegmentLayout layout = layout_of(k, m);
  LossBreakdown out = total_loss(z, z, layout);
  CHECK(out.total == doctest::Approx(-3.0 * std::log(4.0)).epsilon(1e-6));
}

TEST_CASE("gradients of the total loss match central differences") {
  Rng rng(6);
  SegmentLayout layout = layout_of(3, 4);
  NumericArray z1 = NumericArray::from_matrix(random_embeddings(rng, 4, layout, 2.0));
  NumericArray z2 = NumericArray::from_matrix(random_embeddings(rng, 4, layout, 2.0));
  NumericArray params[] = {z1, z2};
  double err = check_gradients(
      [&](Tape& t, std::span<const ValueId> p) {
        return build_loss_graph(t, p[0], p[1], layout, LossWeights{}).total;
      },
      params, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("invariance-term gradients alone match central differences") {
  Rng rng(7);
  SegmentLayout layout = layout_of(2, 3);
  Matrix z = random_embeddings(rng, 3, layout, 2.0);
  NumericArray params[] = {NumericArray::from_matrix(z), NumericArray::from_matrix(z)};
  double err = check_gradients(
      [&](Tape& t, std::span<const ValueId> p) {
        return build_loss_graph(t, p[0], p[1], layout, LossWeights{}).ti;
      },
      params, 1e-5);
  CHECK(err < 1e-4);
}

TEST_CASE("entropy bounds hold over random score batches") {
  Rng rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    int k = 2 + static_cast<int>(rng.below(4));
    int m = 3 + static_cast<int>(rng.below(6));  // diagonal sub-distribution bound needs M >= 3
    int n = 1 + static_cast<int>(rng.below(8));
    SegmentLayout layout = layout_of(k, m);
    double scale = trial % 3 == 2 ? 30.0 : 4.0;  // include near-one-hot batches
    SegmentScores q1 = random_scores(rng, n, layout, scale);
    SegmentScores q2 = random_scores(rng, n, layout, scale);
    JointDistribution joint = joint_distribution(q1, q2);
    double log_m = std::log(static_cast<double>(m));
    double jed = loss_jed(joint);
    double jeo = loss_jeo(joint);
    CHECK(jed >= -log_m - 1e-6);
    CHECK(jed <= 1e-6);
    CHECK(jeo >= -2.0 * log_m - 1e-6);
    CHECK(jeo <= 1e-6);
    CHECK(loss_ti(q1, q2) >= -1e-9);
  }
}

TEST_CASE("swapping branches transposes blocks and leaves losses unchanged") {
  Rng rng(9);
  for (int trial = 0; trial < 25; ++trial) {
    int k = 2 + static_cast<int>(rng.below(3));
    int m = 2 + static_cast<int>(rng.below(5));
    int n = 1 + static_cast<int>(rng.below(6));
    SegmentLayout layout = layout_of(k, m);
    SegmentScores q1 = random_scores(rng, n, layout);
    SegmentScores q2 = random_scores(rng, n, layout);
    JointDistribution fwd = joint_distribution(q1, q2);
    JointDistribution swp = joint_distribution(q2, q1);
    for (int k1 = 0; k1 < k; ++k1) {
      for (int k2 = 0; k2 < k; ++k2) {
        CHECK(Matrix(swp.block(k1, k2)) == Matrix(fwd.block(k2, k1).transpose()));
      }
    }
    CHECK(std::abs(loss_jed(fwd) - loss_jed(swp)) <= 1e-12);
    CHECK(std::abs(loss_jeo(fwd) - loss_jeo(swp)) <= 1e-12);
    CHECK(std::abs(loss_ti(q1, q2) - loss_ti(q2, q1)) <= 1e-12);
  }
}

TEST_CASE("the invariance term separates matched one-hots from everything else") {
  // coincident one-hots: zero within eps effects
  SegmentScores q = make_optimum_scores(2, 4);
  CHECK(std::abs(loss_ti(q, q)) <= 1e-6);

  // same one-hots slightly blended: strictly positive
  SegmentScores blended = q;
  blended.q = 0.9 * q.q + Matrix::Constant(q.q.rows(), q.q.cols(), 0.1 / 4.0);
  double drifted = loss_ti(q, blended);
  CHECK(drifted > 1e-3);

  // coincident but not one-hot: strictly positive
  SegmentScores soft = blended;
  CHECK(loss_ti(soft, soft) > 1e-3);
}
