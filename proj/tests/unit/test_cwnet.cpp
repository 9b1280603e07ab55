#include <gtest/gtest.h>

#include <cmath>

#include "cdrive/cwnet/cwnet.hpp"
#include "cdrive/data/dataset.hpp"

using namespace cdrive;
using namespace cdrive::cwnet;
using ad::Matrix;

namespace {

ConceptLabels labels_for(const ConceptSchema& s, int k, std::vector<int> group, std::vector<int> binary) {
  ConceptLabels l;
  l.candidates = k;
  l.groups = int(s.groups.size());
  l.binaries = int(s.binaries.size());
  for (int i = 0; i < k; ++i) {
    l.group.insert(l.group.end(), group.begin(), group.end());
    l.binary.insert(l.binary.end(), binary.begin(), binary.end());
  }
  return l;
}

// Direct transcription of the loss: per candidate, half of (mean group CE +
// mean binary CE), averaged over candidates.
double loss_oracle(const Matrix& logits, const ConceptLabels& l, const ConceptSchema& s, double gamma) {
  auto term = [&](double p) { return std::pow(1 - p, gamma) * -std::log(p); };
  double total = 0;
  for (int i = 0; i < l.candidates; ++i) {
    double g = 0, b = 0;
    int col = 0;
    for (int j = 0; j < l.groups; ++j) {
      const int n = int(s.groups[j].members.size());
      double z = 0;
      for (int m = 0; m < n; ++m) z += std::exp(logits(i, col + m));
      g += term(std::exp(logits(i, col + l.group_label(i, j))) / z);
      col += n;
    }
    for (int j = 0; j < l.binaries; ++j) {
      const double p1 = 1 / (1 + std::exp(-logits(i, col + j)));
      b += term(l.binary_label(i, j) ? p1 : 1 - p1);
    }
    total += 0.5 * ((l.groups ? g / l.groups : 0) + (l.binaries ? b / l.binaries : 0));
  }
  return total / l.candidates;
}

}  // namespace

TEST(Schema, Layout) {
  const auto s = ConceptSchema::dataset1();
  EXPECT_EQ(s.logit_count(), 8);
  EXPECT_EQ(s.group_start(1), 3);
  EXPECT_EQ(s.binary_start(), 5);
  EXPECT_EQ(s.column_of("CLOSE"), 7);
  EXPECT_EQ(s.column_of("BIKE"), -1);
  EXPECT_EQ(ConceptSchema::dataset2().column_of("BIKE"), 8);
  EXPECT_THROW(ConceptSchema::by_tag("dataset3"), std::invalid_argument);
}

TEST(Activate, ZeroLogitsAndSaturation) {
  const auto s = ConceptSchema::dataset1();
  const auto a = activate(Matrix::Zero(1, 8), s).activations;
  for (int c = 0; c < 3; ++c) EXPECT_NEAR(a(0, c), 1.0 / 3, 1e-15);
  for (int c = 3; c < 8; ++c) EXPECT_NEAR(a(0, c), 0.5, 1e-15);
  Matrix big = Matrix::Zero(1, 8);
  big(0, 1) = 1e6;
  EXPECT_NEAR(activate(big, s).activations(0, 1), 1.0, 1e-9);
  Matrix fix = Matrix::Zero(1, 8);
  fix(0, 0) = 1;
  fix(0, 2) = -1;
  const auto f = activate(fix, s).activations;
  EXPECT_NEAR(f(0, 0), 0.6652, 1e-4);
  EXPECT_NEAR(f(0, 1), 0.2447, 1e-4);
  EXPECT_NEAR(f(0, 2), 0.0900, 1e-4);
  EXPECT_THROW(activate(Matrix::Zero(1, 7), s), std::invalid_argument);
}

TEST(ConceptLoss, UniformFixture) {
  const auto s = ConceptSchema::dataset1();
  const auto l = labels_for(s, 1, {2, 0}, {0, 1, 0});
  const double expected = 0.5 * ((std::log(3.0) + std::log(2.0)) / 2 + std::log(2.0));
  EXPECT_NEAR(expected, 0.7945, 1e-4);
  EXPECT_NEAR(concept_loss(Matrix::Zero(1, 8), l, s), expected, 1e-12);
  // Duplicating candidates leaves the mean unchanged.
  EXPECT_NEAR(concept_loss(Matrix::Zero(4, 8), labels_for(s, 4, {2, 0}, {0, 1, 0}), s), expected, 1e-12);
}

TEST(ConceptLoss, PerfectPredictionsAndOracle) {
  const auto s = ConceptSchema::dataset1();
  const auto l = labels_for(s, 1, {1, 1}, {1, 0, 1});
  Matrix perfect(1, 8);
  perfect << -50, 50, -50, -50, 50, 50, -50, 50;
  EXPECT_NEAR(concept_loss(perfect, l, s), 0.0, 1e-15);

  Matrix z = Matrix::Random(5, 8) * 3;
  ConceptLabels mixed = labels_for(s, 5, {0, 1}, {1, 0, 1});
  mixed.group[4] = 2;
  mixed.binary[7] = 1;
  for (double g : {0.0, 1.0, 2.0}) EXPECT_NEAR(concept_loss(z, mixed, s, g), loss_oracle(z, mixed, s, g), 1e-12);

  const auto s2 = ConceptSchema::dataset2();
  ConceptLabels l2 = labels_for(s2, 3, {}, {0, 1, 0, 0, 1, 1, 0, 0, 0, 1});
  Matrix z2 = Matrix::Random(3, 10);
  EXPECT_NEAR(concept_loss(z2, l2, s2, 2.0), loss_oracle(z2, l2, s2, 2.0), 1e-12);
}

TEST(ConceptLoss, TapeMatchesValueAndGradient) {
  const auto s = ConceptSchema::dataset1();
  ConceptLabels l = labels_for(s, 3, {1, 0}, {1, 0, 0});
  l.group[2] = 2;
  const Matrix z = Matrix::Random(3, 8);
  for (double gamma : {0.0, 2.0}) {
    ad::Tape t2;
    ad::ParamSet p;
    p.add("x", z);
    auto v = t2.param(p, "x");
    auto loss = concept_loss(v, l, s, gamma);
    EXPECT_NEAR(loss.value()(0, 0), concept_loss(z, l, s, gamma), 1e-12);
    t2.backward(loss);
    const Matrix g = t2.grad(v.id);
    const double eps = 1e-6;
    for (int i = 0; i < 3; ++i)
      for (int c = 0; c < 8; ++c) {
        Matrix a = z, b = z;
        a(i, c) += eps;
        b(i, c) -= eps;
        const double num = (concept_loss(a, l, s, gamma) - concept_loss(b, l, s, gamma)) / (2 * eps);
        EXPECT_NEAR(g(i, c), num, 1e-7);
      }
  }
}

TEST(ConceptLoss, RejectsShapeMismatch) {
  const auto s = ConceptSchema::dataset1();
  const auto l = labels_for(s, 2, {0, 0}, {0, 0, 0});
  EXPECT_THROW(concept_loss(Matrix::Zero(3, 8), l, s), std::invalid_argument);
  EXPECT_THROW(concept_loss(Matrix::Zero(2, 9), l, s), std::invalid_argument);
  auto bad = l;
  bad.group[0] = 3;
  EXPECT_THROW(concept_loss(Matrix::Zero(2, 8), bad, s), std::invalid_argument);
}

TEST(Focal, Values) {
  EXPECT_NEAR(focal_scale(0.9, 2).loss, 0.001054, 1e-6);
  EXPECT_NEAR(focal_scale(0.5, 2).loss, 0.1733, 1e-4);
  for (double p : {0.01, 0.3, 0.77, 1.0}) EXPECT_EQ(focal_scale(p, 0).loss, -std::log(p));
  const auto z = focal_scale(0.0, 2);
  EXPECT_TRUE(z.clamped);
  EXPECT_TRUE(std::isfinite(z.loss));
  EXPECT_THROW(focal_scale(1.5, 2), std::invalid_argument);
}

TEST(JointLoss, ExactMean) {
  EXPECT_EQ(joint_loss(0, 0).total, 0.0);
  const auto r = joint_loss(0.7945, std::log(146.0));
  EXPECT_NEAR(r.total, 2.8890, 1e-4);
  EXPECT_EQ(r.total, (0.7945 + std::log(146.0)) / 2);
  for (double x : {0.1, 3.7, 1e-9}) EXPECT_EQ(joint_loss(x, x).total, x);
  EXPECT_THROW(joint_loss(std::nan(""), 1), std::invalid_argument);
  EXPECT_THROW(joint_loss(1, INFINITY), std::invalid_argument);
}

TEST(Explanation, PercentagesAndTopConcept) {
  const auto s = ConceptSchema::dataset1();
  Matrix a(1, 8);
  a << 0.1, 0.2, 0.7, 0.873, 0.127, 0.95, 0.2, 0.6;
  planner::Ranking r;
  r.chosen_index = 0;
  r.chosen.dt = 0.5;
  r.chosen.waypoints = {{0, 0, 0, 4.0}, {1, 0, 0, 0.0}};
  const auto e = render_explanation(a, r, s, 4.0);
  EXPECT_EQ(e.percentages, (std::vector<int>{10, 20, 70, 87, 13, 95, 20, 60}));
  EXPECT_EQ(e.top_concept, "ASV");
  EXPECT_EQ(e.action, "stop");
  EXPECT_EQ(e.sentence.rfind("I chose to stop", 0), 0u);
  EXPECT_NE(e.sentence.find(concept_description("ASV")), std::string::npos);
}

TEST(Modes, StringRoundTrip) {
  for (auto m : {Mode::causal, Mode::parallel}) EXPECT_EQ(mode_from_string(to_string(m)), m);
  EXPECT_THROW(mode_from_string("serial"), std::invalid_argument);
}
