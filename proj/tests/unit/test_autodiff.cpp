#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <sstream>

#include "cdrive/ad/adam.hpp"
#include "cdrive/ad/focal.hpp"
#include "cdrive/ad/gradcheck.hpp"
#include "cdrive/ad/network.hpp"

using namespace cdrive::ad;

namespace {

Matrix random_matrix(int r, int c, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = n(rng);
  return m;
}

}  // namespace

TEST(Tape, SquareGradient) {
  ParamSet ps;
  ps.add("x", Matrix::Constant(1, 1, 3.0));
  Tape t;
  const Var x = t.param(ps, "x");
  t.backward(sum(square(x)));
  EXPECT_DOUBLE_EQ(t.param_gradients().at("x")(0, 0), 6.0);
}

TEST(Tape, RejectsNonScalarLoss) {
  Tape t;
  const Var x = t.constant(Matrix::Ones(2, 1));
  EXPECT_THROW(t.backward(x), std::invalid_argument);
}

TEST(Tape, SoftmaxCrossEntropyGradient) {
  ParamSet ps;
  Matrix z(1, 4);
  z << 0.3, -1.2, 2.0, 0.1;
  ps.add("z", z);
  Tape t;
  t.backward(softmax_cross_entropy(t.param(ps, "z"), 2));
  const Matrix g = t.param_gradients().at("z");
  const Eigen::ArrayXXd p = z.array().exp() / z.array().exp().sum();
  for (int j = 0; j < 4; ++j) EXPECT_NEAR(g(0, j), p(0, j) - (j == 2 ? 1.0 : 0.0), 1e-15);
}

TEST(Tape, FocalGammaZeroIsPlainCrossEntropy) {
  ParamSet ps;
  Matrix z(1, 5);
  z << 0.3, -1.2, 2.0, 0.1, 4.0;
  ps.add("z", z);
  Tape a, b;
  const Var la = softmax_cross_entropy(a.param(ps, "z"), 1, 0.0);
  const Var lb = softmax_cross_entropy(b.param(ps, "z"), 1);
  a.backward(la);
  b.backward(lb);
  EXPECT_EQ(la.value()(0, 0), lb.value()(0, 0));
  const Matrix ga = a.param_gradients().at("z"), gb = b.param_gradients().at("z");
  for (int j = 0; j < 5; ++j) EXPECT_EQ(ga(0, j), gb(0, j));
}

TEST(Tape, FocalGradientFiniteDifference) {
  ParamSet ps;
  ps.add("z", random_matrix(1, 6, 3));
  for (double gamma : {0.5, 2.0, 3.0}) {
    Tape t;
    t.backward(softmax_cross_entropy(t.param(ps, "z"), 4, gamma));
    const auto g = t.param_gradients();
    auto loss = [&](const ParamSet& p) {
      Tape u;
      return softmax_cross_entropy(u.param(p, "z"), 4, gamma).value()(0, 0);
    };
    const auto r = check_gradients(ps, g, loss, 6, 1);
    EXPECT_TRUE(r.failures.empty()) << r.failures.front();
  }
}

TEST(Focal, HandValues) {
  EXPECT_NEAR(focal_from_logp(std::log(0.9), 2.0).loss, 0.01 * -std::log(0.9), 1e-15);
  EXPECT_NEAR(focal_from_logp(std::log(0.9), 2.0).loss, 0.001054, 1e-6);
  EXPECT_NEAR(focal_from_logp(std::log(0.5), 2.0).loss, 0.1733, 1e-4);
  EXPECT_EQ(focal_from_logp(0.0, 2.0).loss, 0.0);
  EXPECT_EQ(focal_from_logp(0.0, 2.0).dloss_dlogp, 0.0);
}

TEST(Network, IdentityAndZero) {
  NetworkSpec id{"id", {Dense{3, 3, Activation::identity}}};
  ParamSet ps;
  init_params(id, ps, 1);
  ps.assign("id.0.W", Matrix::Identity(3, 3));
  ps.assign("id.0.b", Matrix::Zero(1, 3));
  Matrix x(1, 3);
  x << 1.5, -2, 0.25;
  EXPECT_EQ(evaluate(id, ps, x), x);

  NetworkSpec zero{"z", {Dense{3, 2, Activation::relu}}};
  ParamSet pz;
  init_params(zero, pz, 1, true);
  EXPECT_EQ(evaluate(zero, pz, x), Matrix::Zero(1, 2));
}

TEST(Network, HandComputedTwoLayer) {
  NetworkSpec spec{"n", {Dense{2, 2, Activation::relu}, Dense{2, 1, Activation::tanh}}};
  ParamSet ps;
  init_params(spec, ps, 7);
  Matrix W1(2, 2), b1(1, 2), W2(2, 1), b2(1, 1);
  W1 << 0.5, -1.0, 2.0, 0.25;
  b1 << 0.1, 0.2;
  W2 << 1.5, -0.5;
  b2 << -0.3;
  ps.assign("n.0.W", W1);
  ps.assign("n.0.b", b1);
  ps.assign("n.1.W", W2);
  ps.assign("n.1.b", b2);
  Matrix x(1, 2);
  x << 1, -1;
  // h = relu([1*0.5 + -1*2 + 0.1, 1*-1 + -1*0.25 + 0.2]) = relu([-1.4, -1.05]) = [0, 0]
  // y = tanh(0*1.5 + 0*-0.5 - 0.3) = tanh(-0.3)
  EXPECT_NEAR(evaluate(spec, ps, x)(0, 0), std::tanh(-0.3), 1e-15);
  x << -1, 1;
  // h = relu([-0.5 + 2 + 0.1, 1 + 0.25 + 0.2]) = [1.6, 1.45]
  // y = tanh(1.6*1.5 - 1.45*0.5 - 0.3) = tanh(1.375)
  EXPECT_NEAR(evaluate(spec, ps, x)(0, 0), std::tanh(1.375), 1e-15);
}

TEST(Network, DimensionMismatch) {
  NetworkSpec spec{"n", {Dense{2, 2, Activation::relu}}};
  ParamSet ps;
  init_params(spec, ps, 1);
  EXPECT_THROW(evaluate(spec, ps, Matrix::Zero(1, 3)), std::invalid_argument);
  NetworkSpec bad{"b", {Dense{2, 3, Activation::relu}, Dense{2, 1, Activation::relu}}};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(Network, GroupsNormalize) {
  NetworkSpec spec{"c", {Dense{4, 8, Activation::identity}, SoftmaxGroup{0, 3}, SoftmaxGroup{3, 2}, SigmoidGroup{5, 3}}};
  ParamSet ps;
  init_params(spec, ps, 2);
  const Matrix y = evaluate(spec, ps, random_matrix(5, 4, 9));
  for (int r = 0; r < 5; ++r) {
    EXPECT_NEAR(y.row(r).segment(0, 3).sum(), 1.0, 1e-12);
    EXPECT_NEAR(y.row(r).segment(3, 2).sum(), 1.0, 1e-12);
    for (int j = 5; j < 8; ++j) {
      EXPECT_GT(y(r, j), 0.0);
      EXPECT_LT(y(r, j), 1.0);
    }
  }
}

TEST(Network, GruGradientsMatchFiniteDifferences) {
  NetworkSpec spec{"g", {Gru{3, 4}, Dense{4, 2, Activation::identity}}};
  ParamSet ps;
  init_params(spec, ps, 11);
  NetworkInput in;
  for (int s = 0; s < 3; ++s) in.sequence.push_back(random_matrix(1, 3, 100 + s));
  const Matrix target = random_matrix(1, 2, 5);
  auto head = [&](Var out) { return sum(square(sub(out, out.tape->constant(target)))); };
  const auto g = gradients(spec, ps, in, head);
  auto loss = [&](const ParamSet& p) {
    Tape t;
    return head(forward(t, spec, p, in)).value()(0, 0);
  };
  // every scalar of every array
  const auto r = check_gradients(ps, g, loss, 1 << 20, 3);
  EXPECT_EQ(r.checked, static_cast<int>(ps.scalar_count()));
  EXPECT_TRUE(r.failures.empty()) << r.failures.front();
}

TEST(Network, ConcatAuxAndBatchGradients) {
  NetworkSpec spec{"e", {Gru{2, 3}, Concat{2}, Dense{5, 4, Activation::relu}, Dense{4, 1, Activation::tanh}}};
  ParamSet ps;
  init_params(spec, ps, 21);
  NetworkInput in;
  for (int s = 0; s < 4; ++s) in.sequence.push_back(random_matrix(6, 2, 200 + s));
  in.aux = random_matrix(1, 2, 17);
  auto head = [](Var out) { return mean(square(out)); };
  const auto g = gradients(spec, ps, in, head);
  auto loss = [&](const ParamSet& p) {
    Tape t;
    return head(forward(t, spec, p, in)).value()(0, 0);
  };
  const auto r = check_gradients(ps, g, loss, 1 << 20, 4);
  EXPECT_TRUE(r.failures.empty()) << r.failures.front();
}

TEST(Network, FrozenArraysHaveNoGradient) {
  NetworkSpec spec{"n", {Dense{2, 2, Activation::relu}, Dense{2, 1, Activation::identity}}};
  ParamSet ps;
  init_params(spec, ps, 3);
  ps.set_trainable_prefix("n.0.", false);
  const auto g = gradients(spec, ps, {random_matrix(1, 2, 1), {}, {}}, [](Var o) { return sum(o); });
  EXPECT_FALSE(g.count("n.0.W"));
  EXPECT_FALSE(g.count("n.0.b"));
  EXPECT_TRUE(g.count("n.1.W"));
}

TEST(Network, PoolingOps) {
  ParamSet ps;
  Matrix x(3, 2);
  x << 1, 5, 4, 2, 4, -1;
  ps.add("x", x);
  Tape t;
  const Var v = t.param(ps, "x");
  const Var m = max_rows(v);
  EXPECT_EQ(m.value()(0, 0), 4);
  EXPECT_EQ(m.value()(0, 1), 5);
  t.backward(sum(add(m, mean_rows(v))));
  const Matrix g = t.param_gradients().at("x");
  // ties go to the lowest row
  EXPECT_DOUBLE_EQ(g(1, 0), 1.0 + 1.0 / 3);
  EXPECT_DOUBLE_EQ(g(2, 0), 1.0 / 3);
  EXPECT_DOUBLE_EQ(g(0, 1), 1.0 + 1.0 / 3);
  Tape e;
  EXPECT_EQ(max_rows(e.constant(Matrix::Zero(0, 3))).value(), Matrix::Zero(1, 3));
}

TEST(Adam, ZeroGradientLeavesParams) {
  ParamSet ps;
  ps.add("w", random_matrix(2, 2, 1));
  const Matrix before = ps.value("w");
  AdamState st;
  adam_step(ps, {{"w", Matrix::Zero(2, 2)}}, st);
  EXPECT_EQ(ps.value("w"), before);
}

TEST(Adam, FirstStepMagnitude) {
  ParamSet ps;
  ps.add("w", Matrix::Zero(1, 3));
  Matrix g(1, 3);
  g << 0.5, -2.0, 1e-3;
  AdamState st;
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  adam_step(ps, {{"w", g}}, st, cfg);
  // t = 1: m_hat = g, v_hat = g^2, update = -lr * g / (|g| + eps)
  for (int j = 0; j < 3; ++j)
    EXPECT_NEAR(ps.value("w")(0, j), -0.01 * g(0, j) / (std::abs(g(0, j)) + 1e-8), 1e-15);
}

TEST(Adam, FrozenUntouchedAndDivergence) {
  ParamSet ps;
  ps.add("a", Matrix::Ones(1, 2), false);
  ps.add("b", Matrix::Ones(1, 2));
  AdamState st;
  adam_step(ps, {{"a", Matrix::Ones(1, 2)}, {"b", Matrix::Ones(1, 2)}}, st);
  EXPECT_EQ(ps.value("a"), Matrix::Ones(1, 2));
  EXPECT_NE(ps.value("b"), Matrix::Ones(1, 2));
  const Matrix b = ps.value("b");
  Matrix bad = Matrix::Ones(1, 2);
  bad(0, 1) = std::nan("");
  try {
    adam_step(ps, {{"b", bad}}, st);
    FAIL();
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("divergence"), std::string::npos);
  }
  EXPECT_EQ(ps.value("b"), b);
  EXPECT_EQ(st.step, 1);
}

TEST(Params, CheckpointRoundTripAndChecksum) {
  ParamSet ps;
  ps.add("H.obj.0.W", random_matrix(3, 2, 4));
  ps.add("R.0.b", random_matrix(1, 5, 5), false);
  std::stringstream ss;
  write_params(ss, ps);
  const ParamSet back = read_params(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back.value("H.obj.0.W"), ps.value("H.obj.0.W"));
  EXPECT_EQ(back.value("R.0.b"), ps.value("R.0.b"));
  EXPECT_FALSE(back.trainable(back.index_of("R.0.b")));
  EXPECT_EQ(back.checksum(), ps.checksum());
  auto only_h = [](const std::string& n) { return n.rfind("H.", 0) == 0; };
  ParamSet changed = back;
  changed.data(changed.index_of("R.0.b"))(0, 0) += 1.0;
  EXPECT_EQ(changed.checksum(only_h), ps.checksum(only_h));
  EXPECT_NE(changed.checksum(), ps.checksum());
  EXPECT_THROW(ps.assign("R.0.b", Matrix::Zero(2, 2)), std::invalid_argument);
  std::stringstream junk("nope");
  EXPECT_THROW(read_params(junk), std::runtime_error);
}
