#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "modedec/nn.hpp"
#include "modedec/optim.hpp"

using namespace modedec;
using nn::PadMode;

namespace {

// Naive reference convolution with explicit padding.
Eigen::VectorXd conv_ref(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                         PadMode pad) {
  const int n = static_cast<int>(x.rows());
  const int c_in = static_cast<int>(x.cols());
  const int k = static_cast<int>(w.cols());
  const int pad_left = (k - 1) / 2;
  auto sample = [&](int i, int c) -> double {
    if (i >= 0 && i < n) return x(i, c);
    if (pad == PadMode::zero) return 0.0;
    // reflect without repeating the border sample
    int j = i;
    while (j < 0 || j >= n) j = j < 0 ? -j : 2 * (n - 1) - j;
    return x(j, c);
  };
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (int t = 0; t < n; ++t)
    for (int c = 0; c < c_in; ++c)
      for (int j = 0; j < k; ++j) out[t] += sample(t - pad_left + j, c) * w(c, j);
  return out;
}

// Naive reference attention with explicit rank-1 embeddings.
Eigen::VectorXd attention_ref(const Eigen::VectorXd& x,
                              const nn::AttentionParams& p) {
  const Eigen::MatrixXd q = x * p.w_q.transpose();  // N x d
  const Eigen::MatrixXd k = x * p.w_k.transpose();
  const Eigen::MatrixXd v = x * p.w_v.transpose();
  Eigen::MatrixXd score = q * k.transpose() / std::sqrt(double(p.d_att()));
  Eigen::MatrixXd a(score.rows(), score.cols());
  for (Eigen::Index r = 0; r < score.rows(); ++r) {
    const Eigen::ArrayXd e = (score.row(r).array() - score.row(r).maxCoeff()).exp();
    a.row(r) = (e / e.sum()).matrix().transpose();
  }
  return (a * v * p.w_o).array() + p.b_o;
}

}  // namespace

TEST_CASE("conv1d_same on a hand example, zero padding") {
  Eigen::MatrixXd x(4, 1);
  x << 1.0, 2.0, 3.0, 4.0;
  Eigen::MatrixXd w(1, 3);
  w << 1.0, 10.0, 100.0;  // pad_left = 1
  const Eigen::VectorXd out = nn::conv1d_same(x, w, PadMode::zero);
  // out[t] = 1*x[t-1] + 10*x[t] + 100*x[t+1]
  Eigen::VectorXd expect(4);
  expect << 0 + 10 + 200, 1 + 20 + 300, 2 + 30 + 400, 3 + 40 + 0;
  CHECK(out.isApprox(expect));
}

TEST_CASE("conv1d_same reflect padding mirrors without repeating the border") {
  Eigen::MatrixXd x(4, 1);
  x << 1.0, 2.0, 3.0, 4.0;
  Eigen::MatrixXd w(1, 3);
  w << 1.0, 0.0, 0.0;  // picks x[t-1]
  const Eigen::VectorXd out = nn::conv1d_same(x, w, PadMode::reflect);
  Eigen::VectorXd expect(4);
  expect << 2.0, 1.0, 2.0, 3.0;  // x[-1] reflects to x[1]
  CHECK(out.isApprox(expect));
}

TEST_CASE("conv1d_same even kernel uses pad_left = floor((K-1)/2)") {
  Eigen::MatrixXd x(3, 1);
  x << 1.0, 2.0, 3.0;
  Eigen::MatrixXd w(1, 2);
  w << 1.0, 1.0;  // pad_left = 0: out[t] = x[t] + x[t+1]
  const Eigen::VectorXd out = nn::conv1d_same(x, w, PadMode::zero);
  Eigen::VectorXd expect(3);
  expect << 3.0, 5.0, 3.0;
  CHECK(out.isApprox(expect));
}

TEST_CASE("conv1d_same multi-channel sums channels, matches naive reference") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5 + trial;
    const int c = 1 + trial % 4;
    const int k = 1 + trial % 7;
    Eigen::MatrixXd x(n, c), w(c, k);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < c; ++j) x(i, j) = gauss(rng);
    for (int i = 0; i < c; ++i)
      for (int j = 0; j < k; ++j) w(i, j) = gauss(rng);
    for (PadMode pad : {PadMode::zero, PadMode::reflect}) {
      CHECK(nn::conv1d_same(x, w, pad).isApprox(conv_ref(x, w, pad), 1e-12));
    }
  }
}

TEST_CASE("conv1d_same validates shapes") {
  Eigen::MatrixXd x(4, 2), w(3, 3);
  x.setZero();
  w.setZero();
  CHECK_THROWS_AS(nn::conv1d_same(x, w), invalid_input);
}

TEST_CASE("activations") {
  Eigen::MatrixXd x(2, 1);
  x << -1.0, 0.5;
  CHECK(nn::relu_act(x)(0, 0) == doctest::Approx(0.0));
  CHECK(nn::relu_act(x)(1, 0) == doctest::Approx(0.5));
  CHECK(nn::tanh_act(x)(0, 0) == doctest::Approx(std::tanh(-1.0)));
  CHECK(nn::activate(x, nn::Activation::tanh).isApprox(nn::tanh_act(x)));
  CHECK(nn::activate(x, nn::Activation::relu).isApprox(nn::relu_act(x)));
}

TEST_CASE("softmax_vec is positive, sums to one, and is shift invariant") {
  Eigen::VectorXd w(3);
  w << 1.0, 2.0, 3.0;
  const Eigen::VectorXd s = nn::softmax_vec(w);
  CHECK(s.sum() == doctest::Approx(1.0));
  CHECK(s.minCoeff() > 0.0);
  const double e = std::exp(1.0);
  CHECK(s[1] / s[0] == doctest::Approx(e));
  CHECK(s[2] / s[1] == doctest::Approx(e));
  CHECK(nn::softmax_vec(w.array() + 500.0).isApprox(s, 1e-12));
  // large magnitudes do not overflow
  Eigen::VectorXd big(2);
  big << 1000.0, 1001.0;
  CHECK(std::isfinite(nn::softmax_vec(big).sum()));
}

TEST_CASE("attention matches the naive dense reference") {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> gauss;
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 8 + 3 * trial;
    const int d = 1 + trial % 5;
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x[i] = gauss(rng);
    nn::AttentionParams p;
    p.w_q.resize(d);
    p.w_k.resize(d);
    p.w_v.resize(d);
    p.w_o.resize(d);
    for (int i = 0; i < d; ++i) {
      p.w_q[i] = gauss(rng);
      p.w_k[i] = gauss(rng);
      p.w_v[i] = gauss(rng);
      p.w_o[i] = gauss(rng);
    }
    p.b_o = gauss(rng);
    CHECK(nn::attention(x, p).isApprox(attention_ref(x, p), 1e-10));
  }
}

TEST_CASE("attention validates parameter shapes") {
  nn::AttentionParams p;
  p.w_q = Eigen::VectorXd::Ones(3);
  p.w_k = Eigen::VectorXd::Ones(2);
  p.w_v = Eigen::VectorXd::Ones(3);
  p.w_o = Eigen::VectorXd::Ones(3);
  CHECK_THROWS_AS(p.validate(), invalid_input);
}

TEST_CASE("concat_channels stacks columns") {
  Eigen::VectorXd a(2), b(2);
  a << 1.0, 2.0;
  b << 3.0, 4.0;
  const Eigen::MatrixXd m = nn::concat_channels({a, b});
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 2);
  CHECK(m(0, 1) == doctest::Approx(3.0));
  Eigen::VectorXd c(3);
  c.setZero();
  CHECK_THROWS_AS(nn::concat_channels({a, c}), invalid_input);
}

TEST_CASE("adam converges on a quadratic and matches a hand-stepped oracle") {
  // hand oracle: single parameter, grad = p, two steps
  AdamConfig cfg{0.1, 0.9, 0.999, 1e-8};
  Eigen::VectorXd p(1);
  p << 1.0;
  AdamState st(1, cfg);
  Eigen::VectorXd g(1);
  g << 1.0;
  adam_step(p, g, st);
  // m=0.1, v=0.001, mhat=1, vhat=1 -> p = 1 - 0.1*1/(1+1e-8)
  CHECK(p[0] == doctest::Approx(1.0 - 0.1).epsilon(1e-6));

  // convergence on f(p) = 0.5 p^2 in 500 steps
  Eigen::VectorXd q(3);
  q << 5.0, -3.0, 1.0;
  AdamState st2(3, AdamConfig{0.05, 0.9, 0.999, 1e-8});
  for (int i = 0; i < 500; ++i) {
    Eigen::VectorXd grad = q;
    adam_step(q, grad, st2);
  }
  CHECK(q.cwiseAbs().maxCoeff() < 1e-3);
}
