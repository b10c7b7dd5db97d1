#include "modedec/nn.hpp"

#include <cmath>

namespace modedec::nn {

namespace {

// Mirror index into [0, n) without repeating the edge sample.
inline Eigen::Index reflect_index(Eigen::Index p, Eigen::Index n) {
  if (p < 0) p = -p;
  if (p >= n) p = 2 * (n - 1) - p;
  return p;
}

}  // namespace

Eigen::VectorXd conv1d_same(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                            PadMode pad) {
  const Eigen::Index n = x.rows();
  const Eigen::Index c_in = x.cols();
  const Eigen::Index k = w.cols();
  if (w.rows() != c_in) throw invalid_input("conv1d_same: channel mismatch");
  if (k < 1 || k > n) throw invalid_input("conv1d_same: kernel longer than input");

  const Eigen::Index pad_left = (k - 1) / 2;
  Eigen::VectorXd out = Eigen::VectorXd::Zero(n);
  for (Eigen::Index c = 0; c < c_in; ++c) {
    const auto col = x.col(c);
    for (Eigen::Index j = 0; j < k; ++j) {
      const double wj = w(c, j);
      const Eigen::Index shift = j - pad_left;  // source = t + shift
      const Eigen::Index t0 = std::max<Eigen::Index>(0, -shift);
      const Eigen::Index t1 = std::min(n - 1, n - 1 - shift);
      if (t1 >= t0)
        out.segment(t0, t1 - t0 + 1) += wj * col.segment(t0 + shift, t1 - t0 + 1);
      if (pad == PadMode::reflect) {
        for (Eigen::Index t = 0; t < t0; ++t)
          out[t] += wj * col[reflect_index(t + shift, n)];
        for (Eigen::Index t = t1 + 1; t < n; ++t)
          out[t] += wj * col[reflect_index(t + shift, n)];
      }
    }
  }
  return out;
}

Eigen::MatrixXd tanh_act(const Eigen::MatrixXd& x) { return x.array().tanh(); }

Eigen::MatrixXd relu_act(const Eigen::MatrixXd& x) { return x.cwiseMax(0.0); }

Eigen::MatrixXd activate(const Eigen::MatrixXd& x, Activation act) {
  return act == Activation::tanh ? tanh_act(x) : relu_act(x);
}

Eigen::VectorXd softmax_vec(const Eigen::VectorXd& w) {
  if (w.size() == 0) throw invalid_input("softmax_vec: empty input");
  Eigen::ArrayXd e = (w.array() - w.maxCoeff()).exp();
  return e / e.sum();
}

void AttentionParams::validate() const {
  const auto d = w_q.size();
  if (d < 1 || w_k.size() != d || w_v.size() != d || w_o.size() != d)
    throw invalid_input("AttentionParams: projection sizes disagree");
}

Eigen::VectorXd attention(const Eigen::VectorXd& x, const AttentionParams& p) {
  p.validate();
  const Eigen::Index n = x.size();
  if (n < 1) throw invalid_input("attention: empty input");
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(p.d_att()));
  // Q K^T = (w_q . w_k) x x^T, A V w_o = (w_v . w_o) A x.
  const double score_gain = p.w_q.dot(p.w_k) * inv_sqrt_d;
  const double value_gain = p.w_v.dot(p.w_o);

  Eigen::MatrixXd scores = score_gain * (x * x.transpose());
  Eigen::VectorXd out(n);
  Eigen::VectorXd row_max = scores.rowwise().maxCoeff();
  Eigen::MatrixXd a = (scores.colwise() - row_max).array().exp();
  Eigen::VectorXd row_sum = a.rowwise().sum();
  out.noalias() = a * x;
  out.array() = value_gain * out.array() / row_sum.array() + p.b_o;
  return out;
}

Eigen::MatrixXd concat_channels(const std::vector<Eigen::VectorXd>& parts) {
  if (parts.empty()) throw invalid_input("concat_channels: no parts");
  const Eigen::Index n = parts.front().size();
  Eigen::MatrixXd out(n, static_cast<Eigen::Index>(parts.size()));
  for (std::size_t j = 0; j < parts.size(); ++j) {
    if (parts[j].size() != n) throw invalid_input("concat_channels: length mismatch");
    out.col(static_cast<Eigen::Index>(j)) = parts[j];
  }
  return out;
}

}  // namespace modedec::nn
