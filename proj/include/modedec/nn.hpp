#ifndef MODEDEC_NN_HPP
#define MODEDEC_NN_HPP

#include <Eigen/Dense>
#include <vector>

#include "modedec/errors.hpp"

namespace modedec::nn {

enum class PadMode { zero, reflect };
enum class Activation { tanh, relu };

/// "Same"-length 1-D cross-correlation without bias:
/// out[t] = sum_c sum_j x_pad[t + j, c] * w(c, j), pad_left = floor((K-1)/2).
/// x is N (time) x C_in, w is C_in x K.
Eigen::VectorXd conv1d_same(const Eigen::MatrixXd& x, const Eigen::MatrixXd& w,
                            PadMode pad = PadMode::zero);

Eigen::MatrixXd tanh_act(const Eigen::MatrixXd& x);
Eigen::MatrixXd relu_act(const Eigen::MatrixXd& x);
Eigen::MatrixXd activate(const Eigen::MatrixXd& x, Activation act);

/// Numerically stable softmax of a vector; entries positive, sum 1.
Eigen::VectorXd softmax_vec(const Eigen::VectorXd& w);

/// Single-head scaled dot-product attention over a scalar sequence with
/// learned rank-1 scalar-to-d embeddings:
/// Q = x w_q^T, K = x w_k^T, V = x w_v^T, A = rowsoftmax(Q K^T / sqrt(d)),
/// out = A V w_o + b_o.
struct AttentionParams {
  Eigen::VectorXd w_q, w_k, w_v, w_o;
  double b_o = 0.0;

  int d_att() const { return static_cast<int>(w_q.size()); }
  void validate() const;
};

Eigen::VectorXd attention(const Eigen::VectorXd& x, const AttentionParams& p);

/// Stacks equal-length vectors as the columns of an N x |parts| matrix.
Eigen::MatrixXd concat_channels(const std::vector<Eigen::VectorXd>& parts);

}  // namespace modedec::nn

#endif
