#ifndef MODEDEC_TAPE_HPP
#define MODEDEC_TAPE_HPP

#include <Eigen/Dense>
#include <functional>
#include <vector>

#include "modedec/errors.hpp"
#include "modedec/nn.hpp"
#include "modedec/tvd.hpp"

namespace modedec::ad {

/// Reverse-mode tape over dense matrices (vectors are N x 1). Nodes are
/// appended in evaluation order; backward() runs one reverse sweep.
class Tape {
 public:
  using Var = int;

  Var leaf(const Eigen::MatrixXd& v);
  Var leaf(double v);

  const Eigen::MatrixXd& value(Var v) const;
  /// Valid after backward(); zeroed at the start of every backward sweep.
  const Eigen::MatrixXd& grad(Var v) const;

  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var scale(Var a, double s);
  /// Broadcast-add a 1x1 var to every entry of a.
  Var add_scalar(Var a, Var s);
  Var transpose(Var a);
  Var conv1d_same(Var x, Var w, nn::PadMode pad);
  Var activation(Var x, nn::Activation act);
  Var softmax_vec(Var w);
  /// Fused single-head attention; x is N x 1, projections d x 1, bias 1 x 1.
  Var attention(Var x, Var w_q, Var w_k, Var w_v, Var w_o, Var b_o);
  Var concat(const std::vector<Var>& parts);
  Var diff(Var x);
  Var sum_sq(Var x);
  /// Forward: tvd_denoise; backward: identity.
  Var tvd_straight_through(Var x, const TvdParams& params);

  /// Accumulates d(out)/d(node) into every node's grad. out must be 1x1.
  void backward(Var out);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Eigen::MatrixXd val;
    Eigen::MatrixXd grad;
    std::function<void(Tape&)> back;  // null for leaves
  };

  Var push(Eigen::MatrixXd val, std::function<void(Tape&)> back = nullptr);
  void check(Var v) const;
  Eigen::MatrixXd& grad_ref(Var v) { return nodes_[v].grad; }

  std::vector<Node> nodes_;
  bool swept_ = false;
};

}  // namespace modedec::ad

#endif
