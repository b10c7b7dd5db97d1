#include "modedec/tape.hpp"

#include <cmath>

#include "modedec/signal.hpp"
#include <memory>
#include <utility>

#if defined(__GLIBC__)
#include <malloc.h>
namespace {
// The tape churns through ~30 MB attention matrices every step; keeping
// large blocks on the heap instead of mmap avoids page-fault thrash.
struct AllocTune {
  AllocTune() {
    mallopt(M_MMAP_THRESHOLD, 256 * 1024 * 1024);
    mallopt(M_TRIM_THRESHOLD, 256 * 1024 * 1024);
  }
} alloc_tune;
}  // namespace
#endif

namespace modedec::ad {

Tape::Var Tape::push(Eigen::MatrixXd val, std::function<void(Tape&)> back) {
  nodes_.push_back(Node{std::move(val), {}, std::move(back)});
  return static_cast<Var>(nodes_.size()) - 1;
}

void Tape::check(Var v) const {
  if (v < 0 || v >= size()) throw state_error("Tape: invalid var");
}

Tape::Var Tape::leaf(const Eigen::MatrixXd& v) { return push(v); }

Tape::Var Tape::leaf(double v) {
  return push(Eigen::MatrixXd::Constant(1, 1, v));
}

const Eigen::MatrixXd& Tape::value(Var v) const {
  check(v);
  return nodes_[v].val;
}

const Eigen::MatrixXd& Tape::grad(Var v) const {
  check(v);
  if (!swept_) throw state_error("Tape: grad requested before backward");
  return nodes_[v].grad;
}

Tape::Var Tape::add(Var a, Var b) {
  check(a);
  check(b);
  auto out = push(value(a) + value(b));
  nodes_[out].back = [a, b, out](Tape& t) {
    t.grad_ref(a) += t.grad_ref(out);
    t.grad_ref(b) += t.grad_ref(out);
  };
  return out;
}

Tape::Var Tape::sub(Var a, Var b) {
  check(a);
  check(b);
  auto out = push(value(a) - value(b));
  nodes_[out].back = [a, b, out](Tape& t) {
    t.grad_ref(a) += t.grad_ref(out);
    t.grad_ref(b) -= t.grad_ref(out);
  };
  return out;
}

Tape::Var Tape::scale(Var a, double s) {
  check(a);
  auto out = push(value(a) * s);
  nodes_[out].back = [a, s, out](Tape& t) { t.grad_ref(a) += s * t.grad_ref(out); };
  return out;
}

Tape::Var Tape::add_scalar(Var a, Var s) {
  check(a);
  check(s);
  if (value(s).size() != 1) throw invalid_input("add_scalar: s must be 1x1");
  auto out = push(value(a).array() + value(s)(0, 0));
  nodes_[out].back = [a, s, out](Tape& t) {
    t.grad_ref(a) += t.grad_ref(out);
    t.grad_ref(s)(0, 0) += t.grad_ref(out).sum();
  };
  return out;
}

Tape::Var Tape::transpose(Var a) {
  check(a);
  auto out = push(value(a).transpose());
  nodes_[out].back = [a, out](Tape& t) {
    t.grad_ref(a) += t.grad_ref(out).transpose();
  };
  return out;
}

Tape::Var Tape::conv1d_same(Var x, Var w, nn::PadMode pad) {
  check(x);
  check(w);
  auto out = push(nn::conv1d_same(value(x), value(w), pad));
  nodes_[out].back = [x, w, pad, out](Tape& t) {
    const Eigen::MatrixXd& xv = t.value(x);
    const Eigen::MatrixXd& wv = t.value(w);
    const Eigen::VectorXd g = t.grad_ref(out).col(0);
    Eigen::MatrixXd& gx = t.grad_ref(x);
    Eigen::MatrixXd& gw = t.grad_ref(w);
    const Eigen::Index n = xv.rows();
    const Eigen::Index k = wv.cols();
    const Eigen::Index pad_left = (k - 1) / 2;
    auto reflect = [n](Eigen::Index p) {
      if (p < 0) p = -p;
      if (p >= n) p = 2 * (n - 1) - p;
      return p;
    };
    for (Eigen::Index c = 0; c < xv.cols(); ++c) {
      for (Eigen::Index j = 0; j < k; ++j) {
        const Eigen::Index shift = j - pad_left;
        const Eigen::Index t0 = std::max<Eigen::Index>(0, -shift);
        const Eigen::Index t1 = std::min(n - 1, n - 1 - shift);
        if (t1 >= t0) {
          const Eigen::Index len = t1 - t0 + 1;
          gx.col(c).segment(t0 + shift, len) += wv(c, j) * g.segment(t0, len);
          gw(c, j) += g.segment(t0, len).dot(xv.col(c).segment(t0 + shift, len));
        }
        if (pad == nn::PadMode::reflect) {
          for (Eigen::Index tt = 0; tt < t0; ++tt) {
            gx(reflect(tt + shift), c) += wv(c, j) * g[tt];
            gw(c, j) += g[tt] * xv(reflect(tt + shift), c);
          }
          for (Eigen::Index tt = t1 + 1; tt < n; ++tt) {
            gx(reflect(tt + shift), c) += wv(c, j) * g[tt];
            gw(c, j) += g[tt] * xv(reflect(tt + shift), c);
          }
        }
      }
    }
  };
  return out;
}

Tape::Var Tape::activation(Var x, nn::Activation act) {
  check(x);
  auto out = push(nn::activate(value(x), act));
  nodes_[out].back = [x, act, out](Tape& t) {
    const Eigen::MatrixXd& y = t.value(out);
    const Eigen::MatrixXd& g = t.grad_ref(out);
    if (act == nn::Activation::tanh)
      t.grad_ref(x).array() += g.array() * (1.0 - y.array().square());
    else
      t.grad_ref(x).array() += g.array() * (y.array() > 0.0).cast<double>();
  };
  return out;
}

Tape::Var Tape::softmax_vec(Var w) {
  check(w);
  auto out = push(nn::softmax_vec(value(w).col(0)));
  nodes_[out].back = [w, out](Tape& t) {
    const Eigen::ArrayXd y = t.value(out).col(0).array();
    const Eigen::ArrayXd g = t.grad_ref(out).col(0).array();
    const double dot = (g * y).sum();
    t.grad_ref(w).col(0).array() += y * (g - dot);
  };
  return out;
}

Tape::Var Tape::attention(Var x, Var w_q, Var w_k, Var w_v, Var w_o, Var b_o) {
  check(x);
  check(w_q);
  check(w_k);
  check(w_v);
  check(w_o);
  check(b_o);
  const Eigen::VectorXd xv = value(x).col(0);
  const Eigen::VectorXd wq = value(w_q).col(0);
  const Eigen::VectorXd wk = value(w_k).col(0);
  const Eigen::VectorXd wv = value(w_v).col(0);
  const Eigen::VectorXd wo = value(w_o).col(0);
  const double bo = value(b_o)(0, 0);
  const Eigen::Index n = xv.size();
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(wq.size()));
  const double score_gain = wq.dot(wk) * inv_sqrt_d;
  const double value_gain = wv.dot(wo);

  // Rank-1 embeddings collapse to A = rowsoftmax(score_gain * x x^T),
  // out = value_gain * A x + b_o.
  auto a = std::make_shared<Eigen::MatrixXd>();
  a->noalias() = score_gain * (xv * xv.transpose());
  const Eigen::VectorXd row_max = a->rowwise().maxCoeff();
  a->colwise() -= row_max;
  a->array() = a->array().exp();
  const Eigen::VectorXd row_sum = a->rowwise().sum();
  a->array().colwise() /= row_sum.array();
  // one pass over A yields both A x (output) and A x.^2 (softmax backward)
  Eigen::MatrixXd xs(n, 2);
  xs.col(0) = xv;
  xs.col(1) = xv.cwiseAbs2();
  auto axs = std::make_shared<Eigen::MatrixXd>(n, 2);
  axs->noalias() = *a * xs;
  auto ax = std::make_shared<Eigen::VectorXd>(axs->col(0));
  Eigen::VectorXd yv = value_gain * *ax;
  yv.array() += bo;

  auto out = push(yv);
  nodes_[out].back = [x, w_q, w_k, w_v, w_o, b_o, out, a, ax, axs, score_gain,
                      value_gain, inv_sqrt_d](Tape& t) {
    const Eigen::VectorXd xv = t.value(x).col(0);
    const Eigen::VectorXd wq = t.value(w_q).col(0);
    const Eigen::VectorXd wk = t.value(w_k).col(0);
    const Eigen::VectorXd wv = t.value(w_v).col(0);
    const Eigen::VectorXd wo = t.value(w_o).col(0);
    const Eigen::VectorXd g = t.grad_ref(out).col(0);

    t.grad_ref(b_o)(0, 0) += g.sum();
    const double gbar_value_gain = g.dot(*ax);
    t.grad_ref(w_v).col(0) += gbar_value_gain * wo;
    t.grad_ref(w_o).col(0) += gbar_value_gain * wv;

    // Softmax backward over rows where the upstream row gradient is the
    // rank-1 value_gain * g[t] * x^T: B[t,u] = A[t,u] * (x[u] - ax[t]).
    // B itself is never formed: B x = A(x.^2) - ax.^2 and
    // B^T h = x .* (A^T h) - A^T (h .* ax).
    const Eigen::VectorXd bx = axs->col(1) - ax->cwiseAbs2();

    const double score_gain_bar =
        value_gain * (g.array() * xv.array() * bx.array()).sum();
    t.grad_ref(w_q).col(0) += score_gain_bar * inv_sqrt_d * wk;
    t.grad_ref(w_k).col(0) += score_gain_bar * inv_sqrt_d * wq;

    // one pass over A^T for both right-hand sides
    const Eigen::VectorXd h = g.cwiseProduct(xv);
    Eigen::MatrixXd rhs(xv.size(), 2);
    rhs.col(0) =
        value_gain * g - score_gain * value_gain * h.cwiseProduct(*ax);
    rhs.col(1) = h;
    Eigen::MatrixXd p(xv.size(), 2);
    p.noalias() = a->transpose() * rhs;
    Eigen::VectorXd gx = p.col(0);                                    // value path
    gx.array() += score_gain * value_gain * g.array() * bx.array();   // S x
    gx.array() += score_gain * value_gain * xv.array() * p.col(1).array();
    t.grad_ref(x).col(0) += gx;
  };
  return out;
}

Tape::Var Tape::concat(const std::vector<Var>& parts) {
  std::vector<Eigen::VectorXd> vals;
  vals.reserve(parts.size());
  for (Var p : parts) {
    check(p);
    vals.push_back(value(p).col(0));
  }
  auto out = push(nn::concat_channels(vals));
  nodes_[out].back = [parts, out](Tape& t) {
    const Eigen::MatrixXd& g = t.grad_ref(out);
    for (std::size_t j = 0; j < parts.size(); ++j)
      t.grad_ref(parts[j]).col(0) += g.col(static_cast<Eigen::Index>(j));
  };
  return out;
}

Tape::Var Tape::diff(Var x) {
  check(x);
  auto out = push(modedec::diff(value(x).col(0)));
  nodes_[out].back = [x, out](Tape& t) {
    const Eigen::VectorXd g = t.grad_ref(out).col(0);
    const Eigen::Index m = g.size();
    t.grad_ref(x).col(0).tail(m) += g;
    t.grad_ref(x).col(0).head(m) -= g;
  };
  return out;
}

Tape::Var Tape::sum_sq(Var x) {
  check(x);
  auto out = leaf(value(x).squaredNorm());
  nodes_[out].back = [x, out](Tape& t) {
    t.grad_ref(x) += 2.0 * t.grad_ref(out)(0, 0) * t.value(x);
  };
  return out;
}

Tape::Var Tape::tvd_straight_through(Var x, const TvdParams& params) {
  check(x);
  auto out = push(tvd_denoise(value(x).col(0), params));
  nodes_[out].back = [x, out](Tape& t) { t.grad_ref(x) += t.grad_ref(out); };
  return out;
}

void Tape::backward(Var out) {
  if (nodes_.empty()) throw state_error("Tape: backward before any forward");
  check(out);
  if (nodes_[out].val.size() != 1)
    throw state_error("Tape: backward output must be scalar");
  for (auto& n : nodes_) n.grad = Eigen::MatrixXd::Zero(n.val.rows(), n.val.cols());
  swept_ = true;
  nodes_[out].grad(0, 0) = 1.0;
  for (Var v = out; v >= 0; --v)
    if (nodes_[v].back) nodes_[v].back(*this);
}

}  // namespace modedec::ad
