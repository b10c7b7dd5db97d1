#include "modedec/optim.hpp"

#include <cmath>

namespace modedec {

void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad,
               AdamState& state) {
  if (params.size() != state.m.size() || grad.size() != state.m.size())
    throw invalid_input("adam_step: size mismatch");
  const auto& h = state.hyper;
  ++state.step;
  state.m = h.beta1 * state.m + (1.0 - h.beta1) * grad;
  state.v = h.beta2 * state.v + (1.0 - h.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(h.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(h.beta2, static_cast<double>(state.step));
  params.array() -=
      h.lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + h.eps);
}

}  // namespace modedec
