#ifndef MODEDEC_OPTIM_HPP
#define MODEDEC_OPTIM_HPP

#include <Eigen/Dense>
#include <cstdint>

#include "modedec/errors.hpp"

namespace modedec {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Adaptive-moment state over a flattened parameter vector.
struct AdamState {
  AdamConfig hyper;
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::int64_t step = 0;

  explicit AdamState(Eigen::Index n, AdamConfig cfg = {})
      : hyper(cfg), m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

/// One bias-corrected update of params in place.
void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grad,
               AdamState& state);

}  // namespace modedec

#endif
