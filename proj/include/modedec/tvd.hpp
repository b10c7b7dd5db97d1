#ifndef MODEDEC_TVD_HPP
#define MODEDEC_TVD_HPP

#include <Eigen/Dense>
#include <vector>

#include "modedec/errors.hpp"

namespace modedec {

struct TvdParams {
  double lambda = 0.2;
  int nit = 20;

  void validate() const;
};

/// Thomas elimination for a symmetric positive definite tridiagonal system.
/// Throws numeric_error on a non-positive pivot.
Eigen::VectorXd solve_spd_tridiagonal(const Eigen::VectorXd& sub,
                                      const Eigen::VectorXd& diag,
                                      const Eigen::VectorXd& sup,
                                      const Eigen::VectorXd& rhs);

/// 0.5*||y_hat - y||^2 + lambda * ||D y||_1.
double tvd_objective(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat,
                     double lambda);

/// Majorize-minimize total-variation denoising: nit reweighted tridiagonal
/// solves of Y = Y_hat - D^T F^-1 D Y_hat with F = diag(|D Y|/lambda) + D D^T
/// evaluated at the current iterate. lambda = 0 returns the input unchanged.
/// objective_trace, when given, receives the objective value at the start and
/// after each iteration (nit + 1 entries).
Eigen::VectorXd tvd_denoise(const Eigen::VectorXd& y_hat, const TvdParams& params,
                            std::vector<double>* objective_trace = nullptr);

}  // namespace modedec

#endif
