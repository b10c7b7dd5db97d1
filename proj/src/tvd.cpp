#include "modedec/tvd.hpp"

#include "modedec/signal.hpp"

namespace modedec {

void TvdParams::validate() const {
  if (lambda < 0.0) throw invalid_input("TvdParams: lambda must be >= 0");
  if (nit < 1) throw invalid_input("TvdParams: nit must be >= 1");
}

Eigen::VectorXd solve_spd_tridiagonal(const Eigen::VectorXd& sub,
                                      const Eigen::VectorXd& diag,
                                      const Eigen::VectorXd& sup,
                                      const Eigen::VectorXd& rhs) {
  const auto n = diag.size();
  if (n < 1 || sub.size() != n - 1 || sup.size() != n - 1 || rhs.size() != n)
    throw invalid_input("solve_spd_tridiagonal: inconsistent band lengths");

  Eigen::VectorXd c(n), d(n);
  double pivot = diag[0];
  if (pivot <= 0.0) throw numeric_error("solve_spd_tridiagonal: non-positive pivot");
  c[0] = n > 1 ? sup[0] / pivot : 0.0;
  d[0] = rhs[0] / pivot;
  for (Eigen::Index i = 1; i < n; ++i) {
    pivot = diag[i] - sub[i - 1] * c[i - 1];
    if (pivot <= 0.0) throw numeric_error("solve_spd_tridiagonal: non-positive pivot");
    c[i] = i < n - 1 ? sup[i] / pivot : 0.0;
    d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / pivot;
  }
  Eigen::VectorXd x(n);
  x[n - 1] = d[n - 1];
  for (Eigen::Index i = n - 2; i >= 0; --i) x[i] = d[i] - c[i] * x[i + 1];
  return x;
}

double tvd_objective(const Eigen::VectorXd& y, const Eigen::VectorXd& y_hat,
                     double lambda) {
  if (y.size() != y_hat.size()) throw invalid_input("tvd_objective: length mismatch");
  return 0.5 * (y_hat - y).squaredNorm() + lambda * total_variation(y);
}

Eigen::VectorXd tvd_denoise(const Eigen::VectorXd& y_hat, const TvdParams& params,
                            std::vector<double>* objective_trace) {
  params.validate();
  const auto n = y_hat.size();
  if (n < 3) throw invalid_input("tvd_denoise: need at least 3 samples");

  if (objective_trace) objective_trace->clear();
  if (params.lambda == 0.0) {
    if (objective_trace)
      objective_trace->assign(params.nit + 1, 0.0);
    return y_hat;
  }

  const Eigen::VectorXd dy_hat = diff(y_hat);
  Eigen::VectorXd y = y_hat;
  if (objective_trace)
    objective_trace->push_back(tvd_objective(y, y_hat, params.lambda));

  const Eigen::VectorXd off = Eigen::VectorXd::Constant(n - 2, -1.0);
  for (int it = 0; it < params.nit; ++it) {
    // F = diag(|D y| / lambda) + D D^T, an (n-1)x(n-1) SPD tridiagonal.
    Eigen::VectorXd f_diag =
        diff(y).cwiseAbs() / params.lambda + Eigen::VectorXd::Constant(n - 1, 2.0);
    Eigen::VectorXd z = solve_spd_tridiagonal(off, f_diag, off, dy_hat);
    // y = y_hat - D^T z
    y = y_hat;
    y.head(n - 1) += z;
    y.tail(n - 1) -= z;
    if (objective_trace)
      objective_trace->push_back(tvd_objective(y, y_hat, params.lambda));
  }
  return y;
}

}  // namespace modedec
