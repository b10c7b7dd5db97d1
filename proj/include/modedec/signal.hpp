#ifndef MODEDEC_SIGNAL_HPP
#define MODEDEC_SIGNAL_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "modedec/errors.hpp"

namespace modedec {

/// Uniform sampling grid t_i = t_start + i*(t_end - t_start)/(n - 1).
struct TimeGrid {
  double t_start = 0.0;
  double t_end = 6.0;
  int n = 2048;

  void validate() const;
  double dt() const { return (t_end - t_start) / (n - 1); }
  double t(int i) const { return t_start + i * dt(); }
  Eigen::VectorXd times() const;
};

/// A uniformly sampled 1-D series.
struct Signal {
  TimeGrid grid;
  Eigen::VectorXd values;

  void validate() const;
};

/// M predicted components plus the residue of one decomposed signal.
struct ComponentSet {
  std::vector<Eigen::VectorXd> components;
  Eigen::VectorXd residue;

  int num_components() const { return static_cast<int>(components.size()); }
  int n() const { return static_cast<int>(residue.size()); }
  Eigen::VectorXd reconstruct() const;
};

/// First-order forward difference, out[i] = x[i+1] - x[i].
Eigen::VectorXd diff(const Eigen::VectorXd& x);

/// Total variation ||D x||_1.
double total_variation(const Eigen::VectorXd& x);

struct MetricReport {
  double mae = 0.0;
  double rmse = 0.0;
  double mape = 0.0;  // NaN when every index was excluded
  double tv = 0.0;
  int mape_excluded_count = 0;

  bool mape_defined() const;
};

/// MAE/RMSE/MAPE of pred vs label, TV of pred. Indices with |label| < 1e-8
/// are excluded from MAPE and counted in mape_excluded_count.
MetricReport metrics(const Eigen::VectorXd& pred, const Eigen::VectorXd& label);

/// Adds zero-mean Gaussian noise rescaled so the realized SNR is exactly
/// snr_db. Deterministic for a fixed seed.
Signal add_noise_snr(const Signal& x, double snr_db, std::uint64_t seed);

}  // namespace modedec

#endif
