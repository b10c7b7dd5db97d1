#include "modedec/signal.hpp"

#include <cmath>
#include <limits>
#include <random>

namespace modedec {

void TimeGrid::validate() const {
  if (n < 2) throw invalid_input("TimeGrid: n must be >= 2");
  if (!(t_end > t_start)) throw invalid_input("TimeGrid: t_end must exceed t_start");
}

Eigen::VectorXd TimeGrid::times() const {
  validate();
  return Eigen::VectorXd::LinSpaced(n, t_start, t_end);
}

void Signal::validate() const {
  grid.validate();
  if (values.size() != grid.n)
    throw invalid_input("Signal: values length does not match grid");
  if (!values.allFinite()) throw invalid_input("Signal: non-finite samples");
}

Eigen::VectorXd ComponentSet::reconstruct() const {
  Eigen::VectorXd sum = residue;
  for (const auto& c : components) sum += c;
  return sum;
}

Eigen::VectorXd diff(const Eigen::VectorXd& x) {
  const auto n = x.size();
  if (n < 2) throw invalid_input("diff: need at least 2 samples");
  return x.tail(n - 1) - x.head(n - 1);
}

double total_variation(const Eigen::VectorXd& x) {
  return diff(x).cwiseAbs().sum();
}

bool MetricReport::mape_defined() const { return std::isfinite(mape); }

MetricReport metrics(const Eigen::VectorXd& pred, const Eigen::VectorXd& label) {
  const auto n = pred.size();
  if (label.size() != n) throw invalid_input("metrics: length mismatch");
  if (n < 2) throw invalid_input("metrics: need at least 2 samples");
  if (!pred.allFinite() || !label.allFinite())
    throw invalid_input("metrics: non-finite entries");

  MetricReport r;
  const Eigen::VectorXd err = pred - label;
  r.mae = err.cwiseAbs().mean();
  r.rmse = std::sqrt(err.squaredNorm() / static_cast<double>(n));
  r.tv = total_variation(pred);

  double mape_sum = 0.0;
  int kept = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    if (std::abs(label[t]) >= 1e-8) {
      mape_sum += std::abs(err[t] / label[t]);
      ++kept;
    }
  }
  r.mape_excluded_count = static_cast<int>(n) - kept;
  r.mape = kept > 0 ? mape_sum / kept : std::numeric_limits<double>::quiet_NaN();
  return r;
}

Signal add_noise_snr(const Signal& x, double snr_db, std::uint64_t seed) {
  x.validate();
  if (!std::isfinite(snr_db)) throw invalid_input("add_noise_snr: snr_db not finite");
  const double p_signal = x.values.squaredNorm() / x.values.size();
  if (p_signal == 0.0)
    throw invalid_input("add_noise_snr: SNR undefined for the zero signal");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::VectorXd eps(x.values.size());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps[i] = gauss(rng);

  // Rescale to the realized (empirical) noise power so the SNR is exact.
  const double p_target = p_signal / std::pow(10.0, snr_db / 10.0);
  const double p_emp = eps.squaredNorm() / eps.size();
  eps *= std::sqrt(p_target / p_emp);

  Signal out = x;
  out.values += eps;
  return out;
}

}  // namespace modedec
