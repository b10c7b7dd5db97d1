#include "modedec/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "modedec/io.hpp"

namespace modedec {

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::VectorXd cos_tone(const Eigen::VectorXd& t, double a) {
  return (a * kPi * t.array()).cos();
}

Eigen::VectorXd cos_chirp(const Eigen::VectorXd& t, double a) {
  return (a * kPi * t.array() + t.array().square() + t.array().cos()).cos();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
  // splitmix64 over (seed, index) so subsets are stable under re-enumeration
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Dataset gen_synthetic(const TimeGrid& grid, FamilySelect fam, bool noisy,
                      std::uint64_t seed) {
  grid.validate();
  const Eigen::VectorXd t = grid.times();
  Dataset ds;
  ds.seed = seed;

  auto emit = [&](char family, int k, int l, bool zero_c2, bool chirped) {
    const double a = family == 'a' ? k + 1.5 : static_cast<double>(k) * l;
    LabeledExample ex;
    ex.meta = {family, k, l, chirped, zero_c2, 0, ""};
    Eigen::VectorXd c1 = chirped ? cos_chirp(t, a) : cos_tone(t, a);
    Eigen::VectorXd c2 =
        zero_c2 ? Eigen::VectorXd::Zero(grid.n) : Eigen::VectorXd(cos_tone(t, k));
    ex.feature.grid = grid;
    ex.feature.values = c1 + c2;
    ex.labels = {std::move(c1), std::move(c2)};
    if (noisy) {
      ex.meta.noise_seed = mix_seed(seed, ds.examples.size());
      ex.feature = add_noise_snr(ex.feature, 25.0, ex.meta.noise_seed);
    }
    ds.examples.push_back(std::move(ex));
  };

  if (fam == FamilySelect::a || fam == FamilySelect::both)
    for (int k = 5; k <= 14; ++k)
      for (bool zero_c2 : {false, true})
        for (bool chirped : {false, true}) emit('a', k, 0, zero_c2, chirped);
  if (fam == FamilySelect::b || fam == FamilySelect::both)
    for (int k = 5; k <= 14; ++k)
      for (int l = 2; l <= 19; ++l)
        for (bool zero_c2 : {false, true})
          for (bool chirped : {false, true}) emit('b', k, l, zero_c2, chirped);

  split_train_val(ds, seed);
  return ds;
}

}  // namespace

int Dataset::num_components() const {
  return examples.empty() ? 0 : static_cast<int>(examples.front().labels.size());
}

Dataset gen_dataset1(const TimeGrid& grid, FamilySelect fam,
                     std::uint64_t split_seed) {
  return gen_synthetic(grid, fam, /*noisy=*/false, split_seed);
}

Dataset gen_dataset2(const TimeGrid& grid, std::uint64_t seed, FamilySelect fam) {
  return gen_synthetic(grid, fam, /*noisy=*/true, seed);
}

LabeledExample test_signal_x1(const TimeGrid& grid) {
  grid.validate();
  const Eigen::VectorXd t = grid.times();
  LabeledExample ex;
  Eigen::VectorXd c1 = cos_tone(t, 6.4);
  Eigen::VectorXd c2 = cos_tone(t, 5.0);
  ex.feature.grid = grid;
  ex.feature.values = c1 + c2;
  ex.labels = {std::move(c1), std::move(c2)};
  ex.meta.source = "x1";
  return ex;
}

LabeledExample test_signal_x2(const TimeGrid& grid, std::uint64_t seed) {
  grid.validate();
  const Eigen::VectorXd t = grid.times();
  LabeledExample ex;
  Eigen::VectorXd c1 =
      (8.0 * kPi * t.array() + 2.0 * t.array().square() + t.array().cos()).cos();
  Eigen::VectorXd c2 = cos_tone(t, 5.0);
  ex.feature.grid = grid;
  ex.feature.values = c1 + c2;
  ex.meta.noise_seed = seed;
  ex.feature = add_noise_snr(ex.feature, 15.0, seed);
  ex.labels = {std::move(c1), std::move(c2)};
  ex.meta.source = "x2";
  return ex;
}

std::vector<Signal> window_series(const Signal& series, int len, int stride) {
  series.validate();
  if (len < 2 || stride < 1) throw invalid_input("window_series: bad len/stride");
  if (series.grid.n < len)
    throw invalid_input("window_series: series shorter than window");
  std::vector<Signal> out;
  for (int start = 0; start + len <= series.grid.n; start += stride) {
    Signal w;
    w.grid = TimeGrid{series.grid.t(start), series.grid.t(start + len - 1), len};
    w.values = series.values.segment(start, len);
    out.push_back(std::move(w));
  }
  return out;
}

Dataset attach_labels(const std::vector<Signal>& windows,
                      const std::vector<std::string>& label_files,
                      std::uint64_t split_seed) {
  if (windows.size() != label_files.size())
    throw data_error("attach_labels: " + std::to_string(windows.size()) +
                     " windows vs " + std::to_string(label_files.size()) +
                     " label files");
  Dataset ds;
  ds.seed = split_seed;
  int ncomp = -1;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    ComponentSet cs = read_components_csv(label_files[i]);
    if (cs.n() != windows[i].grid.n)
      throw data_error("attach_labels: window " + std::to_string(i) + " (" +
                       label_files[i] + "): label length " +
                       std::to_string(cs.n()) + " vs window length " +
                       std::to_string(windows[i].grid.n));
    if (ncomp < 0) ncomp = cs.num_components();
    if (cs.num_components() != ncomp)
      throw data_error("attach_labels: window " + std::to_string(i) + " (" +
                       label_files[i] + "): component count " +
                       std::to_string(cs.num_components()) + " vs expected " +
                       std::to_string(ncomp));
    LabeledExample ex;
    ex.feature = windows[i];
    ex.labels = cs.components;
    ex.meta.source = label_files[i];
    ds.examples.push_back(std::move(ex));
  }
  split_train_val(ds, split_seed);
  return ds;
}

void split_train_val(Dataset& dataset, std::uint64_t seed) {
  const int n = static_cast<int>(dataset.examples.size());
  if (n < 5) throw invalid_input("split_train_val: need at least 5 examples");
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  const int n_train = static_cast<int>(std::floor(0.8 * n));
  dataset.train_idx.assign(idx.begin(), idx.begin() + n_train);
  dataset.val_idx.assign(idx.begin() + n_train, idx.end());
  dataset.seed = seed;
}

}  // namespace modedec
