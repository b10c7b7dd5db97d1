#ifndef MODEDEC_DATAGEN_HPP
#define MODEDEC_DATAGEN_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "modedec/signal.hpp"

namespace modedec {

struct ExampleMeta {
  char family = '-';    // 'a', 'b', or '-' for real/test data
  int k = 0;
  int l = 0;            // family B frequency multiplier, 0 otherwise
  bool chirped = false;
  bool zero_c2 = false;
  std::uint64_t noise_seed = 0;
  std::string source;   // window provenance for real data
};

struct LabeledExample {
  Signal feature;
  std::vector<Eigen::VectorXd> labels;
  ExampleMeta meta;
};

struct Dataset {
  std::vector<LabeledExample> examples;
  std::vector<int> train_idx;
  std::vector<int> val_idx;
  std::uint64_t seed = 0;

  int num_components() const;
};

enum class FamilySelect { a, b, both };

/// Noise-free close-frequency pairs: family A uses c1 = cos((k+1.5)pi t)
/// (optionally chirped), family B uses c1 = cos(k*l*pi t); c2 is cos(k pi t)
/// or zero. 760 examples for both families.
Dataset gen_dataset1(const TimeGrid& grid, FamilySelect fam = FamilySelect::both,
                     std::uint64_t split_seed = 0);

/// Same enumeration with 25 dB Gaussian noise added to the feature.
Dataset gen_dataset2(const TimeGrid& grid, std::uint64_t seed,
                     FamilySelect fam = FamilySelect::both);

/// x1(t) = cos(6.4 pi t) + cos(5 pi t).
LabeledExample test_signal_x1(const TimeGrid& grid);
/// x2(t) = cos(8 pi t + 2 t^2 + cos t) + cos(5 pi t) + noise at 15 dB.
LabeledExample test_signal_x2(const TimeGrid& grid, std::uint64_t seed);

/// Sliding windows starting at 0, stride apart; trailing partial dropped.
std::vector<Signal> window_series(const Signal& series, int len = 720,
                                  int stride = 180);

/// Pairs each window with the label CSV at the same index (component columns,
/// no residue). Component count must agree across the dataset.
Dataset attach_labels(const std::vector<Signal>& windows,
                      const std::vector<std::string>& label_files,
                      std::uint64_t split_seed);

/// Deterministic shuffle, floor(0.8 n) train, remainder validation.
void split_train_val(Dataset& dataset, std::uint64_t seed);

}  // namespace modedec

#endif
