#ifndef MODEDEC_TRAINER_HPP
#define MODEDEC_TRAINER_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "modedec/datagen.hpp"
#include "modedec/model.hpp"

namespace modedec {

struct TrainConfig {
  int epochs = 200;
  int batch_size = 32;
  double lr = 1e-3;
  int early_stop_patience = 20;  // epochs without validation improvement
  std::uint64_t seed = 0;
  double eta_qtv = 0.0;          // legacy quadratic-TV penalty weight
  bool verbose = false;

  void validate() const;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;  // mean per-example loss
  double val_loss = 0.0;
  double val_mae = 0.0, val_rmse = 0.0, val_mape = 0.0, val_tv = 0.0;
};

struct History {
  std::vector<EpochStats> epochs;
  int best_epoch = -1;   // index into epochs
  double best_val_loss = 0.0;
  int start_epoch = 0;   // nonzero when resuming
};

/// Sum over components and time of squared differences.
double frobenius_loss(const std::vector<Eigen::VectorXd>& pred,
                      const std::vector<Eigen::VectorXd>& label);

/// Sum over components and time of squared first differences.
double qtv_penalty(const std::vector<Eigen::VectorXd>& components);

/// Mini-batch Adam on frobenius_loss + eta_qtv * qtv_penalty over the train
/// split; early stopping on validation loss; the model is left at the
/// best-validation parameters.
History train(Model& model, const Dataset& dataset, const TrainConfig& cfg,
              int start_epoch = 0);

// --- evaluation --------------------------------------------------------------

struct ComponentRow {
  int example = 0;
  int component = 0;
  MetricReport pred;
  double label_tv = 0.0;
};

struct AggregateMetrics {
  double mae = 0.0, rmse = 0.0, mape = 0.0, tv = 0.0, label_tv = 0.0;
};

enum class Subset { train, val, all };

struct EvalReport {
  std::vector<ComponentRow> rows;
  /// Per-example means, then mean over examples.
  AggregateMetrics mean_of_example_means;
  /// Mean over all (example, component) pairs.
  AggregateMetrics pooled;
};

EvalReport evaluate_examples(const Model& model,
                             const std::vector<const LabeledExample*>& examples);
EvalReport evaluate_dataset(const Model& model, const Dataset& dataset,
                            Subset subset = Subset::val);

// --- hyper-parameter grid ----------------------------------------------------

struct GridCell {
  int S = 0, K = 0;
  bool ok = false;
  std::string error;
  AggregateMetrics train_metrics;
  AggregateMetrics val_metrics;
  double val_loss = 0.0;
};

struct GridReport {
  std::vector<int> S_values, K_values;
  std::vector<GridCell> cells;  // row-major: K outer, S inner

  const GridCell& cell(int ki, int si) const;
  /// Mean of a metric over one K row (si = -1), one S column (ki = -1), or
  /// the whole grid (both -1). Only successful cells contribute.
  double marginal_mean(int ki, int si,
                       const std::function<double(const GridCell&)>& metric) const;
};

/// Trains one model per (S, K) pair; per-cell failures are recorded, not
/// propagated.
GridReport grid_search(const Dataset& dataset, const std::vector<int>& S_values,
                       const std::vector<int>& K_values, ModelConfig base,
                       const TrainConfig& train_cfg, std::uint64_t model_seed);

}  // namespace modedec

#endif
