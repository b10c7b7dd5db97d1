#include "modedec/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <random>

#include "modedec/optim.hpp"

namespace modedec {

void TrainConfig::validate() const {
  if (epochs < 1) throw invalid_input("TrainConfig: epochs must be >= 1");
  if (batch_size < 1) throw invalid_input("TrainConfig: batch_size must be >= 1");
  if (lr <= 0.0) throw invalid_input("TrainConfig: lr must be > 0");
  if (early_stop_patience < 1)
    throw invalid_input("TrainConfig: early_stop_patience must be >= 1");
  if (eta_qtv < 0.0) throw invalid_input("TrainConfig: eta_qtv must be >= 0");
}

double frobenius_loss(const std::vector<Eigen::VectorXd>& pred,
                      const std::vector<Eigen::VectorXd>& label) {
  if (pred.size() != label.size())
    throw invalid_input("frobenius_loss: component count mismatch");
  double sum = 0.0;
  for (std::size_t m = 0; m < pred.size(); ++m) {
    if (pred[m].size() != label[m].size())
      throw invalid_input("frobenius_loss: length mismatch");
    sum += (pred[m] - label[m]).squaredNorm();
  }
  return sum;
}

double qtv_penalty(const std::vector<Eigen::VectorXd>& components) {
  if (components.empty()) throw invalid_input("qtv_penalty: no components");
  double sum = 0.0;
  for (const auto& c : components) sum += diff(c).squaredNorm();
  return sum;
}

namespace {

double inference_loss(const Model& model, const LabeledExample& ex,
                      double eta_qtv) {
  ComponentSet cs = decompose(ex.feature.values, model);
  double loss = frobenius_loss(cs.components, ex.labels);
  if (eta_qtv > 0.0) loss += eta_qtv * qtv_penalty(cs.components);
  return loss;
}

}  // namespace

History train(Model& model, const Dataset& dataset, const TrainConfig& cfg,
              int start_epoch) {
  cfg.validate();
  model.validate();
  if (dataset.train_idx.empty() || dataset.val_idx.empty())
    throw invalid_input("train: dataset has no train/validation split");
  for (const auto& ex : dataset.examples) {
    if (static_cast<int>(ex.labels.size()) != model.config.M)
      throw invalid_input("train: label component count does not match M");
    for (const auto& l : ex.labels)
      if (l.size() != ex.feature.values.size())
        throw invalid_input("train: label length mismatch");
  }

  Eigen::VectorXd params = model.flatten_params();
  AdamState adam(params.size(), AdamConfig{cfg.lr, 0.9, 0.999, 1e-8});
  std::mt19937_64 shuffle_rng(cfg.seed);

  History hist;
  hist.start_epoch = start_epoch;
  Eigen::VectorXd best_params = params;
  int epochs_since_best = 0;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<int> order = dataset.train_idx;
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double epoch_loss_sum = 0.0;
    for (std::size_t b0 = 0; b0 < order.size();
         b0 += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t b1 =
          std::min(order.size(), b0 + static_cast<std::size_t>(cfg.batch_size));
      Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
      double batch_loss = 0.0;
      for (std::size_t i = b0; i < b1; ++i) {
        const LabeledExample& ex = dataset.examples[order[i]];
        ad::Tape tape;
        TapeModel tm = make_tape_model(tape, model);
        auto loss = example_loss_on_tape(tape, tm, model.config,
                                         ex.feature.values, ex.labels,
                                         cfg.eta_qtv);
        const double lv = tape.value(loss)(0, 0);
        if (!std::isfinite(lv))
          throw numeric_error("train: non-finite loss at epoch " +
                              std::to_string(epoch) + ", example " +
                              std::to_string(order[i]));
        tape.backward(loss);
        grad += gather_grads(tape, tm, model);
        batch_loss += lv;
      }
      const double inv_b = 1.0 / static_cast<double>(b1 - b0);
      grad *= inv_b;
      epoch_loss_sum += batch_loss;
      adam_step(params, grad, adam);
      model.set_params(params);
    }

    EpochStats st;
    st.epoch = hist.start_epoch + epoch;
    st.train_loss = epoch_loss_sum / static_cast<double>(order.size());

    double val_sum = 0.0;
    EvalReport ev = evaluate_dataset(model, dataset, Subset::val);
    for (int vi : dataset.val_idx)
      val_sum += inference_loss(model, dataset.examples[vi], cfg.eta_qtv);
    st.val_loss = val_sum / static_cast<double>(dataset.val_idx.size());
    if (!std::isfinite(st.val_loss))
      throw numeric_error("train: non-finite validation loss at epoch " +
                          std::to_string(epoch));
    st.val_mae = ev.pooled.mae;
    st.val_rmse = ev.pooled.rmse;
    st.val_mape = ev.pooled.mape;
    st.val_tv = ev.pooled.tv;
    hist.epochs.push_back(st);

    if (hist.best_epoch < 0 || st.val_loss < hist.best_val_loss) {
      hist.best_epoch = static_cast<int>(hist.epochs.size()) - 1;
      hist.best_val_loss = st.val_loss;
      best_params = params;
      epochs_since_best = 0;
    } else if (++epochs_since_best >= cfg.early_stop_patience) {
      break;
    }
    if (cfg.verbose)
      std::fprintf(stderr, "epoch %d train_loss %.6g val_loss %.6g val_mae %.4f\n",
                   st.epoch, st.train_loss, st.val_loss, st.val_mae);
  }

  model.set_params(best_params);
  return hist;
}

namespace {

void accumulate(AggregateMetrics& a, const AggregateMetrics& b) {
  a.mae += b.mae;
  a.rmse += b.rmse;
  a.tv += b.tv;
  a.label_tv += b.label_tv;
}

}  // namespace

EvalReport evaluate_examples(const Model& model,
                             const std::vector<const LabeledExample*>& examples) {
  if (examples.empty()) throw invalid_input("evaluate_examples: no examples");
  EvalReport rep;
  AggregateMetrics pooled{};
  double pooled_mape_sum = 0.0;
  int pooled_mape_count = 0;
  AggregateMetrics outer{};
  double outer_mape_sum = 0.0;
  int outer_mape_count = 0;

  for (std::size_t e = 0; e < examples.size(); ++e) {
    const LabeledExample& ex = *examples[e];
    if (static_cast<int>(ex.labels.size()) != model.config.M)
      throw invalid_input("evaluate_examples: component count mismatch");
    ComponentSet cs = decompose(ex.feature.values, model);
    AggregateMetrics ex_mean{};
    double ex_mape_sum = 0.0;
    int ex_mape_count = 0;
    for (int m = 0; m < model.config.M; ++m) {
      ComponentRow row;
      row.example = static_cast<int>(e);
      row.component = m;
      row.pred = metrics(cs.components[m], ex.labels[m]);
      row.label_tv = total_variation(ex.labels[m]);
      rep.rows.push_back(row);

      ex_mean.mae += row.pred.mae;
      ex_mean.rmse += row.pred.rmse;
      ex_mean.tv += row.pred.tv;
      ex_mean.label_tv += row.label_tv;
      if (row.pred.mape_defined()) {
        ex_mape_sum += row.pred.mape;
        ++ex_mape_count;
      }
      pooled.mae += row.pred.mae;
      pooled.rmse += row.pred.rmse;
      pooled.tv += row.pred.tv;
      pooled.label_tv += row.label_tv;
      if (row.pred.mape_defined()) {
        pooled_mape_sum += row.pred.mape;
        ++pooled_mape_count;
      }
    }
    const double inv_m = 1.0 / model.config.M;
    ex_mean.mae *= inv_m;
    ex_mean.rmse *= inv_m;
    ex_mean.tv *= inv_m;
    ex_mean.label_tv *= inv_m;
    accumulate(outer, ex_mean);
    if (ex_mape_count > 0) {
      outer_mape_sum += ex_mape_sum / ex_mape_count;
      ++outer_mape_count;
    }
  }

  const double n_rows = static_cast<double>(rep.rows.size());
  const double n_ex = static_cast<double>(examples.size());
  rep.pooled = pooled;
  rep.pooled.mae /= n_rows;
  rep.pooled.rmse /= n_rows;
  rep.pooled.tv /= n_rows;
  rep.pooled.label_tv /= n_rows;
  rep.pooled.mape = pooled_mape_count > 0
                        ? pooled_mape_sum / pooled_mape_count
                        : std::numeric_limits<double>::quiet_NaN();
  rep.mean_of_example_means = outer;
  rep.mean_of_example_means.mae /= n_ex;
  rep.mean_of_example_means.rmse /= n_ex;
  rep.mean_of_example_means.tv /= n_ex;
  rep.mean_of_example_means.label_tv /= n_ex;
  rep.mean_of_example_means.mape =
      outer_mape_count > 0 ? outer_mape_sum / outer_mape_count
                           : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

EvalReport evaluate_dataset(const Model& model, const Dataset& dataset,
                            Subset subset) {
  std::vector<const LabeledExample*> ptrs;
  auto add = [&](const std::vector<int>& idx) {
    for (int i : idx) ptrs.push_back(&dataset.examples[i]);
  };
  if (subset == Subset::train)
    add(dataset.train_idx);
  else if (subset == Subset::val)
    add(dataset.val_idx);
  else
    for (const auto& ex : dataset.examples) ptrs.push_back(&ex);
  return evaluate_examples(model, ptrs);
}

const GridCell& GridReport::cell(int ki, int si) const {
  return cells.at(static_cast<std::size_t>(ki) * S_values.size() +
                  static_cast<std::size_t>(si));
}

double GridReport::marginal_mean(
    int ki, int si, const std::function<double(const GridCell&)>& metric) const {
  double sum = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < K_values.size(); ++k)
    for (std::size_t s = 0; s < S_values.size(); ++s) {
      if (ki >= 0 && static_cast<int>(k) != ki) continue;
      if (si >= 0 && static_cast<int>(s) != si) continue;
      const GridCell& c = cell(static_cast<int>(k), static_cast<int>(s));
      if (!c.ok) continue;
      sum += metric(c);
      ++count;
    }
  return count > 0 ? sum / count : std::numeric_limits<double>::quiet_NaN();
}

GridReport grid_search(const Dataset& dataset, const std::vector<int>& S_values,
                       const std::vector<int>& K_values, ModelConfig base,
                       const TrainConfig& train_cfg, std::uint64_t model_seed) {
  if (S_values.empty() || K_values.empty())
    throw invalid_input("grid_search: empty grid");
  GridReport rep;
  rep.S_values = S_values;
  rep.K_values = K_values;
  for (int K : K_values)
    for (int S : S_values) {
      GridCell c;
      c.S = S;
      c.K = K;
      try {
        ModelConfig cfg = base;
        cfg.S = S;
        cfg.K = K;
        Model model = Model::init(cfg, model_seed);
        History h = train(model, dataset, train_cfg);
        c.val_loss = h.best_val_loss;
        c.train_metrics = evaluate_dataset(model, dataset, Subset::train).pooled;
        c.val_metrics = evaluate_dataset(model, dataset, Subset::val).pooled;
        c.ok = true;
      } catch (const std::exception& e) {
        c.ok = false;
        c.error = e.what();
      }
      rep.cells.push_back(std::move(c));
    }
  return rep;
}

}  // namespace modedec
