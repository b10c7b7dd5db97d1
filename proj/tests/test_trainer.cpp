#include <doctest.h>

#include <cmath>

#include "modedec/trainer.hpp"

using namespace modedec;

namespace {

// Small, fast corpus: first examples of family A on a short grid.
Dataset tiny_dataset(int count, std::uint64_t seed, bool noisy = false) {
  const TimeGrid grid{0.0, 6.0, 96};
  Dataset full = noisy ? gen_dataset2(grid, seed, FamilySelect::a)
                       : gen_dataset1(grid, FamilySelect::a, seed);
  Dataset ds;
  ds.examples.assign(full.examples.begin(), full.examples.begin() + count);
  split_train_val(ds, seed);
  return ds;
}

ModelConfig tiny_config() {
  ModelConfig cfg;
  cfg.M = 2;
  cfg.S = 2;
  cfg.K = 8;
  cfg.n_scales = 2;
  cfg.d_att = 4;
  return cfg;
}

}  // namespace

TEST_CASE("frobenius loss and qtv penalty on hand examples") {
  Eigen::VectorXd a(2), b(2);
  a << 1.0, 2.0;
  b << 0.0, 4.0;
  // (1-0)^2 + (2-4)^2 = 5, twice
  CHECK(frobenius_loss({a, a}, {b, b}) == doctest::Approx(10.0));
  CHECK_THROWS_AS(frobenius_loss({a}, {a, b}), invalid_input);

  Eigen::VectorXd c(3);
  c << 0.0, 2.0, 3.0;  // diffs 2, 1 -> 4 + 1
  CHECK(qtv_penalty({c}) == doctest::Approx(5.0));
  CHECK(qtv_penalty({c, c}) == doctest::Approx(10.0));
}

TEST_CASE("train config validation") {
  TrainConfig cfg;
  cfg.validate();
  cfg.epochs = 0;
  CHECK_THROWS_AS(cfg.validate(), invalid_input);
  cfg = TrainConfig{};
  cfg.lr = 0.0;
  CHECK_THROWS_AS(cfg.validate(), invalid_input);
}

TEST_CASE("training reduces the loss and tracks the best epoch") {
  const Dataset ds = tiny_dataset(10, 1);
  Model model = Model::init(tiny_config(), 2);
  TrainConfig cfg;
  cfg.epochs = 8;
  cfg.batch_size = 4;
  cfg.lr = 3e-3;
  cfg.seed = 3;
  const History h = train(model, ds, cfg);

  REQUIRE(!h.epochs.empty());
  CHECK(h.epochs.front().epoch == 0);
  CHECK(h.epochs.back().train_loss < h.epochs.front().train_loss);
  REQUIRE(h.best_epoch >= 0);
  CHECK(h.best_val_loss == doctest::Approx(h.epochs[h.best_epoch].val_loss));
  for (const auto& e : h.epochs) CHECK(e.val_loss >= h.best_val_loss);

  // same seeds -> identical run
  Model model2 = Model::init(tiny_config(), 2);
  const History h2 = train(model2, ds, cfg);
  CHECK(model2.flatten_params().isApprox(model.flatten_params()));
  CHECK(h2.best_val_loss == doctest::Approx(h.best_val_loss));
}

TEST_CASE("resuming offsets epoch numbering") {
  const Dataset ds = tiny_dataset(8, 4);
  Model model = Model::init(tiny_config(), 5);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 4;
  const History h = train(model, ds, cfg, 10);
  CHECK(h.start_epoch == 10);
  CHECK(h.epochs.front().epoch == 10);
  CHECK(h.epochs.back().epoch == 11);
}

TEST_CASE("train rejects mismatched datasets") {
  Dataset ds = tiny_dataset(8, 6);
  ModelConfig cfg = tiny_config();
  cfg.M = 3;
  Model model = Model::init(cfg, 7);
  CHECK_THROWS_AS(train(model, ds, TrainConfig{}), invalid_input);
}

TEST_CASE("evaluation rows agree with directly computed metrics") {
  const Dataset ds = tiny_dataset(6, 8);
  const Model model = Model::init(tiny_config(), 9);
  const EvalReport rep = evaluate_dataset(model, ds, Subset::all);
  REQUIRE(rep.rows.size() == 12);  // 6 examples x 2 components

  const ComponentSet cs = decompose(ds.examples[0].feature.values, model);
  const MetricReport direct = metrics(cs.components[1], ds.examples[0].labels[1]);
  CHECK(rep.rows[1].pred.mae == doctest::Approx(direct.mae));
  CHECK(rep.rows[1].pred.rmse == doctest::Approx(direct.rmse));
  CHECK(rep.rows[1].label_tv ==
        doctest::Approx(total_variation(ds.examples[0].labels[1])));

  // pooled mae is the mean over all rows
  double mae_sum = 0.0;
  for (const auto& r : rep.rows) mae_sum += r.pred.mae;
  CHECK(rep.pooled.mae == doctest::Approx(mae_sum / 12.0));

  // NaN-aware MAPE pooling: zero-c2 labels are excluded, aggregate stays finite
  CHECK(std::isfinite(rep.pooled.mape));
  CHECK(std::isfinite(rep.mean_of_example_means.mape));

  // subset selection partitions the rows
  const EvalReport tr = evaluate_dataset(model, ds, Subset::train);
  const EvalReport va = evaluate_dataset(model, ds, Subset::val);
  CHECK(tr.rows.size() + va.rows.size() == rep.rows.size());
}

TEST_CASE("grid search fills every cell and marginal means average the cells") {
  const Dataset ds = tiny_dataset(8, 10);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 4;
  ModelConfig base = tiny_config();
  const GridReport rep = grid_search(ds, {1, 2}, {8, 16}, base, cfg, 11);

  REQUIRE(rep.cells.size() == 4);
  for (const auto& c : rep.cells) CHECK(c.ok);
  CHECK(rep.cell(0, 1).S == 2);
  CHECK(rep.cell(1, 0).K == 16);

  auto val_mae = [](const GridCell& c) { return c.val_metrics.mae; };
  const double row0 =
      0.5 * (rep.cell(0, 0).val_metrics.mae + rep.cell(0, 1).val_metrics.mae);
  CHECK(rep.marginal_mean(0, -1, val_mae) == doctest::Approx(row0));
  const double all = 0.25 * (rep.cell(0, 0).val_metrics.mae +
                             rep.cell(0, 1).val_metrics.mae +
                             rep.cell(1, 0).val_metrics.mae +
                             rep.cell(1, 1).val_metrics.mae);
  CHECK(rep.marginal_mean(-1, -1, val_mae) == doctest::Approx(all));
}
