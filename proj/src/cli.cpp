#include "modedec/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <thread>

#include "modedec/io.hpp"
#include "modedec/svg.hpp"
#include "modedec/tvd.hpp"

namespace modedec::cli {

namespace fs = std::filesystem;
using nlohmann::json;

// --- config file -------------------------------------------------------------

namespace {

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw invalid_input("config: bad boolean for " + key + ": " + v);
}

}  // namespace

RunConfig parse_config_file(const std::string& path, RunConfig base) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open config file " + path);
  std::string line, section;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto first = line.find_first_not_of(" \t");
    if (first == std::string::npos) continue;
    if (line[first] == '#' || line[first] == ';') continue;
    if (line[first] == '[') {
      const auto close = line.find(']', first);
      if (close == std::string::npos)
        throw invalid_input(path + ":" + std::to_string(lineno) + ": bad section");
      section = line.substr(first + 1, close - first - 1);
      if (section != "grid" && section != "model" && section != "train" &&
          section != "tvd")
        throw invalid_input("config: unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw invalid_input(path + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t");
      const auto e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string val = trim(line.substr(eq + 1));
    const std::string sk = section + "." + key;

    if (sk == "grid.t_start") base.grid.t_start = std::stod(val);
    else if (sk == "grid.t_end") base.grid.t_end = std::stod(val);
    else if (sk == "grid.n") base.grid.n = std::stoi(val);
    else if (sk == "model.M") base.model.M = std::stoi(val);
    else if (sk == "model.S") base.model.S = std::stoi(val);
    else if (sk == "model.K") base.model.K = std::stoi(val);
    else if (sk == "model.n_scales") base.model.n_scales = std::stoi(val);
    else if (sk == "model.d_att") base.model.d_att = std::stoi(val);
    else if (sk == "model.use_multiscale_attention")
      base.model.use_multiscale_attention = parse_bool(val, sk);
    else if (sk == "model.use_tvd") base.model.use_tvd = parse_bool(val, sk);
    else if (sk == "model.inner_update")
      base.model.inner_update = inner_update_from_string(val);
    else if (sk == "model.activation")
      base.model.activation = activation_from_string(val);
    else if (sk == "model.pad_mode") base.model.pad_mode = pad_mode_from_string(val);
    else if (sk == "model.tvd_grad") base.model.tvd_grad = tvd_grad_from_string(val);
    else if (sk == "tvd.lambda") base.model.tvd.lambda = std::stod(val);
    else if (sk == "tvd.nit") base.model.tvd.nit = std::stoi(val);
    else if (sk == "train.epochs") base.train.epochs = std::stoi(val);
    else if (sk == "train.batch_size") base.train.batch_size = std::stoi(val);
    else if (sk == "train.lr") base.train.lr = std::stod(val);
    else if (sk == "train.early_stop_patience")
      base.train.early_stop_patience = std::stoi(val);
    else if (sk == "train.seed") base.train.seed = std::stoull(val);
    else if (sk == "train.eta_qtv") base.train.eta_qtv = std::stod(val);
    else
      throw invalid_input("config: unknown key " + sk);
  }
  return base;
}

void write_config_ini(const std::string& path, const RunConfig& cfg) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  out << "[grid]\n";
  out << "t_start = " << format_double(cfg.grid.t_start) << '\n';
  out << "t_end = " << format_double(cfg.grid.t_end) << '\n';
  out << "n = " << cfg.grid.n << '\n';
  out << "\n[model]\n";
  out << "M = " << cfg.model.M << '\n';
  out << "S = " << cfg.model.S << '\n';
  out << "K = " << cfg.model.K << '\n';
  out << "n_scales = " << cfg.model.n_scales << '\n';
  out << "d_att = " << cfg.model.d_att << '\n';
  out << "use_multiscale_attention = "
      << (cfg.model.use_multiscale_attention ? "true" : "false") << '\n';
  out << "use_tvd = " << (cfg.model.use_tvd ? "true" : "false") << '\n';
  out << "inner_update = " << to_string(cfg.model.inner_update) << '\n';
  out << "activation = " << to_string(cfg.model.activation) << '\n';
  out << "pad_mode = " << to_string(cfg.model.pad_mode) << '\n';
  out << "tvd_grad = " << to_string(cfg.model.tvd_grad) << '\n';
  out << "\n[tvd]\n";
  out << "lambda = " << format_double(cfg.model.tvd.lambda) << '\n';
  out << "nit = " << cfg.model.tvd.nit << '\n';
  out << "\n[train]\n";
  out << "epochs = " << cfg.train.epochs << '\n';
  out << "batch_size = " << cfg.train.batch_size << '\n';
  out << "lr = " << format_double(cfg.train.lr) << '\n';
  out << "early_stop_patience = " << cfg.train.early_stop_patience << '\n';
  out << "seed = " << cfg.train.seed << '\n';
  out << "eta_qtv = " << format_double(cfg.train.eta_qtv) << '\n';
  if (!out) throw data_error("write failed: " + path);
}

// --- dataset directories ------------------------------------------------------

namespace {

std::string index_name(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s_%05zu.csv", prefix, i);
  return buf;
}

void write_label_csv(const std::string& path, const TimeGrid& grid,
                     const std::vector<Eigen::VectorXd>& labels) {
  CsvTable t;
  t.columns = {"t"};
  for (std::size_t m = 0; m < labels.size(); ++m)
    t.columns.push_back("imf" + std::to_string(m + 1));
  t.data.resize(grid.n, 1 + static_cast<Eigen::Index>(labels.size()));
  t.data.col(0) = grid.times();
  for (std::size_t m = 0; m < labels.size(); ++m)
    t.data.col(1 + static_cast<Eigen::Index>(m)) = labels[m];
  write_csv(path, t);
}

}  // namespace

void save_dataset(const std::string& dir, const Dataset& ds,
                  const std::string& name, bool force) {
  const fs::path root(dir);
  const fs::path manifest = root / "manifest.json";
  if (fs::exists(manifest) && !force)
    throw data_error(manifest.string() + " exists; use --force to overwrite");
  fs::create_directories(root / "features");
  fs::create_directories(root / "labels");

  json man;
  man["dataset"] = name;
  man["seed"] = ds.seed;
  man["examples"] = ds.examples.size();
  man["components"] = ds.num_components();
  if (!ds.examples.empty()) {
    const TimeGrid& g = ds.examples.front().feature.grid;
    man["grid"] = {{"t_start", g.t_start}, {"t_end", g.t_end}, {"n", g.n}};
  }
  json features = json::array(), labels = json::array();
  for (std::size_t i = 0; i < ds.examples.size(); ++i) {
    const auto& ex = ds.examples[i];
    const std::string f = "features/" + index_name("feature", i);
    const std::string l = "labels/" + index_name("label", i);
    write_signal_csv((root / f).string(), ex.feature);
    write_label_csv((root / l).string(), ex.feature.grid, ex.labels);
    features.push_back(f);
    labels.push_back(l);
  }
  man["features"] = features;
  man["labels"] = labels;
  std::ofstream out(manifest, std::ios::binary);
  if (!out) throw data_error("cannot write " + manifest.string());
  out << man.dump(1) << '\n';
}

Dataset load_dataset(const std::string& dir) {
  const fs::path root(dir);
  std::ifstream in(root / "manifest.json");
  if (!in) throw data_error("cannot open " + (root / "manifest.json").string());
  json man;
  try {
    in >> man;
  } catch (const json::parse_error& e) {
    throw data_error("manifest.json: " + std::string(e.what()));
  }
  Dataset ds;
  ds.seed = man.value("seed", 0ULL);
  const auto& features = man.at("features");
  const auto& labels = man.at("labels");
  if (features.size() != labels.size())
    throw data_error("manifest.json: feature/label count mismatch");
  for (std::size_t i = 0; i < features.size(); ++i) {
    LabeledExample ex;
    ex.feature = read_signal_csv((root / features[i].get<std::string>()).string());
    ComponentSet cs =
        read_components_csv((root / labels[i].get<std::string>()).string());
    if (cs.n() != ex.feature.grid.n)
      throw data_error("dataset: label length mismatch for example " +
                       std::to_string(i));
    ex.labels = cs.components;
    ex.meta.source = features[i].get<std::string>();
    ds.examples.push_back(std::move(ex));
  }
  const int ncomp = man.value("components", ds.num_components());
  if (ncomp != ds.num_components())
    throw data_error("dataset: component count does not match manifest");
  if (ds.examples.size() >= 5) split_train_val(ds, ds.seed);
  return ds;
}

// --- report writers -----------------------------------------------------------

void write_history_csv(const std::string& path, const History& hist) {
  CsvTable t;
  t.columns = {"epoch",    "train_loss", "val_loss", "val_mae",
               "val_rmse", "val_mape",   "val_tv"};
  t.data.resize(static_cast<Eigen::Index>(hist.epochs.size()), 7);
  for (std::size_t i = 0; i < hist.epochs.size(); ++i) {
    const auto& e = hist.epochs[i];
    t.data.row(static_cast<Eigen::Index>(i)) << e.epoch, e.train_loss, e.val_loss,
        e.val_mae, e.val_rmse, e.val_mape, e.val_tv;
  }
  write_csv(path, t);
}

void write_grid_csv(const std::string& path, const GridReport& rep) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  struct MetricDef {
    const char* name;
    std::function<double(const GridCell&)> train_fn, val_fn;
  };
  const std::vector<MetricDef> defs = {
      {"mae", [](const GridCell& c) { return c.train_metrics.mae; },
       [](const GridCell& c) { return c.val_metrics.mae; }},
      {"rmse", [](const GridCell& c) { return c.train_metrics.rmse; },
       [](const GridCell& c) { return c.val_metrics.rmse; }},
      {"mape", [](const GridCell& c) { return c.train_metrics.mape; },
       [](const GridCell& c) { return c.val_metrics.mape; }},
      {"tv", [](const GridCell& c) { return c.train_metrics.tv; },
       [](const GridCell& c) { return c.val_metrics.tv; }},
  };
  out << "set,K,metric";
  for (int s : rep.S_values) out << ",S" << s;
  out << ",mean\n";
  for (const char* set : {"train", "val"}) {
    const bool is_train = std::string(set) == "train";
    for (std::size_t ki = 0; ki < rep.K_values.size(); ++ki) {
      for (const auto& d : defs) {
        const auto& fn = is_train ? d.train_fn : d.val_fn;
        out << set << ',' << rep.K_values[ki] << ',' << d.name;
        for (std::size_t si = 0; si < rep.S_values.size(); ++si) {
          const GridCell& c = rep.cell(static_cast<int>(ki), static_cast<int>(si));
          out << ',' << (c.ok ? format_double(fn(c)) : "error");
        }
        out << ',' << format_double(rep.marginal_mean(static_cast<int>(ki), -1, fn))
            << '\n';
      }
    }
    for (const auto& d : defs) {
      const auto& fn = is_train ? d.train_fn : d.val_fn;
      out << set << ",mean," << d.name;
      for (std::size_t si = 0; si < rep.S_values.size(); ++si)
        out << ',' << format_double(rep.marginal_mean(-1, static_cast<int>(si), fn));
      out << ',' << format_double(rep.marginal_mean(-1, -1, fn)) << '\n';
    }
  }
  if (!out) throw data_error("write failed: " + path);
}

void write_eval_csv(const std::string& dir, const EvalReport& rep) {
  fs::create_directories(dir);
  {
    CsvTable t;
    t.columns = {"example", "component", "mae",      "rmse",
                 "mape",    "mape_excluded_count",   "tv", "label_tv"};
    t.data.resize(static_cast<Eigen::Index>(rep.rows.size()), 8);
    for (std::size_t i = 0; i < rep.rows.size(); ++i) {
      const auto& r = rep.rows[i];
      t.data.row(static_cast<Eigen::Index>(i))
          << r.example, r.component, r.pred.mae, r.pred.rmse, r.pred.mape,
          r.pred.mape_excluded_count, r.pred.tv, r.label_tv;
    }
    write_csv((fs::path(dir) / "per_component.csv").string(), t);
  }
  {
    std::ofstream out(fs::path(dir) / "aggregates.csv", std::ios::binary);
    if (!out) throw data_error("cannot write aggregates.csv");
    out << "aggregation,mae,rmse,mape,tv,label_tv\n";
    auto row = [&](const char* name, const AggregateMetrics& a) {
      out << name << ',' << format_double(a.mae) << ',' << format_double(a.rmse)
          << ',' << format_double(a.mape) << ',' << format_double(a.tv) << ','
          << format_double(a.label_tv) << '\n';
    };
    row("mean_over_examples_then_components", rep.mean_of_example_means);
    row("pooled_over_all_components", rep.pooled);
  }
}

int worker_count() {
  const char* env = std::getenv("MODEDEC_THREADS");
  if (!env) return 1;
  const int n = std::atoi(env);
  return n >= 1 ? n : 1;
}

// --- commands -----------------------------------------------------------------

namespace {

struct LatencyStats {
  double mean_ms = 0, median_ms = 0, p95_ms = 0, min_ms = 0, max_ms = 0;
};

LatencyStats latency_stats(std::vector<double> ms) {
  LatencyStats st;
  if (ms.empty()) return st;
  std::sort(ms.begin(), ms.end());
  st.min_ms = ms.front();
  st.max_ms = ms.back();
  st.median_ms = ms[ms.size() / 2];
  st.p95_ms = ms[static_cast<std::size_t>(0.95 * (ms.size() - 1))];
  st.mean_ms = 0;
  for (double v : ms) st.mean_ms += v;
  st.mean_ms /= static_cast<double>(ms.size());
  return st;
}

void write_latency_csv(const std::string& path, const std::vector<std::string>& names,
                       const std::vector<double>& ms) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw data_error("cannot write " + path);
  out << "signal,latency_ms\n";
  for (std::size_t i = 0; i < ms.size(); ++i)
    out << names[i] << ',' << format_double(ms[i]) << '\n';
}

void print_latency_stats(const LatencyStats& st, std::size_t count) {
  std::printf("decomposed %zu signals\n", count);
  std::printf("latency_ms mean %.3f median %.3f p95 %.3f min %.3f max %.3f\n",
              st.mean_ms, st.median_ms, st.p95_ms, st.min_ms, st.max_ms);
}

struct CommonModelFlags {
  std::string config_file;
  std::string variant;
  RunConfig cfg;
};

int cmd_gen_data(const std::string& dataset, const std::string& out_dir,
                 std::uint64_t seed, const RunConfig& cfg, const std::string& fam,
                 bool force, const std::string& series_csv,
                 const std::string& labels_dir, int window_len, int stride) {
  FamilySelect fs_sel = FamilySelect::both;
  if (fam == "a") fs_sel = FamilySelect::a;
  else if (fam == "b") fs_sel = FamilySelect::b;
  else if (fam != "both") throw invalid_input("gen-data: bad --families " + fam);

  Dataset ds;
  if (dataset == "d1") {
    ds = gen_dataset1(cfg.grid, fs_sel, seed);
  } else if (dataset == "d2") {
    ds = gen_dataset2(cfg.grid, seed, fs_sel);
  } else if (dataset == "x1") {
    ds.examples.push_back(test_signal_x1(cfg.grid));
    ds.seed = seed;
  } else if (dataset == "x2") {
    ds.examples.push_back(test_signal_x2(cfg.grid, seed));
    ds.seed = seed;
  } else if (dataset == "real") {
    if (series_csv.empty() || labels_dir.empty())
      throw invalid_input("gen-data real: --series and --labels-dir are required");
    Signal series = read_signal_csv(series_csv);
    std::vector<Signal> windows = window_series(series, window_len, stride);
    std::vector<std::string> label_files;
    for (const auto& e : fs::directory_iterator(labels_dir))
      if (e.path().extension() == ".csv") label_files.push_back(e.path().string());
    std::sort(label_files.begin(), label_files.end());
    ds = attach_labels(windows, label_files, seed);
  } else {
    throw invalid_input("gen-data: unknown dataset " + dataset);
  }
  save_dataset(out_dir, ds, dataset, force);
  write_config_ini((fs::path(out_dir) / "effective_config.ini").string(), cfg);
  std::printf("wrote %zu examples to %s\n", ds.examples.size(), out_dir.c_str());
  return 0;
}

int cmd_train(const std::string& data_dir, const std::string& out_dir,
              RunConfig cfg, const std::string& variant, bool user_set_m,
              const std::string& resume_from, bool verbose) {
  Dataset ds = load_dataset(data_dir);
  if (ds.train_idx.empty())
    throw data_error("train: dataset too small for a train/validation split");
  if (!user_set_m) cfg.model.M = ds.num_components();
  if (cfg.model.M != ds.num_components())
    throw invalid_input("train: model M=" + std::to_string(cfg.model.M) +
                        " but dataset has " + std::to_string(ds.num_components()) +
                        " components");
  if (!variant.empty())
    cfg.model = build_variant(variant_from_string(variant), cfg.model);
  cfg.model.validate();
  cfg.train.validate();
  cfg.train.verbose = verbose;

  fs::create_directories(out_dir);
  const fs::path history_path = fs::path(out_dir) / "history.csv";

  Model model;
  int start_epoch = 0;
  if (!resume_from.empty()) {
    std::ifstream in(resume_from);
    if (!in) throw data_error("cannot open checkpoint " + resume_from);
    std::stringstream ss;
    ss << in.rdbuf();
    model = deserialize(ss.str());
    if (fs::exists(history_path)) {
      CsvTable prev = read_csv(history_path.string());
      if (prev.data.rows() > 0)
        start_epoch = static_cast<int>(prev.data(prev.data.rows() - 1, 0)) + 1;
    }
  } else {
    model = Model::init(cfg.model, cfg.train.seed);
  }

  History hist = train(model, ds, cfg.train, start_epoch);

  std::ofstream out(fs::path(out_dir) / "model.imfmodel.json", std::ios::binary);
  if (!out) throw data_error("cannot write checkpoint");
  out << serialize(model);
  write_history_csv(history_path.string(), hist);
  write_config_ini((fs::path(out_dir) / "effective_config.ini").string(), cfg);
  std::printf("best epoch %d val_loss %.8g\n",
              hist.best_epoch >= 0 ? hist.epochs[hist.best_epoch].epoch : -1,
              hist.best_val_loss);
  return 0;
}

Model load_model_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open model " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return deserialize(ss.str());
}

int cmd_decompose(const std::string& model_file, const std::string& input,
                  const std::string& output) {
  Model model = load_model_file(model_file);
  if (fs::is_directory(input)) {
    fs::create_directories(output);
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(input))
      if (e.path().extension() == ".csv") files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw data_error("decompose: no .csv files in " + input);

    std::vector<double> latency_ms(files.size());
    std::vector<std::string> names(files.size());
    const int workers = std::min<int>(worker_count(), static_cast<int>(files.size()));
    std::atomic<std::size_t> next{0};
    auto run = [&]() {
      for (std::size_t i; (i = next.fetch_add(1)) < files.size();) {
        Signal s = read_signal_csv(files[i]);
        const auto t0 = std::chrono::steady_clock::now();
        ComponentSet cs = decompose(s, model);
        const auto t1 = std::chrono::steady_clock::now();
        latency_ms[i] =
            std::chrono::duration<double, std::milli>(t1 - t0).count();
        names[i] = fs::path(files[i]).filename().string();
        write_components_csv((fs::path(output) / names[i]).string(), s.grid, cs);
      }
    };
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(run);
    run();
    for (auto& t : pool) t.join();

    write_latency_csv((fs::path(output) / "latency_report.csv").string(), names,
                      latency_ms);
    print_latency_stats(latency_stats(latency_ms), files.size());
    return 0;
  }

  Signal s = read_signal_csv(input);
  ComponentSet cs = decompose(s, model);
  write_components_csv(output, s.grid, cs);
  const double recon_err = (cs.reconstruct() - s.values).cwiseAbs().maxCoeff();
  std::fprintf(stderr, "reconstruction max abs error: %.3g\n", recon_err);
  return 0;
}

int cmd_eval(const std::string& model_file, const std::string& data_dir,
             const std::string& out_dir, const std::string& subset_name,
             bool plot, int plot_max) {
  Model model = load_model_file(model_file);
  Dataset ds = load_dataset(data_dir);
  Subset subset = Subset::val;
  if (subset_name == "train") subset = Subset::train;
  else if (subset_name == "val") subset = Subset::val;
  else if (subset_name == "all") subset = Subset::all;
  else throw invalid_input("eval: bad --subset " + subset_name);
  if (ds.val_idx.empty()) subset = Subset::all;

  EvalReport rep = evaluate_dataset(model, ds, subset);
  write_eval_csv(out_dir, rep);

  if (plot) {
    std::vector<const LabeledExample*> ptrs;
    if (subset == Subset::train)
      for (int i : ds.train_idx) ptrs.push_back(&ds.examples[i]);
    else if (subset == Subset::val)
      for (int i : ds.val_idx) ptrs.push_back(&ds.examples[i]);
    else
      for (const auto& ex : ds.examples) ptrs.push_back(&ex);
    const int count = std::min<int>(plot_max, static_cast<int>(ptrs.size()));
    for (int e = 0; e < count; ++e) {
      const auto& ex = *ptrs[e];
      ComponentSet cs = decompose(ex.feature.values, model);
      const Eigen::VectorXd t = ex.feature.grid.times();
      for (int m = 0; m < model.config.M; ++m) {
        std::vector<SvgSeries> series = {
            {"label", t, ex.labels[m], "#555555"},
            {"predicted", t, cs.components[m], "#d62728"},
        };
        char name[64];
        std::snprintf(name, sizeof(name), "example_%03d_imf%d.svg", e, m + 1);
        write_line_plot_svg((fs::path(out_dir) / name).string(),
                            "component " + std::to_string(m + 1), series);
      }
    }
  }
  std::printf("pooled val: mae %.6g rmse %.6g mape %.6g tv %.6g\n",
              rep.pooled.mae, rep.pooled.rmse, rep.pooled.mape, rep.pooled.tv);
  return 0;
}

int cmd_tvd(const std::string& input, const std::string& output, double lambda,
            int nit) {
  Signal s = read_signal_csv(input);
  TvdParams params{lambda, nit};
  std::vector<double> trace;
  Signal out = s;
  out.values = tvd_denoise(s.values, params, &trace);
  write_signal_csv(output, out);
  std::printf("objective before: %.10g\n", trace.front());
  std::printf("objective after:  %.10g\n", trace.back());
  return 0;
}

int cmd_grid(const std::string& data_dir, const std::string& out_dir,
             const RunConfig& cfg, const std::vector<int>& s_values,
             const std::vector<int>& k_values, std::uint64_t model_seed) {
  Dataset ds = load_dataset(data_dir);
  GridReport rep = grid_search(ds, s_values, k_values, cfg.model, cfg.train,
                               model_seed);
  fs::create_directories(out_dir);
  write_grid_csv((fs::path(out_dir) / "grid.csv").string(), rep);
  write_config_ini((fs::path(out_dir) / "effective_config.ini").string(), cfg);
  for (const auto& c : rep.cells)
    if (!c.ok)
      std::fprintf(stderr, "cell S=%d K=%d failed: %s\n", c.S, c.K,
                   c.error.c_str());
  std::printf("grid written to %s\n", out_dir.c_str());
  return 0;
}

int cmd_bench(const std::string& model_file, const std::string& out_dir,
              const RunConfig& cfg, int count, std::uint64_t seed) {
  Model model = model_file.empty() ? Model::init(cfg.model, seed)
                                   : load_model_file(model_file);
  fs::create_directories(out_dir);

  // Two-tone signals from the synthetic family distribution.
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_k(5, 14);
  std::uniform_int_distribution<int> pick_chirp(0, 1);
  const Eigen::VectorXd t = cfg.grid.times();
  std::vector<Eigen::VectorXd> signals(count);
  for (int i = 0; i < count; ++i) {
    const int k = pick_k(rng);
    const double a = k + 1.5;
    Eigen::ArrayXd phase = a * 3.14159265358979323846 * t.array();
    if (pick_chirp(rng)) phase += t.array().square() + t.array().cos();
    signals[i] = phase.cos().matrix() +
                 (k * 3.14159265358979323846 * t.array()).cos().matrix();
  }

  std::vector<double> latency_ms(count);
  std::vector<std::string> names(count);
  const int workers = std::min(worker_count(), count);
  std::atomic<int> next{0};
  auto run = [&]() {
    for (int i; (i = next.fetch_add(1)) < count;) {
      const auto t0 = std::chrono::steady_clock::now();
      ComponentSet cs = decompose(signals[i], model);
      const auto t1 = std::chrono::steady_clock::now();
      (void)cs;
      latency_ms[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
      names[i] = "signal_" + std::to_string(i);
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(run);
  run();
  for (auto& th : pool) th.join();

  write_latency_csv((fs::path(out_dir) / "latency_report.csv").string(), names,
                    latency_ms);
  write_config_ini((fs::path(out_dir) / "effective_config.ini").string(), cfg);
  print_latency_stats(latency_stats(latency_ms), latency_ms.size());
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"non-stationary signal decomposition via iterative residual "
               "convolutional networks"};
  app.require_subcommand(1);

  // Shared configuration flags; each subcommand applies file then flags.
  struct Shared {
    std::string config_file;
    RunConfig cfg;
  };

  auto add_config_flags = [](CLI::App* sub, Shared& sh) {
    sub->add_option("--config", sh.config_file, "sectioned key-value config file");
    sub->add_option("--grid-n", sh.cfg.grid.n, "grid sample count");
    sub->add_option("--grid-t0", sh.cfg.grid.t_start, "grid start time");
    sub->add_option("--grid-t1", sh.cfg.grid.t_end, "grid end time");
    sub->add_option("--M", sh.cfg.model.M, "number of IMF stages");
    sub->add_option("--S", sh.cfg.model.S, "inner iterations");
    sub->add_option("--K", sh.cfg.model.K, "base kernel length");
    sub->add_option("--n-scales", sh.cfg.model.n_scales, "multi-scale branches");
    sub->add_option("--d-att", sh.cfg.model.d_att, "attention width");
    sub->add_option("--inner-update", sh.cfg.model.inner_update,
                    "anchored|from_current")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, InnerUpdate>{
                {"anchored", InnerUpdate::anchored},
                {"from_current", InnerUpdate::from_current}}));
    sub->add_option("--activation", sh.cfg.model.activation, "tanh|relu")
        ->transform(CLI::CheckedTransformer(
            std::map<std::string, nn::Activation>{
                {"tanh", nn::Activation::tanh}, {"relu", nn::Activation::relu}}));
    sub->add_option("--pad", sh.cfg.model.pad_mode, "zero|reflect")
        ->transform(CLI::CheckedTransformer(std::map<std::string, nn::PadMode>{
            {"zero", nn::PadMode::zero}, {"reflect", nn::PadMode::reflect}}));
    sub->add_option("--tvd-grad", sh.cfg.model.tvd_grad, "straight_through|none")
        ->transform(CLI::CheckedTransformer(std::map<std::string, TvdGrad>{
            {"straight_through", TvdGrad::straight_through},
            {"none", TvdGrad::none}}));
    sub->add_option("--tvd-lambda", sh.cfg.model.tvd.lambda, "TVD penalty");
    sub->add_option("--tvd-nit", sh.cfg.model.tvd.nit, "TVD iterations");
    sub->add_option("--epochs", sh.cfg.train.epochs, "training epochs");
    sub->add_option("--batch-size", sh.cfg.train.batch_size, "batch size");
    sub->add_option("--lr", sh.cfg.train.lr, "learning rate");
    sub->add_option("--patience", sh.cfg.train.early_stop_patience,
                    "early stopping patience");
    sub->add_option("--seed", sh.cfg.train.seed, "run seed");
    sub->add_option("--eta-qtv", sh.cfg.train.eta_qtv, "legacy QTV weight");
  };

  // Flags override file values: re-parse the file into the defaults first.
  auto finalize_config = [](CLI::App* sub, Shared& sh) {
    if (sh.config_file.empty()) return;
    RunConfig from_file = parse_config_file(sh.config_file, RunConfig{});
    RunConfig merged = from_file;
    // Re-apply any flag the user passed on top of the file values.
    if (sub->count("--grid-n")) merged.grid.n = sh.cfg.grid.n;
    if (sub->count("--grid-t0")) merged.grid.t_start = sh.cfg.grid.t_start;
    if (sub->count("--grid-t1")) merged.grid.t_end = sh.cfg.grid.t_end;
    if (sub->count("--M")) merged.model.M = sh.cfg.model.M;
    if (sub->count("--S")) merged.model.S = sh.cfg.model.S;
    if (sub->count("--K")) merged.model.K = sh.cfg.model.K;
    if (sub->count("--n-scales")) merged.model.n_scales = sh.cfg.model.n_scales;
    if (sub->count("--d-att")) merged.model.d_att = sh.cfg.model.d_att;
    if (sub->count("--inner-update"))
      merged.model.inner_update = sh.cfg.model.inner_update;
    if (sub->count("--activation")) merged.model.activation = sh.cfg.model.activation;
    if (sub->count("--pad")) merged.model.pad_mode = sh.cfg.model.pad_mode;
    if (sub->count("--tvd-grad")) merged.model.tvd_grad = sh.cfg.model.tvd_grad;
    if (sub->count("--tvd-lambda")) merged.model.tvd.lambda = sh.cfg.model.tvd.lambda;
    if (sub->count("--tvd-nit")) merged.model.tvd.nit = sh.cfg.model.tvd.nit;
    if (sub->count("--epochs")) merged.train.epochs = sh.cfg.train.epochs;
    if (sub->count("--batch-size")) merged.train.batch_size = sh.cfg.train.batch_size;
    if (sub->count("--lr")) merged.train.lr = sh.cfg.train.lr;
    if (sub->count("--patience"))
      merged.train.early_stop_patience = sh.cfg.train.early_stop_patience;
    if (sub->count("--seed")) merged.train.seed = sh.cfg.train.seed;
    if (sub->count("--eta-qtv")) merged.train.eta_qtv = sh.cfg.train.eta_qtv;
    sh.cfg = merged;
  };

  // gen-data
  Shared gen_sh;
  std::string gen_dataset_name, gen_out, gen_fam = "both", gen_series, gen_labels;
  bool gen_force = false;
  int gen_window = 720, gen_stride = 180;
  auto* gen = app.add_subcommand("gen-data", "generate a dataset directory");
  gen->add_option("--dataset", gen_dataset_name, "d1|d2|x1|x2|real")->required();
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--families", gen_fam, "a|b|both (synthetic datasets)");
  gen->add_option("--series", gen_series, "real series CSV (real)");
  gen->add_option("--labels-dir", gen_labels, "directory of label CSVs (real)");
  gen->add_option("--window-len", gen_window, "window length (real)");
  gen->add_option("--stride", gen_stride, "window stride (real)");
  gen->add_flag("--force", gen_force, "overwrite existing output");
  add_config_flags(gen, gen_sh);

  // train
  Shared train_sh;
  std::string train_data, train_out, train_variant, train_resume;
  bool train_verbose = false;
  auto* tr = app.add_subcommand("train", "train a decomposition model");
  tr->add_option("--data", train_data, "dataset directory")->required();
  tr->add_option("--out", train_out, "output directory")->required();
  tr->add_option("--variant", train_variant,
                 "ircnn|ircnn_tvd|ircnn_att|ircnn_plus");
  tr->add_option("--resume", train_resume, "checkpoint to resume from");
  tr->add_flag("--verbose", train_verbose, "per-epoch progress on stderr");
  add_config_flags(tr, train_sh);

  // decompose
  std::string dec_model, dec_input, dec_output;
  auto* dec = app.add_subcommand("decompose", "decompose a signal or directory");
  dec->add_option("--model", dec_model, "model checkpoint")->required();
  dec->add_option("--input", dec_input, "signal CSV or directory")->required();
  dec->add_option("--out", dec_output, "output CSV or directory")->required();

  // eval
  std::string eval_model, eval_data, eval_out, eval_subset = "val";
  bool eval_plot = false;
  int eval_plot_max = 8;
  auto* ev = app.add_subcommand("eval", "evaluate a model against labels");
  ev->add_option("--model", eval_model, "model checkpoint")->required();
  ev->add_option("--data", eval_data, "dataset directory")->required();
  ev->add_option("--out", eval_out, "report directory")->required();
  ev->add_option("--subset", eval_subset, "train|val|all");
  ev->add_flag("--plot", eval_plot, "emit SVG overlays");
  ev->add_option("--plot-max", eval_plot_max, "max examples to plot");

  // tvd
  std::string tvd_in, tvd_out;
  double tvd_lambda = 0.2;
  int tvd_nit = 20;
  auto* tv = app.add_subcommand("tvd", "standalone total-variation denoising");
  tv->add_option("--input", tvd_in, "signal CSV")->required();
  tv->add_option("--out", tvd_out, "output CSV")->required();
  tv->add_option("--lambda", tvd_lambda, "penalty");
  tv->add_option("--nit", tvd_nit, "iterations");

  // grid
  Shared grid_sh;
  std::string grid_data, grid_out;
  std::vector<int> grid_s = {3, 4, 5, 6}, grid_k = {16, 32, 48, 64};
  std::uint64_t grid_model_seed = 0;
  auto* gr = app.add_subcommand("grid", "S x K hyper-parameter grid search");
  gr->add_option("--data", grid_data, "dataset directory")->required();
  gr->add_option("--out", grid_out, "report directory")->required();
  gr->add_option("--S-values", grid_s, "inner iteration counts");
  gr->add_option("--K-values", grid_k, "kernel lengths");
  gr->add_option("--model-seed", grid_model_seed, "initialization seed");
  add_config_flags(gr, grid_sh);

  // bench
  Shared bench_sh;
  std::string bench_model, bench_out;
  int bench_count = 500;
  std::uint64_t bench_seed = 0;
  auto* be = app.add_subcommand("bench", "batch decomposition throughput");
  be->add_option("--model", bench_model, "model checkpoint (default: fresh init)");
  be->add_option("--out", bench_out, "report directory")->required();
  be->add_option("--count", bench_count, "number of signals");
  be->add_option("--bench-seed", bench_seed, "signal generation seed");
  add_config_flags(be, bench_sh);

  try {
    app.parse(argc, argv);
    if (gen->parsed()) {
      finalize_config(gen, gen_sh);
      return cmd_gen_data(gen_dataset_name, gen_out, gen_sh.cfg.train.seed,
                          gen_sh.cfg, gen_fam, gen_force, gen_series, gen_labels,
                          gen_window, gen_stride);
    }
    if (tr->parsed()) {
      finalize_config(tr, train_sh);
      return cmd_train(train_data, train_out, train_sh.cfg, train_variant,
                       tr->count("--M") > 0, train_resume, train_verbose);
    }
    if (dec->parsed()) return cmd_decompose(dec_model, dec_input, dec_output);
    if (ev->parsed())
      return cmd_eval(eval_model, eval_data, eval_out, eval_subset, eval_plot,
                      eval_plot_max);
    if (tv->parsed()) return cmd_tvd(tvd_in, tvd_out, tvd_lambda, tvd_nit);
    if (gr->parsed()) {
      finalize_config(gr, grid_sh);
      return cmd_grid(grid_data, grid_out, grid_sh.cfg, grid_s, grid_k,
                      grid_model_seed);
    }
    if (be->parsed()) {
      finalize_config(be, bench_sh);
      return cmd_bench(bench_model, bench_out, bench_sh.cfg, bench_count,
                       bench_seed);
    }
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const invalid_input& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const data_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const numeric_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 4;
  }
}

int run_cli(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.push_back("modedec");
  for (const auto& a : args) argv.push_back(a.c_str());
  return run_cli(static_cast<int>(argv.size()), argv.data());
}

}  // namespace modedec::cli
