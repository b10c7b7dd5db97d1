#include <doctest.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>

#include "modedec/cli.hpp"
#include "modedec/io.hpp"
#include "modedec/svg.hpp"

using namespace modedec;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           fs::path("modedec_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace

TEST_CASE("csv round trip preserves values to full precision") {
  TempDir tmp;
  CsvTable t;
  t.columns = {"a", "b"};
  t.data.resize(2, 2);
  t.data << 1.0 / 3.0, -2.5e-17, 1e300, 0.1;
  write_csv(tmp.file("t.csv"), t);
  const CsvTable r = read_csv(tmp.file("t.csv"));
  CHECK(r.columns == t.columns);
  CHECK(r.data(0, 0) == t.data(0, 0));
  CHECK(r.data(0, 1) == t.data(0, 1));
  CHECK(r.data(1, 0) == t.data(1, 0));
  CHECK(r.data(1, 1) == t.data(1, 1));
}

TEST_CASE("csv reader reports malformed rows") {
  TempDir tmp;
  write_text(tmp.file("bad.csv"), "a,b\n1,2\n3\n");
  CHECK_THROWS_AS(read_csv(tmp.file("bad.csv")), data_error);
  write_text(tmp.file("nonnum.csv"), "a,b\n1,zzz\n");
  CHECK_THROWS_AS(read_csv(tmp.file("nonnum.csv")), data_error);
  CHECK_THROWS_AS(read_csv(tmp.file("absent.csv")), data_error);
}

TEST_CASE("signal csv round trip; date column falls back to index grid") {
  TempDir tmp;
  Signal s;
  s.grid = TimeGrid{0.0, 6.0, 5};
  s.values = Eigen::VectorXd::LinSpaced(5, -1.0, 1.0);
  write_signal_csv(tmp.file("s.csv"), s);
  const Signal r = read_signal_csv(tmp.file("s.csv"));
  CHECK(r.grid.n == 5);
  CHECK(r.values.isApprox(s.values));
  CHECK(r.grid.t_end == doctest::Approx(6.0));

  write_text(tmp.file("dated.csv"),
             "date,value\n2020-01-01,1.5\n2020-01-02,2.5\n2020-01-03,3.5\n");
  const Signal d = read_signal_csv(tmp.file("dated.csv"));
  CHECK(d.grid.n == 3);
  CHECK(d.grid.t_start == doctest::Approx(0.0));
  CHECK(d.grid.t_end == doctest::Approx(2.0));
  CHECK(d.values[2] == doctest::Approx(3.5));
}

TEST_CASE("components csv round trip with and without residue") {
  TempDir tmp;
  TimeGrid g{0.0, 1.0, 4};
  ComponentSet cs;
  cs.components = {Eigen::VectorXd::LinSpaced(4, 0.0, 3.0),
                   Eigen::VectorXd::Constant(4, 1.0)};
  cs.residue = Eigen::VectorXd::Constant(4, 0.5);
  write_components_csv(tmp.file("c.csv"), g, cs);
  const ComponentSet r = read_components_csv(tmp.file("c.csv"));
  CHECK(r.num_components() == 2);
  CHECK(r.components[0].isApprox(cs.components[0]));
  CHECK(r.residue.isApprox(cs.residue));

  write_text(tmp.file("lab.csv"), "t,imf1,imf2\n0,1,2\n1,3,4\n");
  const ComponentSet l = read_components_csv(tmp.file("lab.csv"));
  CHECK(l.num_components() == 2);
  CHECK(l.residue.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
}

TEST_CASE("config file parse, write, and unknown-key rejection") {
  TempDir tmp;
  cli::RunConfig cfg;
  cfg.grid.n = 512;
  cfg.model.K = 24;
  cfg.model.pad_mode = nn::PadMode::reflect;
  cfg.model.tvd.lambda = 0.05;
  cfg.train.lr = 2.5e-3;
  cli::write_config_ini(tmp.file("c.ini"), cfg);
  const cli::RunConfig r = cli::parse_config_file(tmp.file("c.ini"), {});
  CHECK(r.grid.n == 512);
  CHECK(r.model.K == 24);
  CHECK(r.model.pad_mode == nn::PadMode::reflect);
  CHECK(r.model.tvd.lambda == doctest::Approx(0.05));
  CHECK(r.train.lr == doctest::Approx(2.5e-3));

  write_text(tmp.file("bad.ini"), "[model]\nwat = 3\n");
  CHECK_THROWS_AS(cli::parse_config_file(tmp.file("bad.ini"), {}), invalid_input);
  write_text(tmp.file("badsec.ini"), "[nope]\nk = 1\n");
  CHECK_THROWS_AS(cli::parse_config_file(tmp.file("badsec.ini"), {}),
                  invalid_input);
}

TEST_CASE("dataset directory round trip") {
  TempDir tmp;
  const TimeGrid grid{0.0, 6.0, 64};
  Dataset ds = gen_dataset1(grid, FamilySelect::a, 3);
  ds.examples.resize(6);
  split_train_val(ds, 3);
  cli::save_dataset(tmp.file("ds"), ds, "unit", false);
  CHECK_THROWS_AS(cli::save_dataset(tmp.file("ds"), ds, "unit", false), data_error);
  cli::save_dataset(tmp.file("ds"), ds, "unit", true);  // --force path

  const Dataset r = cli::load_dataset(tmp.file("ds"));
  REQUIRE(r.examples.size() == 6);
  CHECK(r.num_components() == 2);
  CHECK(r.examples[2].feature.values.isApprox(ds.examples[2].feature.values));
  CHECK(r.examples[2].labels[0].isApprox(ds.examples[2].labels[0]));
  CHECK(r.train_idx == ds.train_idx);  // same seed -> same split
}

TEST_CASE("history and eval writers emit the documented columns") {
  TempDir tmp;
  History h;
  h.epochs = {{0, 2.0, 3.0, 0.1, 0.2, 0.3, 4.0}, {1, 1.0, 2.0, 0.05, 0.1, 0.2, 3.0}};
  cli::write_history_csv(tmp.file("h.csv"), h);
  const CsvTable t = read_csv(tmp.file("h.csv"));
  CHECK(t.columns.front() == "epoch");
  CHECK(t.data.rows() == 2);
  CHECK(t.data(1, 1) == doctest::Approx(1.0));

  EvalReport rep;
  ComponentRow row;
  row.example = 0;
  row.component = 1;
  row.pred.mae = 0.5;
  row.label_tv = 60.0;
  rep.rows = {row};
  rep.pooled.mae = 0.5;
  rep.mean_of_example_means.mae = 0.5;
  cli::write_eval_csv(tmp.file("eval"), rep);
  CHECK(fs::exists(tmp.path / "eval" / "per_component.csv"));
  std::ifstream agg(tmp.path / "eval" / "aggregates.csv");
  std::string line;
  std::getline(agg, line);
  CHECK(line == "aggregation,mae,rmse,mape,tv,label_tv");
}

TEST_CASE("svg writer produces a parseable overlay plot") {
  TempDir tmp;
  const Eigen::VectorXd x = Eigen::VectorXd::LinSpaced(50, 0.0, 6.0);
  const Eigen::VectorXd y1 = x.array().sin();
  const Eigen::VectorXd y2 = x.array().cos();
  write_line_plot_svg(tmp.file("p.svg"), "demo",
                      {{"sin", x, y1, "#d62728"}, {"cos", x, y2, "#1f77b4"}});
  std::ifstream in(tmp.file("p.svg"));
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  CHECK(text.find("<svg") != std::string::npos);
  CHECK(text.find("polyline") != std::string::npos);
  CHECK(text.find("sin") != std::string::npos);
  CHECK(text.find("</svg>") != std::string::npos);
}

TEST_CASE("cli exit codes: usage 2, data 3") {
  TempDir tmp;
  CHECK(cli::run_cli({"definitely-not-a-subcommand"}) == 2);
  CHECK(cli::run_cli({"train", "--data"}) == 2);  // missing value
  CHECK(cli::run_cli({"gen-data", "--dataset", "bogus", "--out",
                      tmp.file("x")}) == 2);
  CHECK(cli::run_cli({"decompose", "--model", tmp.file("absent.json"), "--input",
                      tmp.file("absent.csv"), "--out", tmp.file("o.csv")}) == 3);
  CHECK(cli::run_cli({"eval", "--model", tmp.file("absent.json"), "--data",
                      tmp.file("absent"), "--out", tmp.file("r")}) == 3);
}

TEST_CASE("cli end-to-end: gen-data, train, decompose, eval, tvd on a small run") {
  TempDir tmp;
  // tiny grid keeps this test fast
  REQUIRE(cli::run_cli({"gen-data", "--dataset", "d1", "--families", "a", "--out",
                        tmp.file("ds"), "--grid-n", "96"}) == 0);
  CHECK(fs::exists(tmp.path / "ds" / "manifest.json"));
  CHECK(fs::exists(tmp.path / "ds" / "effective_config.ini"));
  // refuses to overwrite without --force
  CHECK(cli::run_cli({"gen-data", "--dataset", "d1", "--families", "a", "--out",
                      tmp.file("ds"), "--grid-n", "96"}) == 3);

  REQUIRE(cli::run_cli({"train", "--data", tmp.file("ds"), "--out",
                        tmp.file("run"), "--epochs", "2", "--batch-size", "8",
                        "--S", "1", "--K", "8", "--n-scales", "2", "--d-att",
                        "4"}) == 0);
  CHECK(fs::exists(tmp.path / "run" / "model.imfmodel.json"));
  CHECK(fs::exists(tmp.path / "run" / "history.csv"));
  CHECK(fs::exists(tmp.path / "run" / "effective_config.ini"));
  const CsvTable hist = read_csv(tmp.file("run/history.csv"));
  CHECK(hist.data.rows() == 2);

  // resume continues the epoch numbering
  REQUIRE(cli::run_cli({"train", "--data", tmp.file("ds"), "--out",
                        tmp.file("run"), "--resume",
                        tmp.file("run/model.imfmodel.json"), "--epochs", "1",
                        "--batch-size", "8"}) == 0);
  const CsvTable hist2 = read_csv(tmp.file("run/history.csv"));
  CHECK(hist2.data(0, 0) == doctest::Approx(2.0));  // epochs 0,1 then resume at 2

  REQUIRE(cli::run_cli({"decompose", "--model", tmp.file("run/model.imfmodel.json"),
                        "--input", tmp.file("ds/features/feature_00000.csv"),
                        "--out", tmp.file("dec.csv")}) == 0);
  const ComponentSet cs = read_components_csv(tmp.file("dec.csv"));
  CHECK(cs.num_components() == 2);
  const Signal in = read_signal_csv(tmp.file("ds/features/feature_00000.csv"));
  CHECK((cs.reconstruct() - in.values).cwiseAbs().maxCoeff() < 1e-9);

  REQUIRE(cli::run_cli({"eval", "--model", tmp.file("run/model.imfmodel.json"),
                        "--data", tmp.file("ds"), "--out", tmp.file("rep"),
                        "--plot", "--plot-max", "1"}) == 0);
  CHECK(fs::exists(tmp.path / "rep" / "per_component.csv"));
  CHECK(fs::exists(tmp.path / "rep" / "aggregates.csv"));
  CHECK(fs::exists(tmp.path / "rep" / "example_000_imf1.svg"));

  REQUIRE(cli::run_cli({"tvd", "--input", tmp.file("ds/features/feature_00000.csv"),
                        "--out", tmp.file("den.csv"), "--lambda", "0.3"}) == 0);
  const Signal den = read_signal_csv(tmp.file("den.csv"));
  CHECK(den.grid.n == 96);
}
