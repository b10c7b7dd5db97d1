#ifndef MODEDEC_CLI_HPP
#define MODEDEC_CLI_HPP

#include <string>
#include <vector>

#include "modedec/datagen.hpp"
#include "modedec/trainer.hpp"

namespace modedec::cli {

/// Effective configuration of a run: [grid], [model], [train] and [tvd]
/// sections of the config file; CLI flags override file values.
struct RunConfig {
  TimeGrid grid{};
  ModelConfig model{};
  TrainConfig train{};
};

/// Flat sectioned key-value file; unknown sections or keys are rejected.
RunConfig parse_config_file(const std::string& path, RunConfig base);
void write_config_ini(const std::string& path, const RunConfig& cfg);

/// Dataset directory layout: manifest.json + features/*.csv + labels/*.csv.
void save_dataset(const std::string& dir, const Dataset& ds,
                  const std::string& name, bool force);
Dataset load_dataset(const std::string& dir);

void write_history_csv(const std::string& path, const History& hist);
void write_grid_csv(const std::string& path, const GridReport& rep);
void write_eval_csv(const std::string& dir, const EvalReport& rep);

/// Worker cap for batch decomposition: MODEDEC_THREADS, default 1.
int worker_count();

/// Entry point used by the modedec binary and by tests.
/// Exit codes: 0 ok, 2 usage, 3 data, 4 numeric.
int run_cli(int argc, const char* const* argv);
int run_cli(const std::vector<std::string>& args);

}  // namespace modedec::cli

#endif
