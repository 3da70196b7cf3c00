#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "sen/config.hpp"

namespace sen {

inline constexpr const char* kVersion = "0.1.0";

// Command-layer failures carry a category so the binary can exit with a
// stable, scriptable code per failure class.
struct CliError : std::runtime_error {
  enum class Category { kUsage, kConfig, kIo, kRuntime };

  CliError(Category c, const std::string& msg) : std::runtime_error(msg), category(c) {}
  Category category;
};

const char* category_name(CliError::Category c);
int category_exit_code(CliError::Category c);  // usage 64, config 65, io 66, runtime 70

// Full record of a run: version, command, and the complete config echo.
// The body is itself a loadable config file.
std::string manifest_text(const ExperimentConfig& cfg, const std::string& command);

// Train the configured algorithm and write manifest.txt, train_log.csv and
// checkpoint.bin into out_dir.
void cmd_train(const ExperimentConfig& cfg, const std::string& out_dir);

// Greedy evaluation over the first eval_days days; writes manifest.txt,
// kpi.json, kpi.txt and rollout.csv into out_dir and prints the KPI block.
// checkpoint_path is empty exactly when algorithm == "rb".
void cmd_evaluate(const ExperimentConfig& cfg, const std::string& checkpoint_path,
                  const std::string& out_dir);

// Side-by-side KPIs of grid-only, rule-based, and any checkpoints.
void cmd_compare(const ExperimentConfig& cfg, const std::vector<std::string>& checkpoints,
                 const std::string& out_dir);

// Retrain per alpha_d value (same seed) and tabulate the KPI shifts.
void cmd_sweep_alpha(const ExperimentConfig& cfg, std::vector<double> alphas,
                     const std::string& out_dir);

// Write the configured synthetic trace as CSV.
void cmd_synth_data(const ExperimentConfig& cfg, const std::string& out_path);

}  // namespace sen
