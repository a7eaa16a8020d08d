#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hcl/trainer.hpp"

namespace hclcli {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Everything cmd_run needs: dataset recipe, task order, trainer settings,
/// seeds and output directory. Populated from a TOML-style config file
/// (sections + key = value; see README for the schema) plus CLI overrides.
struct ExperimentConfig {
  std::vector<std::uint64_t> seeds = {1};
  std::string outdir = "out";

  // [dataset]
  std::string dataset_kind = "gaussian";  // gaussian | moons | embedding
  int tasks = 5;
  int classes = 2;
  int dim = 8;
  double class_sep = 8.0;
  double task_shift = 8.0;
  int n_per_class = 500;
  double noise = 0.05;       // moons
  int n_per_moon = 500;      // moons
  std::string path;          // embedding CSV
  std::vector<int> order;    // 1-based task order; empty = 1..tasks
  int epochs = 16;

  hcl::TrainerConfig trainer;
};

/// Parses the file; throws ConfigError with a line-numbered message on any
/// syntax error or unknown key. No partial results.
ExperimentConfig parse_config_file(const std::string& file_path);

/// Applies one "section.key=value" override (top-level keys have no dot).
void apply_override(ExperimentConfig& cfg, const std::string& spec);

/// Cross-field checks (dataset kind known, order indices in range, ...),
/// then syncs dataset shape into the flow and registry configs: the latent
/// space always matches the data dimension and classes-per-task.
void validate(ExperimentConfig& cfg);

}  // namespace hclcli
