#pragma once

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "uavnet/config.hpp"
#include "uavnet/training.hpp"

namespace uavnet::run {

class RunExists : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string code_version();

struct TrainSummary {
  std::filesystem::path dir;
  std::vector<training::EpisodeMetrics> metrics;
};

// Trains one seed into `out`: manifest.json (written first), config.json,
// metrics.csv, checkpoints/ and the final greedy evaluation logs. Refuses to
// touch a directory that already holds a manifest unless `force` is set.
TrainSummary train_run(const config::ExperimentConfig& config, std::uint64_t seed,
                       const std::filesystem::path& out, bool force,
                       std::ostream* progress = nullptr);

// Greedy evaluation logs for a set of episodes: eval_steps.csv (one row per
// UAV per slot), eval_slots.csv (one row per slot) and eval_phases.csv (the
// averaged RIS phase of every element per slot).
void write_eval_logs(const std::filesystem::path& dir, const env::EnvConfig& env_config,
                     const std::vector<std::uint64_t>& seeds,
                     const std::vector<training::EvalResult>& results);

// Loads a checkpoint into networks built from `config` and evaluates each seed.
// An empty checkpoint path evaluates the untrained (random) initialization.
void evaluate_checkpoint(const std::filesystem::path& checkpoint, const config::ExperimentConfig& config,
                         const std::vector<std::uint64_t>& seeds, const std::filesystem::path& out);

std::string run_name(policy::Variant variant, double alpha, std::uint64_t seed);

struct SweepResult {
  std::vector<std::filesystem::path> completed;
  std::vector<std::pair<std::filesystem::path, std::string>> failed;
};

// Trains every (variant, alpha, seed) combination into its own directory;
// a failing run is recorded and the sweep continues.
SweepResult sweep(const config::ExperimentConfig& base, const std::vector<policy::Variant>& variants,
                  const std::vector<double>& alphas, const std::vector<std::uint64_t>& seeds,
                  const std::filesystem::path& root, bool force, std::ostream* progress = nullptr);

}  // namespace uavnet::run
