#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "uavnet/environment.hpp"
#include "uavnet/training.hpp"

namespace uavnet::config {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir = "runs";
};

struct ExperimentConfig {
  env::EnvConfig env;
  training::MarlConfig marl;
  RunConfig run;

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// JSON object with sections "env", "marl" and "run"; missing keys take their
// defaults, unknown keys are rejected and the result is validated.
ExperimentConfig parse_text(const std::string& text, const std::vector<std::string>& overrides = {});
ExperimentConfig parse_file(const std::filesystem::path& path,
                            const std::vector<std::string>& overrides = {});

// Applies "section.key=value"; the value is read as JSON when it parses and
// as a bare string otherwise.
void apply_override(ExperimentConfig& config, const std::string& assignment);

// Canonical JSON text (sorted keys, two-space indent).
std::string serialize(const ExperimentConfig& config);
// FNV-1a over the canonical compact JSON, as 16 hex digits.
std::string hash(const ExperimentConfig& config);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace uavnet::config
