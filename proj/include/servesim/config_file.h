#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "servesim/config.h"
#include "servesim/gateway.h"
#include "servesim/workload.h"

namespace servesim {

// Flat "dotted.key = value" text. '#' starts a comment. Duplicate or
// unknown keys are errors (ParseError with the line number).
std::map<std::string, std::string> parse_key_values(const std::string& text);

// Every key accepted in an experiment config file.
const std::vector<std::string>& known_config_keys();

struct ExperimentConfig {
  // Shared engine settings; variant_a / variant_b start from these and apply
  // their own overrides.
  EngineConfig engine;
  SplitConfig split;
  WorkloadSpec workload;
  std::optional<std::filesystem::path> trace;
};

// Throws ConfigError (or ParseError) on bad values or an invalid resulting
// configuration.
ExperimentConfig build_experiment(const std::map<std::string, std::string>& kv);
ExperimentConfig load_experiment_file(const std::filesystem::path& path);

// Fully resolved configuration as ordered key/value pairs, for provenance.
std::vector<std::pair<std::string, std::string>> resolved_config(
    const ExperimentConfig& cfg, bool include_split);

}  // namespace servesim
