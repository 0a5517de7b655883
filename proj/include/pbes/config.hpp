#ifndef PBES_CONFIG_HPP
#define PBES_CONFIG_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pbes/harness.hpp"

namespace pbes {

inline constexpr const char* kToolVersion = "1.0.0";

/// Experiment config plus CLI-only fields.
struct CliConfig {
  ExperimentConfig experiment;
  std::optional<std::string> output;
  std::vector<std::size_t> budgets;
};

/// Strict parse: unknown keys anywhere are collected and reported together
/// in one ValidationError. Relative CSV paths resolve against `base_dir`.
/// `seed_override` replaces the document's seed; one of the two is required.
CliConfig parse_cli_config(const nlohmann::json& doc, const std::filesystem::path& base_dir,
                           std::optional<std::uint64_t> seed_override = std::nullopt);

/// Reads and parses a config file. Malformed JSON raises IoError.
CliConfig load_cli_config(const std::filesystem::path& path,
                          std::optional<std::uint64_t> seed_override = std::nullopt);

/// Canonical form with every default filled in.
nlohmann::json to_json(const ExperimentConfig& config);
SyntheticParams parse_synthetic(const nlohmann::json& doc);
nlohmann::json to_json(const SyntheticParams& params);

/// FNV-1a 64 over the canonical JSON dump, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

/// Sidecar describing how a run was produced.
nlohmann::json provenance(const ExperimentConfig& config);

}  // namespace pbes

#endif  // PBES_CONFIG_HPP
