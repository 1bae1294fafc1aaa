#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tdlab/verify.hpp"

namespace tdlab {

inline constexpr int kSchemaVersion = 1;

/// A parsed and validated experiment configuration (schema version 1, see
/// docs/config-schema.md).
struct RunConfig {
  nlohmann::json document;  ///< effective document (defaults filled, overrides applied)
  std::string kind;
  ExperimentConfig experiment;
  std::uint64_t seed = 20240917;
  std::string out_dir = "out";
  std::vector<std::string> formats{"json", "csv", "txt"};
  std::string hash;  ///< SHA-256 of the canonical effective document
};

/// Parses JSON text. Throws ConfigError with "field: reason (line L)" on any
/// schema violation; `seed_override` replaces experiment.seed before hashing.
RunConfig parse_config(const std::string& text,
                       std::optional<std::uint64_t> seed_override = std::nullopt);
RunConfig load_config(const std::string& path,
                      std::optional<std::uint64_t> seed_override = std::nullopt);

/// Lowercase hex SHA-256.
std::string sha256_hex(const std::string& bytes);

/// Canonical serialization used for hashing: sorted keys, no whitespace,
/// doubles in shortest round-trip form.
std::string canonical_dump(const nlohmann::json& j);

}  // namespace tdlab
