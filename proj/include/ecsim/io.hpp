#pragma once

// Serialization: causal sets as JSON, embeddings / energies / variety
// tables / field snapshots as CSV with a config-hash header line.

#include <filesystem>
#include <string>

#include "ecsim/causal_set.hpp"
#include "ecsim/coarse_grain.hpp"
#include "ecsim/embedding.hpp"
#include "ecsim/energy.hpp"
#include "ecsim/madelung.hpp"

namespace ecsim::io {

// config_hash, when given, is embedded as an extra provenance key
std::string ecs_to_json(const EnergeticCausalSet& ecs, const std::string& config_hash = "");
EnergeticCausalSet ecs_from_json(const std::string& text);

std::string energy_json(const EnergyReport& report, const std::string& hash);
std::string hydro_json(const HydroState& state, const std::string& hash);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

// atomic write: temp file in the same directory, then rename
void write_text_atomic(const std::filesystem::path& path, const std::string& text);

// CSV emitters; every file starts with "# ecsim <label> config=<hash>"
std::string embedding_csv(const EmbeddingConfig& z, const std::string& hash);
std::string energy_csv(const EnergyReport& report, const std::string& hash);
std::string variety_csv(const VarietyReport& report, double discrete_value,
                        const std::string& hash);
std::string convergence_csv(const ConvergenceTable& table, const std::string& hash);
std::string hydro_csv(const HydroState& state, const std::string& hash);

// shortest round-trip double formatting, locale-independent
std::string format_double(double v);

} // namespace ecsim::io
