#pragma once

// Config-driven front end: every subcommand is a pure function of a JSON
// config plus a seed, writing CSV/JSON artifacts and a run manifest.

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace ecsim::run {

struct RunConfig {
    std::string command; // generate energy embed variety evolve compare pipeline sweep
    nlohmann::json params = nlohmann::json::object();
    std::filesystem::path out_dir = ".";
};

struct RunManifest {
    std::string command;
    std::string config_hash;
    std::string version;
    std::string started_at;  // wall-clock ISO strings; never part of data files
    std::string finished_at;
    std::vector<std::string> outputs; // artifact paths relative to out_dir
    std::map<std::string, double> metrics;
};

// FNV-1a over the canonical (sorted-key, compact) dump
std::string config_hash(const RunConfig& cfg);

// Validates the config against the command's schema (unknown keys and type
// mismatches are InvalidConfig), executes, writes artifacts + manifest.json.
RunManifest run(const RunConfig& cfg);

// applies ECSIM_OUTPUT_ROOT when set
std::filesystem::path resolve_out_dir(const std::filesystem::path& dir);

const char* version_string();

} // namespace ecsim::run
