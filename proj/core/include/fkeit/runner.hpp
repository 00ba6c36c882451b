#pragma once

#include <string>

#include <json.hpp>

#include "fkeit/config.hpp"

namespace fkeit {

inline constexpr const char* kVersion = "fkeit 0.1.0";

/// Runs the configured experiment and returns the full result document:
/// { "provenance": {...}, "results": {...}, "runtime": {...} }.
/// Everything under "provenance" and "results" is a pure function of
/// (config, seed) at fixed chunk_size; "runtime" holds the volatile fields
/// (wall time, worker count, timestamp).
nlohmann::json run_experiment(const RunConfig& config);

/// run_experiment + artifact files: JSON document at config.output (when
/// set), plus CSV side files for curve-like results ("<output>.csv").
nlohmann::json run_experiment_to_files(const RunConfig& config);

/// The deterministic portion of a result document, serialized canonically;
/// byte-identical across worker counts for a fixed config.
std::string deterministic_dump(const nlohmann::json& result);

}  // namespace fkeit
