#pragma once

#include "gptomo/config.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace gptomo::cli {

/// Exit codes of the command-line driver.
enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kNumericalError = 3, kIoError = 4 };

using Json = nlohmann::json;

/// Each command writes its outputs plus `<command>.manifest.json` into
/// cfg.out_dir and returns the manifest.
Json cmd_phantom(const RunConfig& cfg);
Json cmd_sinogram(const RunConfig& cfg);
/// Reads sinogram, sinogram_clean and sigma_true from `input_dir`
/// (default cfg.out_dir) as written by cmd_sinogram.
Json cmd_reconstruct(const RunConfig& cfg, const std::optional<std::string>& input_dir = std::nullopt);
Json cmd_sweep(const RunConfig& cfg);
/// Summary table of one or more metrics CSV files.
std::string cmd_report(const std::vector<std::string>& metrics_files);

/// Re-executes the command recorded in a manifest, optionally into another directory.
Json rerun_manifest(const std::string& manifest_path, const std::optional<std::string>& out_dir = std::nullopt);

/// 64-bit FNV-1a of a file's bytes, as 16 hex digits.
std::string file_digest(const std::string& path);

/// Worker count for sweeps: GPTOMO_THREADS if set, else the hardware concurrency.
int sweep_threads();

/// Full command-line entry point; returns the exit code.
int run(int argc, char** argv);

}  // namespace gptomo::cli
