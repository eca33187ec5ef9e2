#pragma once

#include <nlohmann/json_fwd.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace unrisk::cli {

/// Loads a config file; a manifest (an object with a "config" key) is
/// unwrapped so reruns from manifests reproduce the original run.
nlohmann::json load_config_file(const std::filesystem::path& path);

/// Batch experiment entry points. Each writes its CSV outputs plus a
/// manifest.json with the fully resolved config into out_dir and returns a
/// small JSON summary. Throws InputError for usage problems and
/// NumericError/ConditioningError for numerical failures.
nlohmann::json run_gen_data(const nlohmann::json& config, const std::filesystem::path& out_dir);
nlohmann::json run_estimate_risk(const nlohmann::json& config, const std::filesystem::path& out_dir);
nlohmann::json run_learn(const nlohmann::json& config, const std::filesystem::path& out_dir);
nlohmann::json run_hmm_risk(const nlohmann::json& config, const std::filesystem::path& out_dir);

/// Full command-line interface (subcommands gen-data, estimate-risk, learn,
/// hmm-risk). Returns the process exit code: 0 success, 1 usage error,
/// 2 numerical failure.
int main(int argc, const char* const* argv);

}  // namespace unrisk::cli
