#pragma once

// Experiment runner behind the cwnn command line: presets, resolved
// configs, run directories and exit codes.

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace cwnn::app {

enum Exit : int { Ok = 0, ConfigFailure = 2, NumericFailure = 3, BudgetExceeded = 4 };

std::vector<std::string> preset_names();
/// Full default tree for a preset; throws ConfigError on an unknown name.
nlohmann::json preset(const std::string& name);

/// Overlays `patch` on `base`. Every key of `patch` must already exist in
/// `base` (ConfigError names the first one that does not).
void merge_into(nlohmann::json& base, const nlohmann::json& patch, const std::string& prefix = "");
/// Sets a dotted path such as "growth.epsilon" from text. The text is read
/// as JSON when it parses, otherwise as a string.
void set_path(nlohmann::json& cfg, const std::string& path, const std::string& text);

/// Preset defaults, then the config file, then `overrides`, in that order.
/// The preset comes from `preset_name`, else the file's "preset" key, else
/// example1-d1.
nlohmann::json resolve(const std::optional<std::string>& preset_name,
                       const std::optional<std::filesystem::path>& config_file,
                       const std::vector<std::pair<std::string, std::string>>& overrides);

/// $CWNN_OUTPUT_ROOT, or "runs" under the working directory.
std::filesystem::path default_output_root();

struct Outcome {
    int exit_code = Ok;
    std::filesystem::path dir;
    nlohmann::json summary;
};

/// Runs one command ("estimate-freq", "fit", "online", "diag", "sweep")
/// into `dir`. Writes config.json and summary.json there. Library errors
/// become exit codes; messages go to `err`, results to `out`.
Outcome run(const std::string& command, nlohmann::json cfg, const std::filesystem::path& dir,
            std::ostream& out, std::ostream& err);

}  // namespace cwnn::app
