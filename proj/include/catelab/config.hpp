#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "catelab/harness.hpp"

namespace catelab {

/// Parses the scenario configuration format: one `[name]` section per
/// scenario, `key = value` lines, `#` comments. Keys flatten the
/// ScenarioConfig fields (kind, beta0..beta5, noise_sd, mu_x, mu_z, sigma_x,
/// sigma_z, rho, propensity, constant_p, assignment_prob, n_units,
/// n_replications, master_seed, grid_lo, grid_hi, grid_points, bins).
///
/// Throws config_error with file/line context on unknown keys, malformed
/// values, duplicate names, violated invariants, or an empty scenario list.
std::vector<ScenarioConfig> parse_config_text(std::string_view text,
                                              std::string_view source_name);
std::vector<ScenarioConfig> parse_config_file(const std::filesystem::path& path);

/// Serializes a config back to the text format at full precision, so that
/// parse_config_text(to_config_text(c)) reproduces `c` exactly.
std::string to_config_text(const ScenarioConfig& config);

/// Built-in presets: fig2-rho-neg03, fig2-rho-07, fig3-confounded,
/// appendix-sweep, rct-quadratic. Throws config_error for unknown names.
ScenarioConfig preset(std::string_view name);
bool is_preset(std::string_view name);
std::vector<std::string> preset_names();
std::string preset_description(std::string_view name);

/// Seed precedence for a run: --seed flag, then the CATELAB_SEED environment
/// value (when the flag is absent), then the configured value. A malformed
/// environment value raises config_error.
std::uint64_t resolve_master_seed(std::optional<std::uint64_t> flag_seed,
                                  const char* env_value,
                                  std::uint64_t config_seed);

}  // namespace catelab
