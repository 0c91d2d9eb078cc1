#include "catelab/config.hpp"

#include <charconv>
#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "catelab/errors.hpp"

namespace catelab {

namespace {

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

[[noreturn]] void fail(std::string_view source, std::size_t line,
                       const std::string& message) {
  std::ostringstream os;
  os << source << ":" << line << ": " << message;
  throw config_error(os.str());
}

double parse_double(std::string_view source, std::size_t line,
                    const std::string& key, const std::string& value) {
  const char* begin = value.data();
  const char* end = begin + value.size();
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc{} || ptr != end) {
    fail(source, line, "key '" + key + "': malformed number '" + value + "'");
  }
  return out;
}

std::uint64_t parse_u64(std::string_view source, std::size_t line,
                        const std::string& key, const std::string& value) {
  const char* begin = value.data();
  const char* end = begin + value.size();
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  if (ec != std::errc{} || ptr != end) {
    fail(source, line,
         "key '" + key + "': malformed unsigned integer '" + value + "'");
  }
  return out;
}

// Raw key-value block collected for one scenario; applied to a
// ScenarioConfig once the section ends so grid completeness can be checked.
struct RawScenario {
  std::string name;
  std::size_t header_line = 0;
  std::vector<std::tuple<std::string, std::string, std::size_t>> entries;
};

const std::set<std::string> kKnownKeys = {
    "kind",         "beta0",       "beta1",
    "beta2",        "beta3",       "beta4",
    "beta5",        "noise_sd",    "mu_x",
    "mu_z",         "sigma_x",     "sigma_z",
    "rho",          "propensity",  "constant_p",
    "assignment_prob", "n_units",  "n_replications",
    "master_seed",  "grid_lo",     "grid_hi",
    "grid_points",  "bins"};

ScenarioConfig build_scenario(std::string_view source, const RawScenario& raw) {
  ScenarioConfig config;
  config.name = raw.name;
  config.grid.reset();

  std::optional<double> grid_lo, grid_hi;
  std::optional<std::size_t> grid_points;
  std::optional<double> constant_p;
  std::string propensity_name;
  std::size_t propensity_line = raw.header_line;
  std::set<std::string> seen;

  for (const auto& [key, value, line] : raw.entries) {
    if (!kKnownKeys.contains(key)) {
      fail(source, line, "unknown key '" + key + "'");
    }
    if (!seen.insert(key).second) {
      fail(source, line, "duplicate key '" + key + "'");
    }
    if (key == "kind") {
      if (value == "linear") {
        config.kind = ScenarioKind::Linear;
      } else if (value == "rct") {
        config.kind = ScenarioKind::Rct;
      } else if (value == "appendix") {
        config.kind = ScenarioKind::AppendixSweep;
      } else {
        fail(source, line,
             "kind must be one of linear, rct, appendix (got '" + value + "')");
      }
    } else if (key == "beta0") {
      config.model.beta0 = parse_double(source, line, key, value);
    } else if (key == "beta1") {
      config.model.beta1 = parse_double(source, line, key, value);
    } else if (key == "beta2") {
      config.model.beta2 = parse_double(source, line, key, value);
    } else if (key == "beta3") {
      config.model.beta3 = parse_double(source, line, key, value);
    } else if (key == "beta4") {
      config.model.beta4 = parse_double(source, line, key, value);
    } else if (key == "beta5") {
      config.model.beta5 = parse_double(source, line, key, value);
    } else if (key == "noise_sd") {
      config.model.noise_sd = parse_double(source, line, key, value);
    } else if (key == "mu_x") {
      config.covariates.mu_x = parse_double(source, line, key, value);
    } else if (key == "mu_z") {
      config.covariates.mu_z = parse_double(source, line, key, value);
    } else if (key == "sigma_x") {
      config.covariates.sigma_x = parse_double(source, line, key, value);
    } else if (key == "sigma_z") {
      config.covariates.sigma_z = parse_double(source, line, key, value);
    } else if (key == "rho") {
      config.covariates.rho = parse_double(source, line, key, value);
    } else if (key == "propensity") {
      propensity_name = value;
      propensity_line = line;
    } else if (key == "constant_p") {
      constant_p = parse_double(source, line, key, value);
    } else if (key == "assignment_prob") {
      config.rct.assignment_prob = parse_double(source, line, key, value);
    } else if (key == "n_units") {
      config.n_units = parse_u64(source, line, key, value);
    } else if (key == "n_replications") {
      config.n_replications = parse_u64(source, line, key, value);
    } else if (key == "master_seed") {
      config.master_seed = parse_u64(source, line, key, value);
    } else if (key == "grid_lo") {
      grid_lo = parse_double(source, line, key, value);
    } else if (key == "grid_hi") {
      grid_hi = parse_double(source, line, key, value);
    } else if (key == "grid_points") {
      grid_points = parse_u64(source, line, key, value);
    } else if (key == "bins") {
      config.bins = parse_u64(source, line, key, value);
    }
  }

  if (!propensity_name.empty()) {
    if (propensity_name == "ignorable-logistic") {
      config.propensity = PropensitySpec::ignorable_logistic();
    } else if (propensity_name == "confounded-logistic") {
      config.propensity = PropensitySpec::confounded_logistic();
    } else if (propensity_name == "constant") {
      try {
        config.propensity = PropensitySpec::constant(constant_p.value_or(0.5));
      } catch (const invalid_parameter& e) {
        fail(source, propensity_line, e.what());
      }
    } else {
      fail(source, propensity_line,
           "propensity must be one of ignorable-logistic, "
           "confounded-logistic, constant (got '" +
               propensity_name + "')");
    }
  } else if (constant_p) {
    fail(source, raw.header_line,
         "constant_p given without 'propensity = constant'");
  }

  const int grid_given =
      (grid_lo ? 1 : 0) + (grid_hi ? 1 : 0) + (grid_points ? 1 : 0);
  if (grid_given == 3) {
    config.grid = GridSpec{*grid_lo, *grid_hi, *grid_points};
  } else if (grid_given != 0) {
    fail(source, raw.header_line,
         "grid requires all of grid_lo, grid_hi, grid_points");
  }

  try {
    config.validate();
  } catch (const invalid_parameter& e) {
    fail(source, raw.header_line,
         "scenario '" + raw.name + "': " + e.what());
  }
  return config;
}

}  // namespace

std::vector<ScenarioConfig> parse_config_text(std::string_view text,
                                              std::string_view source_name) {
  std::vector<RawScenario> raw;
  std::set<std::string> names;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    std::string_view line_view =
        text.substr(pos, nl == std::string_view::npos ? text.size() - pos
                                                      : nl - pos);
    pos = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
    ++line_no;

    std::string line = trim(line_view);
    if (line.empty() || line.front() == '#') continue;

    if (line.front() == '[') {
      if (line.back() != ']') {
        fail(source_name, line_no, "unterminated section header");
      }
      std::string name = trim(std::string_view(line).substr(1, line.size() - 2));
      if (name.empty()) {
        fail(source_name, line_no, "empty scenario name");
      }
      if (!names.insert(name).second) {
        fail(source_name, line_no, "duplicate scenario name '" + name + "'");
      }
      raw.push_back(RawScenario{name, line_no, {}});
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) {
      fail(source_name, line_no, "expected 'key = value', got '" + line + "'");
    }
    if (raw.empty()) {
      fail(source_name, line_no,
           "key outside a [scenario] section: '" + line + "'");
    }
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value = trim(std::string_view(line).substr(eq + 1));
    if (key.empty() || value.empty()) {
      fail(source_name, line_no, "empty key or value in '" + line + "'");
    }
    raw.back().entries.emplace_back(key, value, line_no);
  }

  if (raw.empty()) {
    throw config_error(std::string(source_name) +
                       ": no scenarios defined (empty scenario list)");
  }

  std::vector<ScenarioConfig> configs;
  configs.reserve(raw.size());
  for (const RawScenario& r : raw) {
    configs.push_back(build_scenario(source_name, r));
  }
  return configs;
}

std::vector<ScenarioConfig> parse_config_file(
    const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw config_error("cannot open config file: " + path.string());
  }
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_text(buffer.str(), path.string());
}

namespace {

void append_double_key(std::ostringstream& os, const char* key, double value) {
  char buf[64];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  os << key << " = " << std::string_view(buf, ptr - buf) << "\n";
}

}  // namespace

std::string to_config_text(const ScenarioConfig& config) {
  std::ostringstream os;
  os << "[" << config.name << "]\n";
  switch (config.kind) {
    case ScenarioKind::Linear: {
      os << "kind = linear\n";
      append_double_key(os, "beta0", config.model.beta0);
      append_double_key(os, "beta1", config.model.beta1);
      append_double_key(os, "beta2", config.model.beta2);
      append_double_key(os, "beta3", config.model.beta3);
      append_double_key(os, "beta4", config.model.beta4);
      append_double_key(os, "beta5", config.model.beta5);
      append_double_key(os, "noise_sd", config.model.noise_sd);
      append_double_key(os, "mu_x", config.covariates.mu_x);
      append_double_key(os, "mu_z", config.covariates.mu_z);
      append_double_key(os, "sigma_x", config.covariates.sigma_x);
      append_double_key(os, "sigma_z", config.covariates.sigma_z);
      append_double_key(os, "rho", config.covariates.rho);
      switch (config.propensity.kind()) {
        case PropensityKind::IgnorableLogistic:
          os << "propensity = ignorable-logistic\n";
          break;
        case PropensityKind::ConfoundedLogistic:
          os << "propensity = confounded-logistic\n";
          break;
        case PropensityKind::Constant:
          os << "propensity = constant\n";
          append_double_key(os, "constant_p", config.propensity.constant_p());
          break;
      }
      break;
    }
    case ScenarioKind::Rct: {
      os << "kind = rct\n";
      append_double_key(os, "assignment_prob", config.rct.assignment_prob);
      os << "bins = " << config.bins << "\n";
      break;
    }
    case ScenarioKind::AppendixSweep: {
      os << "kind = appendix\n";
      break;
    }
  }
  os << "n_units = " << config.n_units << "\n";
  os << "n_replications = " << config.n_replications << "\n";
  os << "master_seed = " << config.master_seed << "\n";
  if (config.grid) {
    append_double_key(os, "grid_lo", config.grid->lo);
    append_double_key(os, "grid_hi", config.grid->hi);
    os << "grid_points = " << config.grid->points << "\n";
  }
  return os.str();
}

namespace {

struct PresetEntry {
  const char* name;
  const char* description;
  ScenarioConfig (*build)();
};

ScenarioConfig linear_base(const char* name, double rho) {
  ScenarioConfig c;
  c.name = name;
  c.kind = ScenarioKind::Linear;
  c.model = LinearInteractionModel::demo();
  c.covariates = GaussianPairParams{0.0, 0.0, 1.0, 3.0, rho};
  c.propensity = PropensitySpec::ignorable_logistic();
  c.n_units = 2500;
  c.n_replications = 1000;
  c.master_seed = 42;
  c.grid = GridSpec{-3.0, 3.0, 61};
  return c;
}

const PresetEntry kPresets[] = {
    {"fig2-rho-neg03",
     "ignorable assignment, rho = -0.3: near-constant estimated CATE against "
     "highly variable unit effects",
     [] { return linear_base("fig2-rho-neg03", -0.3); }},
    {"fig2-rho-07",
     "ignorable assignment, rho = 0.7: estimated CATE tracks unit effects "
     "more closely",
     [] { return linear_base("fig2-rho-07", 0.7); }},
    {"fig3-confounded",
     "assignment logistic in z - x, rho = 0.7: hidden confounding biases the "
     "CATE fit",
     [] {
       ScenarioConfig c = linear_base("fig3-confounded", 0.7);
       c.propensity = PropensitySpec::confounded_logistic();
       return c;
     }},
    {"appendix-sweep",
     "randomized closed-form vs Monte Carlo check of the CATE/ITE covariance "
     "and correlation",
     [] {
       ScenarioConfig c;
       c.name = "appendix-sweep";
       c.kind = ScenarioKind::AppendixSweep;
       c.n_units = 1000000;     // Monte Carlo draws per parameter vector
       c.n_replications = 20;   // parameter vectors
       c.master_seed = 42;
       return c;
     }},
    {"rct-quadratic",
     "randomized experiment with quadratic outcome: two contradictory "
     "conditional average effect curves",
     [] {
       ScenarioConfig c;
       c.name = "rct-quadratic";
       c.kind = ScenarioKind::Rct;
       c.rct = QuadraticRctModel{0.5};
       c.bins = 25;
       c.n_units = 1000000;
       c.n_replications = 1;
       c.master_seed = 42;
       return c;
     }},
};

}  // namespace

ScenarioConfig preset(std::string_view name) {
  for (const PresetEntry& p : kPresets) {
    if (name == p.name) return p.build();
  }
  std::ostringstream os;
  os << "unknown preset '" << name << "'; available:";
  for (const PresetEntry& p : kPresets) os << " " << p.name;
  throw config_error(os.str());
}

bool is_preset(std::string_view name) {
  for (const PresetEntry& p : kPresets) {
    if (name == p.name) return true;
  }
  return false;
}

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const PresetEntry& p : kPresets) names.emplace_back(p.name);
  return names;
}

std::string preset_description(std::string_view name) {
  for (const PresetEntry& p : kPresets) {
    if (name == p.name) return p.description;
  }
  throw config_error("unknown preset '" + std::string(name) + "'");
}

std::uint64_t resolve_master_seed(std::optional<std::uint64_t> flag_seed,
                                  const char* env_value,
                                  std::uint64_t config_seed) {
  if (flag_seed) return *flag_seed;
  if (env_value != nullptr && *env_value != '\0') {
    const std::string value(env_value);
    std::uint64_t out = 0;
    const char* begin = value.data();
    const char* end = begin + value.size();
    const auto [ptr, ec] = std::from_chars(begin, end, out);
    if (ec != std::errc{} || ptr != end) {
      throw config_error("CATELAB_SEED: malformed unsigned integer '" + value +
                         "'");
    }
    return out;
  }
  return config_seed;
}

}  // namespace catelab
