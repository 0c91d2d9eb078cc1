#include "catelab/report.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "catelab/errors.hpp"

namespace catelab {

namespace {

using nlohmann::json;

void append_double(std::string& out, double value) {
  char buf[64];
  const auto [ptr, ec] =
      std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
  out.append(buf, static_cast<std::size_t>(ptr - buf));
}

// All artifact writes go through here: the payload is written to a temporary
// sibling first and renamed into place, so a failed write never leaves a
// partial artifact behind.
void write_file(const std::filesystem::path& path, const std::string& payload) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw io_error("cannot open for writing: " + tmp.string());
    }
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      std::filesystem::remove(tmp, ec);
      throw io_error("write failed: " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ec2;
    std::filesystem::remove(tmp, ec2);
    throw io_error("cannot move " + tmp.string() + " into place: " +
                   ec.message());
  }
}

std::string scatter_csv(const AggregateReport& report) {
  std::string out = "unit_id,x,ite_true,cate_true,cate_hat\n";
  for (const ScatterRow& row : report.scatter) {
    out += std::to_string(row.unit_id);
    out += ',';
    append_double(out, row.x);
    out += ',';
    append_double(out, row.ite_true);
    out += ',';
    append_double(out, row.cate_true);
    out += ',';
    append_double(out, row.cate_hat);
    out += '\n';
  }
  return out;
}

std::string grid_csv(const AggregateReport& report) {
  std::string out = "x,mean_estimate,band_lo,band_hi,truth\n";
  for (const GridPointSummary& p : report.grid_summary) {
    append_double(out, p.x);
    out += ',';
    append_double(out, p.mean_estimate);
    out += ',';
    append_double(out, p.band_lo);
    out += ',';
    append_double(out, p.band_hi);
    out += ',';
    append_double(out, p.truth);
    out += '\n';
  }
  return out;
}

std::string bins_csv(const std::vector<BinnedCate>& bins) {
  std::string out =
      "bin_center,contrast,oracle,n_treated,n_control,std_error,valid\n";
  for (const BinnedCate& b : bins) {
    append_double(out, b.center);
    out += ',';
    if (b.valid) {
      append_double(out, b.contrast);
    } else {
      out += "nan";
    }
    out += ',';
    append_double(out, b.oracle);
    out += ',';
    out += std::to_string(b.n_treated);
    out += ',';
    out += std::to_string(b.n_control);
    out += ',';
    if (b.valid) {
      append_double(out, b.std_error);
    } else {
      out += "nan";
    }
    out += ',';
    out += b.valid ? '1' : '0';
    out += '\n';
  }
  return out;
}

std::string appendix_csv(const std::vector<AppendixRow>& rows) {
  std::string out =
      "beta4,beta5,rho,sigma_x,sigma_z,closed_form_cov,empirical_cov,"
      "closed_form_corr,empirical_corr\n";
  for (const AppendixRow& r : rows) {
    append_double(out, r.beta4);
    out += ',';
    append_double(out, r.beta5);
    out += ',';
    append_double(out, r.rho);
    out += ',';
    append_double(out, r.sigma_x);
    out += ',';
    append_double(out, r.sigma_z);
    out += ',';
    append_double(out, r.closed_form_cov);
    out += ',';
    append_double(out, r.empirical_cov);
    out += ',';
    append_double(out, r.closed_form_corr);
    out += ',';
    append_double(out, r.empirical_corr);
    out += '\n';
  }
  return out;
}

json discordance_json(const DiscordanceReport& d) {
  json j;
  if (d.closed_form_covariance) {
    j["closed_form_covariance"] = *d.closed_form_covariance;
  }
  if (d.closed_form_correlation) {
    j["closed_form_correlation"] = *d.closed_form_correlation;
  }
  if (d.empirical_correlation) {
    j["empirical_correlation"] = *d.empirical_correlation;
  }
  j["sign_disagreement_rate"] = d.sign_disagreement_rate;
  j["cate_mse"] = d.cate_mse;
  return j;
}

struct ScenarioOutput {
  std::vector<std::string> files;
  json summary;
};

ScenarioOutput write_linear(const ScenarioConfig& config,
                            const std::filesystem::path& dir,
                            unsigned threads) {
  const AggregateReport report = run_scenario(config, threads);

  ScenarioOutput out;
  const std::string scatter_name = config.name + "_scatter.csv";
  write_file(dir / scatter_name, scatter_csv(report));
  out.files.push_back(scatter_name);

  if (!report.grid_summary.empty()) {
    const std::string grid_name = config.name + "_grid.csv";
    write_file(dir / grid_name, grid_csv(report));
    out.files.push_back(grid_name);
  }

  json& s = out.summary;
  s["name"] = config.name;
  s["kind"] = "linear";
  s["mean_mse"] = report.mean_mse;
  s["n_success"] = report.n_success;
  s["per_replication_mse"] = report.per_replication_mse;
  s["replication_indices"] = report.replication_indices;
  json failures = json::array();
  for (const FailedReplication& f : report.failures) {
    failures.push_back({{"rep_index", f.rep_index}, {"message", f.message}});
  }
  s["failed_replications"] = failures;
  s["discordance"] = discordance_json(report.discordance);
  return out;
}

ScenarioOutput write_rct(const ScenarioConfig& config,
                         const std::filesystem::path& dir) {
  const RctReport report = run_rct_scenario(config);

  ScenarioOutput out;
  const std::string x1_name = config.name + "_bins_x1.csv";
  const std::string x2_name = config.name + "_bins_x2.csv";
  write_file(dir / x1_name, bins_csv(report.x1_bins));
  write_file(dir / x2_name, bins_csv(report.x2_bins));
  out.files = {x1_name, x2_name};

  json& s = out.summary;
  s["name"] = config.name;
  s["kind"] = "rct";
  s["mean_ite"] = report.mean_ite;
  s["x1_quadratic_coeff"] = report.x1_quadratic_coeff;
  s["x2_quadratic_coeff"] = report.x2_quadratic_coeff;
  std::size_t invalid = 0;
  for (const BinnedCate& b : report.x1_bins) invalid += b.valid ? 0 : 1;
  for (const BinnedCate& b : report.x2_bins) invalid += b.valid ? 0 : 1;
  s["invalid_bins"] = invalid;
  return out;
}

ScenarioOutput write_appendix(const ScenarioConfig& config,
                              const std::filesystem::path& dir) {
  const std::vector<AppendixRow> rows = run_appendix_sweep(
      config.n_replications, config.n_units, config.master_seed);

  ScenarioOutput out;
  const std::string table_name = config.name + "_appendix.csv";
  write_file(dir / table_name, appendix_csv(rows));
  out.files = {table_name};

  double max_corr_gap = 0.0;
  double max_cov_gap = 0.0;
  for (const AppendixRow& r : rows) {
    max_corr_gap =
        std::max(max_corr_gap, std::abs(r.closed_form_corr - r.empirical_corr));
    max_cov_gap =
        std::max(max_cov_gap, std::abs(r.closed_form_cov - r.empirical_cov));
  }

  json& s = out.summary;
  s["name"] = config.name;
  s["kind"] = "appendix";
  s["n_vectors"] = config.n_replications;
  s["draws_per_vector"] = config.n_units;
  s["max_correlation_gap"] = max_corr_gap;
  s["max_covariance_gap"] = max_cov_gap;
  return out;
}

}  // namespace

bool RunManifest::all_succeeded() const {
  for (const ScenarioRecord& s : scenarios) {
    if (!s.error.empty()) return false;
  }
  return true;
}

RunManifest run_and_report(const std::vector<ScenarioConfig>& configs,
                           const RunOptions& options) {
  if (configs.empty()) {
    throw config_error("run_and_report: empty scenario list");
  }
  std::error_code ec;
  std::filesystem::create_directories(options.out_dir, ec);
  if (ec) {
    throw io_error("cannot create output directory " +
                   options.out_dir.string() + ": " + ec.message());
  }

  RunManifest manifest;
  manifest.tool_version = std::string(kToolVersion);

  for (const ScenarioConfig& config : configs) {
    ScenarioRecord record;
    record.name = config.name;
    record.master_seed = config.master_seed;
    record.config_echo = to_config_text(config);

    const auto start = std::chrono::steady_clock::now();
    try {
      ScenarioOutput output;
      switch (config.kind) {
        case ScenarioKind::Linear:
          output = write_linear(config, options.out_dir, options.threads);
          break;
        case ScenarioKind::Rct:
          output = write_rct(config, options.out_dir);
          break;
        case ScenarioKind::AppendixSweep:
          output = write_appendix(config, options.out_dir);
          break;
      }
      output.summary["config_echo"] = record.config_echo;
      output.summary["master_seed"] = config.master_seed;
      const std::string summary_name = config.name + "_summary.json";
      write_file(options.out_dir / summary_name, output.summary.dump(2) + "\n");
      output.files.push_back(summary_name);
      record.files = std::move(output.files);
    } catch (const io_error&) {
      throw;  // I/O problems abort the whole run
    } catch (const error& e) {
      record.error = e.what();
    }
    const auto end = std::chrono::steady_clock::now();
    record.duration_seconds =
        std::chrono::duration<double>(end - start).count();
    manifest.scenarios.push_back(std::move(record));
  }

  json m;
  m["tool_version"] = manifest.tool_version;
  json scenarios = json::array();
  for (const ScenarioRecord& s : manifest.scenarios) {
    json js;
    js["name"] = s.name;
    js["master_seed"] = s.master_seed;
    js["files"] = s.files;
    js["duration_seconds"] = s.duration_seconds;
    js["config_echo"] = s.config_echo;
    if (!s.error.empty()) js["error"] = s.error;
    scenarios.push_back(std::move(js));
  }
  m["scenarios"] = std::move(scenarios);
  write_file(options.out_dir / "manifest.json", m.dump(2) + "\n");

  return manifest;
}

std::string format_csv_double(double value) {
  std::string out;
  append_double(out, value);
  return out;
}

}  // namespace catelab
