#include "catelab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include "catelab/errors.hpp"
#include "catelab/random.hpp"
#include "catelab/stats.hpp"

namespace catelab {

namespace {

// Scenario names become artifact file names, so they are restricted to a
// plain identifier alphabet.
bool valid_name(const std::string& name) {
  if (name.empty()) return false;
  if (!std::isalnum(static_cast<unsigned char>(name.front()))) return false;
  for (char ch : name) {
    const auto c = static_cast<unsigned char>(ch);
    if (!std::isalnum(c) && ch != '-' && ch != '_' && ch != '.') return false;
  }
  return true;
}

}  // namespace

void ScenarioConfig::validate() const {
  if (!valid_name(name)) {
    throw invalid_parameter(
        "scenario name must be a nonempty identifier ([A-Za-z0-9._-], "
        "starting alphanumeric); got '" +
        name + "'");
  }
  if (n_units < 1) {
    throw invalid_parameter("n_units must be at least 1");
  }
  if (n_replications < 1) {
    throw invalid_parameter("n_replications must be at least 1");
  }
  if (grid) {
    if (grid->points < 2) {
      throw invalid_parameter("grid_points must be at least 2");
    }
    if (!(grid->lo < grid->hi)) {
      throw invalid_parameter("grid_lo must be below grid_hi");
    }
  }
  switch (kind) {
    case ScenarioKind::Linear:
      model.validate();
      covariates.validate();
      break;
    case ScenarioKind::Rct:
      rct.validate();
      if (bins < 3) throw invalid_parameter("bins must be at least 3");
      break;
    case ScenarioKind::AppendixSweep:
      break;
  }
}

ReplicationResult run_replication(const ScenarioConfig& config,
                                  std::uint64_t rep_index) {
  if (rep_index >= config.n_replications) {
    std::ostringstream os;
    os << "rep_index " << rep_index << " out of range (n_replications = "
       << config.n_replications << ")";
    throw invalid_parameter(os.str());
  }

  const std::uint64_t seed = derive_seed(config.master_seed, rep_index);
  Dataset data = generate_dataset(config.model, config.covariates,
                                  config.propensity, config.n_units, seed);
  data.provenance.scenario_id = config.name;
  data.provenance.replication = rep_index;

  ReplicationResult result;
  try {
    result.fit = fit_working_model(data);
  } catch (const estimation_error& e) {
    std::ostringstream os;
    os << "replication " << rep_index << ": " << e.what();
    throw estimation_error(os.str());
  }

  result.records.reserve(data.units.size());
  for (const Unit& u : data.units) {
    UnitRecord r;
    r.x = u.x;
    r.ite_true = u.ite;
    r.cate_true = true_cate(config.model, config.covariates, u.x);
    r.cate_hat = predict_cate(result.fit, u.x);
    result.records.push_back(r);
  }
  return result;
}

namespace {

// Runs fn(0..count-1) on up to `threads` workers pulling indices from a
// shared atomic counter. Worker-side exceptions other than the per-index
// ones fn handles itself are rethrown on the caller thread.
void parallel_for_index(std::size_t count, unsigned threads,
                        const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || count <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  const unsigned n_workers =
      static_cast<unsigned>(std::min<std::size_t>(threads, count));
  std::atomic<std::size_t> next{0};
  std::atomic<bool> abort{false};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&]() {
    while (!abort.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= count) break;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        abort.store(true, std::memory_order_relaxed);
        break;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(n_workers);
  for (unsigned t = 0; t < n_workers; ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

struct ReplicationSlot {
  bool ok = false;
  double mse = 0.0;
  FitResult fit;
  std::string error;
};

}  // namespace

AggregateReport run_scenario(const ScenarioConfig& config, unsigned threads) {
  config.validate();
  if (config.kind != ScenarioKind::Linear) {
    throw invalid_parameter(
        "run_scenario handles Linear scenarios; use run_rct_scenario or "
        "run_appendix_sweep");
  }

  const std::size_t reps = config.n_replications;
  std::vector<ReplicationSlot> slots(reps);
  std::vector<ScatterRow> scatter;
  std::mutex scatter_mutex;

  parallel_for_index(reps, threads, [&](std::size_t r) {
    ReplicationSlot& slot = slots[r];
    try {
      ReplicationResult rep = run_replication(config, r);
      std::vector<double> est, truth;
      est.reserve(rep.records.size());
      truth.reserve(rep.records.size());
      for (const UnitRecord& u : rep.records) {
        est.push_back(u.cate_hat);
        truth.push_back(u.cate_true);
      }
      slot.mse = cate_mse(est, truth);
      slot.fit = rep.fit;
      slot.ok = true;
      if (r == 0) {
        std::vector<ScatterRow> rows;
        rows.reserve(rep.records.size());
        for (std::size_t i = 0; i < rep.records.size(); ++i) {
          const UnitRecord& u = rep.records[i];
          rows.push_back({i, u.x, u.ite_true, u.cate_true, u.cate_hat});
        }
        std::lock_guard<std::mutex> lock(scatter_mutex);
        scatter = std::move(rows);
      }
    } catch (const error& e) {
      slot.ok = false;
      slot.error = e.what();
    }
  });

  AggregateReport report;
  report.scatter = std::move(scatter);
  for (std::size_t r = 0; r < reps; ++r) {
    if (slots[r].ok) {
      report.replication_indices.push_back(r);
      report.per_replication_mse.push_back(slots[r].mse);
    } else {
      report.failures.push_back({r, slots[r].error});
    }
  }
  report.n_success = report.per_replication_mse.size();
  if (report.n_success > 0) {
    report.mean_mse = mean(report.per_replication_mse);
  } else {
    report.mean_mse = std::numeric_limits<double>::quiet_NaN();
  }

  // Empirical 2.5%/97.5% bands are only reported once enough replications
  // back them (200), matching the documented band contract.
  if (config.grid && report.n_success >= 200) {
    const GridSpec& g = *config.grid;
    report.grid_summary.reserve(g.points);
    std::vector<double> estimates(report.n_success);
    for (std::size_t p = 0; p < g.points; ++p) {
      const double x = g.lo + (g.hi - g.lo) * static_cast<double>(p) /
                                  static_cast<double>(g.points - 1);
      std::size_t k = 0;
      for (std::size_t r = 0; r < reps; ++r) {
        if (slots[r].ok) estimates[k++] = predict_cate(slots[r].fit, x);
      }
      GridPointSummary point;
      point.x = x;
      point.mean_estimate = mean(estimates);
      std::vector<double> sorted = estimates;
      std::sort(sorted.begin(), sorted.end());
      point.band_lo = quantile_sorted(sorted, 0.025);
      point.band_hi = quantile_sorted(sorted, 0.975);
      point.truth = true_cate(config.model, config.covariates, x);
      report.grid_summary.push_back(point);
    }
  }

  // Discordance summary: closed forms from the model, empirical metrics from
  // the replication-0 sample of (estimated CATE, unit effect) pairs.
  report.discordance.closed_form_covariance =
      cate_ite_covariance(config.model, config.covariates);
  try {
    report.discordance.closed_form_correlation =
        cate_ite_correlation(config.model, config.covariates);
  } catch (const estimation_error&) {
    // zero unit-effect variance: leave absent
  }
  if (report.scatter.size() >= 2) {
    std::vector<std::pair<double, double>> pairs;
    pairs.reserve(report.scatter.size());
    for (const ScatterRow& row : report.scatter) {
      pairs.emplace_back(row.cate_hat, row.ite_true);
    }
    const EmpiricalDiscordance emp = empirical_discordance(pairs);
    report.discordance.empirical_correlation = emp.correlation;
    report.discordance.sign_disagreement_rate = emp.sign_disagreement_rate;
  }
  if (report.n_success > 0) {
    report.discordance.cate_mse = report.mean_mse;
  }
  return report;
}

std::vector<BinnedCate> rct_binned_cates(const RctDataset& data, RctAxis axis,
                                         std::size_t bins) {
  if (bins < 3) {
    throw invalid_parameter("rct_binned_cates: bins must be at least 3");
  }
  constexpr double kLo = -2.5;
  constexpr double kHi = 2.5;
  const double width = (kHi - kLo) / static_cast<double>(bins);

  struct Accum {
    std::size_t n1 = 0, n0 = 0;
    double sum1 = 0.0, sum0 = 0.0;
    double sumsq1 = 0.0, sumsq0 = 0.0;
  };
  std::vector<Accum> acc(bins);

  for (const RctUnit& u : data.units) {
    const double v = (axis == RctAxis::X1) ? u.x1 : u.x2;
    if (v < kLo || v >= kHi) continue;
    const auto b = static_cast<std::size_t>((v - kLo) / width);
    Accum& a = acc[std::min(b, bins - 1)];
    if (u.a == 1) {
      ++a.n1;
      a.sum1 += u.y;
      a.sumsq1 += u.y * u.y;
    } else {
      ++a.n0;
      a.sum0 += u.y;
      a.sumsq0 += u.y * u.y;
    }
  }

  std::vector<BinnedCate> out(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    BinnedCate& bin = out[b];
    bin.center = kLo + width * (static_cast<double>(b) + 0.5);
    bin.oracle = rct_cate_oracle(axis, bin.center);
    bin.n_treated = acc[b].n1;
    bin.n_control = acc[b].n0;
    if (acc[b].n1 == 0 || acc[b].n0 == 0) {
      bin.valid = false;
      continue;
    }
    const double n1 = static_cast<double>(acc[b].n1);
    const double n0 = static_cast<double>(acc[b].n0);
    const double m1 = acc[b].sum1 / n1;
    const double m0 = acc[b].sum0 / n0;
    bin.contrast = m1 - m0;
    bin.valid = true;
    // Sample variances per arm; zero when an arm has a single unit.
    const double var1 =
        (acc[b].n1 > 1) ? (acc[b].sumsq1 - n1 * m1 * m1) / (n1 - 1.0) : 0.0;
    const double var0 =
        (acc[b].n0 > 1) ? (acc[b].sumsq0 - n0 * m0 * m0) / (n0 - 1.0) : 0.0;
    bin.std_error =
        std::sqrt(std::max(var1, 0.0) / n1 + std::max(var0, 0.0) / n0);
  }
  return out;
}

namespace {

// Least-squares quadratic c0 + c1 v + c2 v^2 through the valid bins;
// returns c2. Solves the 3x3 normal equations by Gaussian elimination.
double quadratic_coefficient(const std::vector<BinnedCate>& bins) {
  double a[3][4] = {};
  std::size_t used = 0;
  for (const BinnedCate& b : bins) {
    if (!b.valid) continue;
    ++used;
    const double v = b.center;
    const double basis[3] = {1.0, v, v * v};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) a[i][j] += basis[i] * basis[j];
      a[i][3] += basis[i] * b.contrast;
    }
  }
  if (used < 3) {
    throw estimation_error(
        "quadratic fit over bin means needs at least 3 valid bins");
  }
  for (int p = 0; p < 3; ++p) {
    int pivot = p;
    for (int i = p + 1; i < 3; ++i) {
      if (std::abs(a[i][p]) > std::abs(a[pivot][p])) pivot = i;
    }
    std::swap(a[p], a[pivot]);
    if (a[p][p] == 0.0) {
      throw estimation_error("quadratic fit over bin means is singular");
    }
    for (int i = p + 1; i < 3; ++i) {
      const double f = a[i][p] / a[p][p];
      for (int j = p; j < 4; ++j) a[i][j] -= f * a[p][j];
    }
  }
  double c[3];
  for (int i = 2; i >= 0; --i) {
    double s = a[i][3];
    for (int j = i + 1; j < 3; ++j) s -= a[i][j] * c[j];
    c[i] = s / a[i][i];
  }
  return c[2];
}

}  // namespace

RctReport run_rct_scenario(const ScenarioConfig& config) {
  config.validate();
  if (config.kind != ScenarioKind::Rct) {
    throw invalid_parameter("run_rct_scenario requires an Rct scenario");
  }
  const std::uint64_t seed = derive_seed(config.master_seed, 0);
  RctDataset data = generate_rct_dataset(config.rct, config.n_units, seed);
  data.provenance.scenario_id = config.name;

  RctReport report;
  report.x1_bins = rct_binned_cates(data, RctAxis::X1, config.bins);
  report.x2_bins = rct_binned_cates(data, RctAxis::X2, config.bins);

  double s = 0.0;
  for (const RctUnit& u : data.units) s += u.ite;
  report.mean_ite = s / static_cast<double>(data.units.size());

  report.x1_quadratic_coeff = quadratic_coefficient(report.x1_bins);
  report.x2_quadratic_coeff = quadratic_coefficient(report.x2_bins);
  return report;
}

std::vector<AppendixRow> run_appendix_sweep(std::size_t n_vectors,
                                            std::size_t draws,
                                            std::uint64_t master_seed) {
  if (n_vectors == 0 || draws < 2) {
    throw invalid_parameter(
        "run_appendix_sweep: need at least one vector and two draws");
  }

  std::vector<AppendixRow> rows;
  rows.reserve(n_vectors);
  for (std::size_t k = 0; k < n_vectors; ++k) {
    RandomStream rng(derive_seed(master_seed, k));

    LinearInteractionModel model;
    GaussianPairParams params;
    // Redraw until the unit-effect variance is bounded away from zero, so
    // the empirical correlation is well-defined at the chosen draw count.
    do {
      model = LinearInteractionModel{0.0,
                                     1.0,
                                     0.0,
                                     0.0,
                                     -2.0 + 4.0 * rng.uniform01(),
                                     -2.0 + 4.0 * rng.uniform01(),
                                     0.0};
      params = GaussianPairParams{0.0, 0.0, 0.5 + 2.5 * rng.uniform01(),
                                  0.5 + 2.5 * rng.uniform01(),
                                  -0.9 + 1.8 * rng.uniform01()};
    } while (ite_variance(model, params) < 0.1);

    std::vector<double> cate_vals(draws), ite_vals(draws);
    for (std::size_t i = 0; i < draws; ++i) {
      const auto [x, z] = sample_covariate_pair(params, rng);
      cate_vals[i] = true_cate(model, params, x);
      ite_vals[i] = true_ite(model, x, z);
    }

    AppendixRow row;
    row.beta4 = model.beta4;
    row.beta5 = model.beta5;
    row.rho = params.rho;
    row.sigma_x = params.sigma_x;
    row.sigma_z = params.sigma_z;
    row.closed_form_cov = cate_ite_covariance(model, params);
    row.closed_form_corr = cate_ite_correlation(model, params);
    row.empirical_cov = covariance(cate_vals, ite_vals);
    const double var_c = variance(cate_vals);
    const double var_i = variance(ite_vals);
    row.empirical_corr = (var_c > 0.0 && var_i > 0.0)
                             ? row.empirical_cov / std::sqrt(var_c * var_i)
                             : 0.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace catelab
