#include <algorithm>
#include <cmath>
#include <vector>

#include <doctest.h>

#include "catelab/config.hpp"
#include "catelab/errors.hpp"
#include "catelab/harness.hpp"
#include "catelab/random.hpp"
#include "oracles.hpp"

using namespace catelab;

namespace {

ScenarioConfig small_linear(double rho, std::size_t n, std::size_t reps) {
  ScenarioConfig c = preset("fig2-rho-07");
  c.name = "test-linear";
  c.covariates.rho = rho;
  c.n_units = n;
  c.n_replications = reps;
  c.master_seed = 2024;
  return c;
}

}  // namespace

TEST_CASE("scenario config validation") {
  ScenarioConfig c = small_linear(0.7, 100, 10);
  CHECK_NOTHROW(c.validate());

  SUBCASE("counts") {
    c.n_units = 0;
    CHECK_THROWS_AS(c.validate(), invalid_parameter);
    c = small_linear(0.7, 100, 10);
    c.n_replications = 0;
    CHECK_THROWS_AS(c.validate(), invalid_parameter);
  }
  SUBCASE("grid") {
    c.grid = GridSpec{1.0, -1.0, 10};
    CHECK_THROWS_AS(c.validate(), invalid_parameter);
    c.grid = GridSpec{-1.0, 1.0, 1};
    CHECK_THROWS_AS(c.validate(), invalid_parameter);
  }
  SUBCASE("covariates propagate") {
    c.covariates.rho = 1.2;
    CHECK_THROWS_AS(c.validate(), invalid_parameter);
  }
  SUBCASE("name required and restricted to an identifier alphabet") {
    c.name.clear();
    CHECK_THROWS_AS(c.validate(), invalid_parameter);
    c.name = "../escape";
    CHECK_THROWS_AS(c.validate(), invalid_parameter);
    c.name = "has space";
    CHECK_THROWS_AS(c.validate(), invalid_parameter);
    c.name = "ok-name_1.2";
    CHECK_NOTHROW(c.validate());
  }
}

TEST_CASE("run_replication") {
  const ScenarioConfig config = small_linear(0.7, 400, 4);

  SUBCASE("deterministic per (config, rep_index)") {
    const ReplicationResult a = run_replication(config, 2);
    const ReplicationResult b = run_replication(config, 2);
    REQUIRE(a.records.size() == b.records.size());
    for (std::size_t i = 0; i < a.records.size(); ++i) {
      CHECK(a.records[i].x == b.records[i].x);
      CHECK(a.records[i].cate_hat == b.records[i].cate_hat);
    }
    for (int j = 0; j < 4; ++j) {
      CHECK(a.fit.coefficients[j] == b.fit.coefficients[j]);
    }
  }

  SUBCASE("different replications see different data") {
    const ReplicationResult a = run_replication(config, 0);
    const ReplicationResult b = run_replication(config, 1);
    CHECK(a.records[0].x != b.records[0].x);
  }

  SUBCASE("rep_index out of range") {
    CHECK_THROWS_AS(run_replication(config, 4), invalid_parameter);
  }

  SUBCASE("noiseless, correctly specified: exact recovery per unit") {
    ScenarioConfig exact = config;
    exact.model.noise_sd = 0.0;
    exact.model.beta3 = 0.0;
    exact.model.beta5 = 0.0;  // z absent from the outcome entirely
    const ReplicationResult r = run_replication(exact, 0);
    for (const UnitRecord& u : r.records) {
      CHECK(std::abs(u.cate_hat - u.cate_true) < 1e-8);
    }
  }
}

TEST_CASE("run_scenario aggregates and reproduces the ignorable MSE levels") {
  // Moderate replication counts keep this fast; the preset-scale runs live in
  // the acceptance suite.
  SUBCASE("rho = 0.7") {
    ScenarioConfig c = small_linear(0.7, 2500, 150);
    const AggregateReport report = run_scenario(c);
    CHECK(report.n_success == 150);
    CHECK(report.failures.empty());
    CHECK(report.per_replication_mse.size() == 150);
    double s = 0.0;
    for (double v : report.per_replication_mse) s += v;
    CHECK(report.mean_mse == doctest::Approx(s / 150.0).epsilon(1e-15));
    CHECK(std::abs(report.mean_mse - 0.013) < 0.005);
    // individual replications scatter well around the mean; their range
    // spans the neighbouring reference level too
    const auto [lo, hi] = std::minmax_element(
        report.per_replication_mse.begin(), report.per_replication_mse.end());
    CHECK(*lo < 0.020);
    CHECK(*hi > 0.020);
  }

  SUBCASE("rho = -0.3 sits near the paired reference level") {
    ScenarioConfig c = small_linear(-0.3, 2500, 150);
    const AggregateReport report = run_scenario(c);
    CHECK(std::abs(report.mean_mse - 0.020) < 0.005);
  }

  SUBCASE("single noiseless correctly specified replication: zero MSE") {
    ScenarioConfig c = small_linear(0.7, 600, 1);
    c.model.noise_sd = 0.0;
    c.model.beta3 = 0.0;
    c.model.beta5 = 0.0;
    const AggregateReport report = run_scenario(c);
    CHECK(report.mean_mse <= 1e-12);
  }
}

TEST_CASE("run_scenario grid bands") {
  ScenarioConfig c = small_linear(0.7, 800, 240);
  c.grid = GridSpec{-3.0, 3.0, 13};
  const AggregateReport report = run_scenario(c);
  REQUIRE(report.grid_summary.size() == 13);

  SUBCASE("bands need at least 200 successful replications") {
    ScenarioConfig thin = c;
    thin.n_replications = 199;
    CHECK(run_scenario(thin).grid_summary.empty());
  }

  CHECK(report.grid_summary.front().x == -3.0);
  CHECK(report.grid_summary.back().x == 3.0);

  for (const GridPointSummary& p : report.grid_summary) {
    CHECK(p.band_lo <= p.mean_estimate);
    CHECK(p.mean_estimate <= p.band_hi);
    CHECK(p.truth ==
          doctest::Approx(true_cate(c.model, c.covariates, p.x)).epsilon(1e-12));
  }

  SUBCASE("bands cover at least 95% of replication estimates by construction") {
    std::vector<FitResult> fits;
    fits.reserve(c.n_replications);
    for (std::uint64_t r = 0; r < c.n_replications; ++r) {
      fits.push_back(run_replication(c, r).fit);
    }
    for (const GridPointSummary& p : report.grid_summary) {
      std::size_t inside = 0;
      for (const FitResult& fit : fits) {
        const double estimate = predict_cate(fit, p.x);
        if (estimate >= p.band_lo && estimate <= p.band_hi) ++inside;
      }
      CHECK(static_cast<double>(inside) >=
            0.95 * static_cast<double>(c.n_replications));
    }
  }
}

TEST_CASE("run_scenario is schedule independent") {
  ScenarioConfig c = small_linear(0.7, 500, 240);
  c.grid = GridSpec{-2.0, 2.0, 9};
  const AggregateReport serial = run_scenario(c, 1);
  const AggregateReport parallel = run_scenario(c, 8);

  REQUIRE(!serial.grid_summary.empty());
  REQUIRE(serial.per_replication_mse.size() ==
          parallel.per_replication_mse.size());
  for (std::size_t i = 0; i < serial.per_replication_mse.size(); ++i) {
    CHECK(serial.per_replication_mse[i] == parallel.per_replication_mse[i]);
  }
  CHECK(serial.mean_mse == parallel.mean_mse);
  REQUIRE(serial.grid_summary.size() == parallel.grid_summary.size());
  for (std::size_t i = 0; i < serial.grid_summary.size(); ++i) {
    CHECK(serial.grid_summary[i].mean_estimate ==
          parallel.grid_summary[i].mean_estimate);
    CHECK(serial.grid_summary[i].band_lo == parallel.grid_summary[i].band_lo);
    CHECK(serial.grid_summary[i].band_hi == parallel.grid_summary[i].band_hi);
  }
  REQUIRE(serial.scatter.size() == parallel.scatter.size());
  for (std::size_t i = 0; i < serial.scatter.size(); ++i) {
    CHECK(serial.scatter[i].cate_hat == parallel.scatter[i].cate_hat);
  }
}

TEST_CASE("failed replications are reported, not dropped") {
  // With five units and a tiny constant propensity, many replications draw a
  // single-arm dataset and the fit fails.
  ScenarioConfig c = small_linear(0.7, 5, 60);
  c.propensity = PropensitySpec::constant(0.01);
  const AggregateReport report = run_scenario(c);
  CHECK(!report.failures.empty());
  CHECK(report.n_success + report.failures.size() == 60);
  CHECK(report.per_replication_mse.size() == report.n_success);
  for (const FailedReplication& f : report.failures) {
    CHECK(!f.message.empty());
    CHECK(f.message.find("replication") != std::string::npos);
  }
}

TEST_CASE("heterogeneity collapse at rho = -0.3") {
  ScenarioConfig c = small_linear(-0.3, 2500, 1);
  const ReplicationResult rep = run_replication(c, 0);
  std::vector<double> hats, ites;
  for (const UnitRecord& u : rep.records) {
    hats.push_back(u.cate_hat);
    ites.push_back(u.ite_true);
  }
  const double ratio = oracle::variance_n(hats) / oracle::variance_n(ites);
  CHECK(ratio < 0.05);
}

TEST_CASE("rct binned contrasts") {
  const RctDataset data =
      generate_rct_dataset(QuadraticRctModel{0.5}, 400000, derive_seed(7, 0));

  SUBCASE("bin count is validated") {
    CHECK_THROWS_AS(rct_binned_cates(data, RctAxis::X1, 2), invalid_parameter);
  }

  SUBCASE("center bins recover both axis oracles") {
    for (std::size_t bins : {15u, 25u}) {
      const auto x1 = rct_binned_cates(data, RctAxis::X1, bins);
      const auto x2 = rct_binned_cates(data, RctAxis::X2, bins);
      REQUIRE(x1.size() == bins);
      const BinnedCate& c1 = x1[bins / 2];
      const BinnedCate& c2 = x2[bins / 2];
      REQUIRE(c1.valid);
      REQUIRE(c2.valid);
      CHECK(std::abs(c1.contrast - 1.0) < 3.0 * c1.std_error + 0.01);
      CHECK(std::abs(c2.contrast - 3.0) < 3.0 * c2.std_error + 0.01);
      CHECK(c1.oracle == rct_cate_oracle(RctAxis::X1, c1.center));
    }
  }

  SUBCASE("sparse data flags empty-arm bins instead of failing") {
    const RctDataset tiny =
        generate_rct_dataset(QuadraticRctModel{0.5}, 40, derive_seed(7, 0));
    const auto bins = rct_binned_cates(tiny, RctAxis::X1, 50);
    std::size_t invalid = 0;
    for (const BinnedCate& b : bins) {
      if (!b.valid) {
        ++invalid;
        CHECK((b.n_treated == 0 || b.n_control == 0));
      }
    }
    CHECK(invalid > 0);
  }
}

TEST_CASE("rct scenario report: opposite curvatures") {
  ScenarioConfig c = preset("rct-quadratic");
  c.n_units = 400000;
  const RctReport report = run_rct_scenario(c);
  CHECK(report.x1_quadratic_coeff > 0.5);
  CHECK(report.x2_quadratic_coeff < -0.5);
  CHECK(std::abs(report.mean_ite - 2.0) < 0.02);
  REQUIRE(report.x1_bins.size() == c.bins);
}

TEST_CASE("appendix sweep stays within Monte Carlo tolerance") {
  const auto rows = run_appendix_sweep(5, 1000000, 99);
  REQUIRE(rows.size() == 5);
  for (const AppendixRow& r : rows) {
    CHECK(r.closed_form_corr >= 0.0);
    CHECK(r.closed_form_corr <= 1.0);
    CHECK(std::abs(r.closed_form_corr - r.empirical_corr) < 0.01);
    const LinearInteractionModel swept{0, 1, 0, 0, r.beta4, r.beta5, 0};
    const GaussianPairParams swept_cov{0, 0, r.sigma_x, r.sigma_z, r.rho};
    CHECK(ite_variance(swept, swept_cov) >= 0.1);
  }

  SUBCASE("sweep is reproducible") {
    const auto again = run_appendix_sweep(5, 1000000, 99);
    for (std::size_t i = 0; i < rows.size(); ++i) {
      CHECK(rows[i].beta4 == again[i].beta4);
      CHECK(rows[i].empirical_corr == again[i].empirical_corr);
    }
  }
}
