#include <array>
#include <cmath>
#include <string>
#include <vector>

#include <doctest.h>

#include "catelab/dgp.hpp"
#include "catelab/errors.hpp"
#include "catelab/estimators.hpp"
#include "catelab/random.hpp"
#include "oracles.hpp"

using namespace catelab;

namespace {

Unit make_unit(double x, double z, int a, double y) {
  Unit u;
  u.x = x;
  u.z = z;
  u.a = a;
  u.y = y;
  u.y0 = (a == 0) ? y : 0.0;
  u.y1 = (a == 1) ? y : 0.0;
  u.ite = u.y1 - u.y0;
  return u;
}

// A generic well-conditioned random dataset for fit comparisons.
Dataset random_dataset(std::uint64_t seed, std::size_t n) {
  RandomStream rng(seed);
  Dataset data;
  data.units.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = 2.0 * rng.normal();
    const double z = rng.normal();
    const int a = rng.bernoulli(0.5) ? 1 : 0;
    const double y = 0.5 - 1.5 * a + 0.8 * x + 2.0 * a * x + z;
    data.units.push_back(make_unit(x, z, a, y));
  }
  return data;
}

}  // namespace

TEST_CASE("fit_working_model recovers exact coefficients on noiseless data") {
  SUBCASE("outcome depends on treatment only") {
    RandomStream rng(4);
    Dataset data;
    for (int i = 0; i < 40; ++i) {
      const double x = rng.normal();
      const int a = (i % 2 == 0) ? 1 : 0;
      data.units.push_back(make_unit(x, 0.0, a, 2.0 + 3.0 * a));
    }
    const FitResult fit = fit_working_model(data);
    CHECK(fit.coefficients[0] == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(fit.coefficients[1] == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(std::abs(fit.coefficients[2]) < 1e-10);
    CHECK(std::abs(fit.coefficients[3]) < 1e-10);
    CHECK(fit.residual_variance < 1e-18);
    CHECK(fit.n_used == data.units.size());
  }

  SUBCASE("demo model with z forced to zero collapses to y = 3 + a + a*x") {
    RandomStream rng(8);
    Dataset data;
    for (int i = 0; i < 200; ++i) {
      const double x = rng.normal();
      const int a = rng.bernoulli(0.5) ? 1 : 0;
      const double y = 3.0 + a + a * x;
      data.units.push_back(make_unit(x, 0.0, a, y));
    }
    const FitResult fit = fit_working_model(data);
    const std::array<double, 4> expected = {3.0, 1.0, 0.0, 1.0};
    const std::array<double, 4> by_oracle = oracle::solve_normal_equations(data);
    for (int j = 0; j < 4; ++j) {
      CHECK(std::abs(fit.coefficients[j] - expected[j]) < 1e-10);
      CHECK(std::abs(by_oracle[j] - expected[j]) < 1e-8);
    }
  }
}

TEST_CASE("QR solve agrees with the brute-force normal equations") {
  for (std::uint64_t seed = 1; seed <= 25; ++seed) {
    const Dataset data = random_dataset(seed, 400);
    const FitResult fit = fit_working_model(data);
    const std::array<double, 4> reference =
        oracle::solve_normal_equations(data);
    for (int j = 0; j < 4; ++j) {
      CHECK(std::abs(fit.coefficients[j] - reference[j]) < 1e-8);
    }
  }
}

TEST_CASE("fitted coefficients are a least-squares minimum") {
  const Dataset data = random_dataset(77, 600);
  const FitResult fit = fit_working_model(data);
  const double base = oracle::residual_sum_of_squares(data, fit.coefficients);
  CHECK(fit.residual_variance ==
        doctest::Approx(base / static_cast<double>(data.units.size() - 4))
            .epsilon(1e-9));
  for (int j = 0; j < 4; ++j) {
    for (double delta : {-1e-3, 1e-3}) {
      std::array<double, 4> perturbed = fit.coefficients;
      perturbed[j] += delta;
      CHECK(oracle::residual_sum_of_squares(data, perturbed) >= base);
    }
  }
}

TEST_CASE("rank-deficient designs fail with the offending column named") {
  RandomStream rng(6);

  SUBCASE("all units treated") {
    Dataset data;
    for (int i = 0; i < 50; ++i) {
      data.units.push_back(make_unit(rng.normal(), 0.0, 1, rng.normal()));
    }
    CHECK_THROWS_WITH_AS(fit_working_model(data),
                         doctest::Contains("treatment"), estimation_error);
  }

  SUBCASE("all units in control") {
    Dataset data;
    for (int i = 0; i < 50; ++i) {
      data.units.push_back(make_unit(rng.normal(), 0.0, 0, rng.normal()));
    }
    CHECK_THROWS_WITH_AS(fit_working_model(data),
                         doctest::Contains("treatment"), estimation_error);
  }

  SUBCASE("constant x") {
    Dataset data;
    for (int i = 0; i < 50; ++i) {
      data.units.push_back(make_unit(1.7, 0.0, i % 2, rng.normal()));
    }
    CHECK_THROWS_WITH_AS(fit_working_model(data), doctest::Contains("'x'"),
                         estimation_error);
  }

  SUBCASE("too few units") {
    Dataset data;
    for (int i = 0; i < 4; ++i) {
      data.units.push_back(make_unit(rng.normal(), 0.0, i % 2, rng.normal()));
    }
    CHECK_THROWS_AS(fit_working_model(data), estimation_error);
  }
}

TEST_CASE("shifting all outcomes moves only the intercept") {
  const Dataset data = random_dataset(13, 500);
  Dataset shifted = data;
  for (Unit& u : shifted.units) u.y += 11.25;
  const FitResult base = fit_working_model(data);
  const FitResult moved = fit_working_model(shifted);
  CHECK(moved.coefficients[0] ==
        doctest::Approx(base.coefficients[0] + 11.25).epsilon(1e-10));
  CHECK(std::abs(moved.coefficients[1] - base.coefficients[1]) < 1e-10);
  CHECK(std::abs(moved.coefficients[3] - base.coefficients[3]) < 1e-10);
}

TEST_CASE("predict_cate evaluates b1 + b3 x") {
  FitResult fit;
  fit.coefficients = {9.0, 1.0, -4.0, 0.0};
  CHECK(predict_cate(fit, -100.0) == 1.0);
  CHECK(predict_cate(fit, 100.0) == 1.0);

  fit.coefficients = {0.0, 1.0, 0.0, 3.1};
  CHECK(predict_cate(fit, 1.0) == doctest::Approx(4.1).epsilon(1e-12));

  fit.coefficients = {0.0, 0.0, 0.0, -2.0};
  CHECK(predict_cate(fit, -0.5) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("consistency under ignorability: CATE MSE shrinks with n") {
  const LinearInteractionModel demo = LinearInteractionModel::demo();
  const GaussianPairParams params{0, 0, 1, 3, 0.7};
  const PropensitySpec ignorable = PropensitySpec::ignorable_logistic();

  std::vector<double> avg_mse;
  for (std::size_t n : {500u, 5000u, 50000u}) {
    double total = 0.0;
    for (std::uint64_t s = 0; s < 5; ++s) {
      const Dataset data =
          generate_dataset(demo, params, ignorable, n, derive_seed(1000, s));
      const FitResult fit = fit_working_model(data);
      double mse = 0.0;
      for (const Unit& u : data.units) {
        const double d = predict_cate(fit, u.x) - true_cate(demo, params, u.x);
        mse += d * d;
      }
      total += mse / static_cast<double>(n);
    }
    avg_mse.push_back(total / 5.0);
  }
  CHECK(avg_mse[0] >= avg_mse[1]);
  CHECK(avg_mse[1] >= avg_mse[2]);
}

TEST_CASE("naive difference in means") {
  SUBCASE("constant outcome gives zero") {
    Dataset data;
    for (int i = 0; i < 10; ++i) {
      data.units.push_back(make_unit(0.0, 0.0, i % 2, 4.2));
    }
    CHECK(naive_difference_in_means(data) == 0.0);
  }

  SUBCASE("two-point case") {
    Dataset data;
    data.units.push_back(make_unit(0.0, 0.0, 1, 5.0));
    data.units.push_back(make_unit(0.0, 0.0, 0, 2.0));
    CHECK(naive_difference_in_means(data) == 3.0);
  }

  SUBCASE("empty arm is an estimation error") {
    Dataset data;
    for (int i = 0; i < 5; ++i) {
      data.units.push_back(make_unit(0.0, 0.0, 1, 1.0));
    }
    CHECK_THROWS_AS(naive_difference_in_means(data), estimation_error);
  }
}

TEST_CASE("naive-bias decomposition") {
  // no-interaction model with strong covariate effects
  const LinearInteractionModel model{1.0, 2.0, 1.5, 0.8, 0.0, 0.0, 1.0};
  const GaussianPairParams params{0, 0, 1, 3, 0.7};

  SUBCASE("interaction coefficients are rejected") {
    const Dataset data = generate_dataset(LinearInteractionModel::demo(),
                                          params,
                                          PropensitySpec::ignorable_logistic(),
                                          100, 1);
    CHECK_THROWS_AS(
        decompose_naive_bias(data, LinearInteractionModel::demo()),
        invalid_parameter);
  }

  SUBCASE("terms always sum to the naive contrast") {
    for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
      const Dataset data = generate_dataset(
          model, params, PropensitySpec::confounded_logistic(), 4000, seed);
      const BiasDecomposition d = decompose_naive_bias(data, model);
      const double sum = d.structural_effect + d.x_imbalance_term +
                         d.z_imbalance_term + d.residual_term;
      CHECK(std::abs(sum - d.naive_contrast) < 1e-12);
      CHECK(d.naive_contrast ==
            doctest::Approx(naive_difference_in_means(data)).epsilon(1e-12));
    }
  }

  SUBCASE("randomized assignment balances both imbalance terms") {
    const Dataset data = generate_dataset(
        model, params, PropensitySpec::constant(0.5), 200000, 5);
    const BiasDecomposition d = decompose_naive_bias(data, model);
    // covariate means differ by O(1/sqrt(n)) under randomization
    CHECK(std::abs(d.x_imbalance_term) < 0.04);
    CHECK(std::abs(d.z_imbalance_term) < 0.09);
  }

  SUBCASE("confounded assignment leaves a real z imbalance") {
    const Dataset data = generate_dataset(
        model, params, PropensitySpec::confounded_logistic(), 200000, 5);
    const BiasDecomposition d = decompose_naive_bias(data, model);
    CHECK(std::abs(d.z_imbalance_term) > 1.0);
    // the noise bucket stays at sampling-error scale
    CHECK(std::abs(d.residual_term) < 0.05);
  }

  SUBCASE("matches group means computed independently") {
    const Dataset data = generate_dataset(
        model, params, PropensitySpec::confounded_logistic(), 50000, 9);
    std::vector<double> x1, x0, z1, z0;
    for (const Unit& u : data.units) {
      (u.a == 1 ? x1 : x0).push_back(u.x);
      (u.a == 1 ? z1 : z0).push_back(u.z);
    }
    const BiasDecomposition d = decompose_naive_bias(data, model);
    CHECK(d.x_imbalance_term ==
          doctest::Approx(model.beta2 * (oracle::mean(x1) - oracle::mean(x0)))
              .epsilon(1e-10));
    CHECK(d.z_imbalance_term ==
          doctest::Approx(model.beta3 * (oracle::mean(z1) - oracle::mean(z0)))
              .epsilon(1e-10));
  }
}
