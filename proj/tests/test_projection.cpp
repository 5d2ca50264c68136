#include <cmath>
#include <vector>

#include "doctest.h"
#include "streamopt/projection.hpp"
#include "support/test_helpers.hpp"

using namespace streamopt;
using namespace streamopt::testing;

namespace {

std::vector<double> random_vector(OracleRng& g, int n, double lo, double hi) {
  std::vector<double> v(n);
  for (double& x : v) x = unif(g, lo, hi);
  return v;
}

}  // namespace

TEST_CASE("capped simplex projection matches the active-set oracle") {
  OracleRng g(101);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = unif_int(g, 2, 5);
    const double cap = unif(g, 0.4, 1.5);
    std::vector<int> support;
    for (int i = 0; i < n; ++i)
      if (unif(g, 0.0, 1.0) < 0.8 || support.empty()) support.push_back(i);
    const double total = unif(g, 0.05, 0.95) * cap * static_cast<double>(support.size());
    const std::vector<double> v = random_vector(g, n, -1.0, 2.0);

    const std::vector<double> got = project_capped_simplex(v, total, cap, support);
    const std::vector<double> want = oracle_capped_simplex(v, total, cap, support);
    REQUIRE(!want.empty());
    for (int i = 0; i < n; ++i) {
      CAPTURE(trial);
      CAPTURE(i);
      CHECK(std::abs(got[i] - want[i]) <= 1e-6);
    }
  }
}

TEST_CASE("capped simplex projection output is feasible and idempotent") {
  OracleRng g(202);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = unif_int(g, 2, 8);
    const double cap = 1.0;
    const double total = unif(g, 0.1, 0.9) * n;
    const std::vector<double> v = random_vector(g, n, -2.0, 3.0);
    const std::vector<double> x = project_capped_simplex(v, total, cap);
    double sum = 0;
    for (double xi : x) {
      CHECK(xi >= -1e-12);
      CHECK(xi <= cap + 1e-12);
      sum += xi;
    }
    CHECK(std::abs(sum - total) <= 1e-9);
    const std::vector<double> again = project_capped_simplex(x, total, cap);
    for (int i = 0; i < n; ++i) CHECK(std::abs(again[i] - x[i]) <= 1e-9);
  }
}

TEST_CASE("capped simplex projection zeroes coordinates off the support") {
  const std::vector<double> v = {0.9, 0.9, 0.9, 0.9};
  const std::vector<int> support = {1, 3};
  const std::vector<double> x = project_capped_simplex(v, 1.0, 1.0, support);
  CHECK(x[0] == 0.0);
  CHECK(x[2] == 0.0);
  CHECK(std::abs(x[1] + x[3] - 1.0) <= 1e-9);
}

TEST_CASE("capped simplex projection rejects impossible mass") {
  const std::vector<double> v = {0.5, 0.5};
  CHECK_THROWS_AS(project_capped_simplex(v, 2.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(project_capped_simplex(v, -0.1, 1.0), std::invalid_argument);
}

TEST_CASE("box budget projection matches the brute-force oracle") {
  OracleRng g(303);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = unif_int(g, 2, 5);
    const double cap = 1.0;
    const double budget = unif(g, 0.3, 1.2);
    const std::vector<double> v = random_vector(g, n, -0.5, 1.2);
    const std::vector<double> got = project_box_budget(v, cap, budget);
    const std::vector<double> want = oracle_box_budget(v, cap, budget);
    REQUIRE(!want.empty());
    for (int i = 0; i < n; ++i) {
      CAPTURE(trial);
      CHECK(std::abs(got[i] - want[i]) <= 1e-6);
    }
  }
}

TEST_CASE("box budget projection keeps slack points unchanged") {
  const std::vector<double> v = {0.2, 0.3, 0.1};
  const std::vector<double> x = project_box_budget(v, 1.0, 1.0);
  for (int i = 0; i < 3; ++i) CHECK(x[i] == doctest::Approx(v[i]).epsilon(1e-12));
}

TEST_CASE("exponent projection lands inside the feasible window") {
  OracleRng g(404);
  Instance inst = make_test_instance(g);
  PolicyVars pol = random_feasible_policy(inst, g);
  for (int i = 0; i < inst.num_videos(); ++i) {
    const double up = t_feasible_upper(inst, pol, i);

    pol.t[i] = up * 10.0;
    const double high = project_t(inst, pol, i);
    CHECK(high <= up * (1.0 + 1e-9));
    CHECK(high > 0.0);

    pol.t[i] = -1.0;
    const double low = project_t(inst, pol, i);
    CHECK(low >= inst.solver.slack_delta * (1.0 - 1e-12));

    const double inside = up * 0.5;
    pol.t[i] = inside;
    CHECK(project_t(inst, pol, i) == doctest::Approx(inside).epsilon(1e-12));
    pol.t[i] = inside;
  }
}
