#include "doctest.h"
#include "oracles.hpp"

#include "bmt/error.hpp"
#include "bmt/transport.hpp"

#include <cmath>
#include <numbers>

using namespace bmt;

TEST_CASE("network simplex solves assignments exactly") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 2 + rep % 5;
    Matrix c(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        c(i, j) = rep % 4 == 0 ? std::round(3 * u(rng)) : u(rng); // degenerate costs too
    const std::vector<double> w(static_cast<std::size_t>(n), 1.0 / n);
    const auto plan = network_simplex(w, w, c);
    CHECK(plan.cost == doctest::Approx(oracle::assignment(c)).epsilon(1e-12));
    CHECK(marginal_error(plan.plan, w, w) < 1e-12);
    CHECK(plan.plan.minCoeff() >= 0.0);
    CHECK(plan.kind == "exact");
  }
}

TEST_CASE("network simplex against the line oracle with unequal weights") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int rep = 0; rep < 30; ++rep) {
    const std::size_t m = 1 + static_cast<std::size_t>(rep % 7), n = 2 + static_cast<std::size_t>(rep % 5);
    std::vector<double> xa(m), xb(n);
    for (auto &x : xa)
      x = u(rng);
    for (auto &x : xb)
      x = u(rng);
    const auto wa = oracle::random_simplex(m, rng), wb = oracle::random_simplex(n, rng);
    Matrix cross(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        cross(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::abs(xa[i] - xb[j]);
    std::vector<std::pair<double, double>> a, b;
    for (std::size_t i = 0; i < m; ++i)
      a.emplace_back(xa[i], wa[i]);
    for (std::size_t j = 0; j < n; ++j)
      b.emplace_back(xb[j], wb[j]);
    for (double p : {1.0, 2.0, 3.0}) {
      const double ref = oracle::wasserstein_line(a, b, p);
      CHECK(wasserstein(wa, wb, cross, p).value == doctest::Approx(ref).epsilon(1e-10));
      CHECK(wasserstein_1d(xa, wa, xb, wb, p) == doctest::Approx(ref).epsilon(1e-10));
    }
  }
}

TEST_CASE("zero weight rows are harmless") {
  Matrix c(3, 2);
  c << 0, 1, 5, 5, 1, 0;
  const std::vector<double> a{0.5, 0.0, 0.5}, b{0.5, 0.5};
  const auto plan = solve_ot(a, b, c);
  CHECK(plan.cost == doctest::Approx(0.0));
  CHECK(plan.plan.row(1).sum() == 0.0);
}

TEST_CASE("sinkhorn approaches the exact cost") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix c(6, 7);
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 7; ++j)
      c(i, j) = u(rng);
  const auto a = oracle::random_simplex(6, rng), b = oracle::random_simplex(7, rng);
  const auto ex = network_simplex(a, b, c);
  const auto en = sinkhorn(a, b, c, 1e-3);
  CHECK(en.kind == "entropic");
  CHECK(marginal_error(en.plan, a, b) < 1e-7);
  CHECK(std::abs(en.cost - ex.cost) < 1e-2);
  CHECK(en.cost >= ex.cost - 1e-9);
  CHECK_THROWS_AS(sinkhorn(a, b, c, 1e-4, 3, 1e-14), SolverError);
}

TEST_CASE("mismatched masses are rejected") {
  Matrix c = Matrix::Zero(2, 2);
  CHECK_THROWS_AS(network_simplex(std::vector<double>{0.5, 0.5}, std::vector<double>{0.5, 0.2}, c),
                  InvalidArgument);
}

TEST_CASE("circle transport by cyclic shifts matches enumeration") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0.0, 2 * std::numbers::pi);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = 1 + rep % 6;
    std::vector<double> xa(static_cast<std::size_t>(n)), xb(static_cast<std::size_t>(n));
    for (auto &x : xa)
      x = u(rng);
    for (auto &x : xb)
      x = u(rng);
    for (double p : {1.0, 2.0}) {
      Matrix c(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          double d = std::fmod(std::abs(xa[static_cast<std::size_t>(i)] - xb[static_cast<std::size_t>(j)]), 2 * std::numbers::pi);
          d = std::min(d, 2 * std::numbers::pi - d);
          c(i, j) = std::pow(d, p);
        }
      const double ref = std::pow(oracle::assignment(c), 1.0 / p);
      CHECK(circle_wasserstein_uniform(xa, xb, p) == doctest::Approx(ref).epsilon(1e-12));
    }
  }
}
