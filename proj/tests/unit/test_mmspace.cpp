#include "doctest.h"

#include "bmt/error.hpp"
#include "bmt/mmspace.hpp"
#include "bmt/parallel.hpp"
#include "bmt/rng.hpp"
#include "bmt/sampler.hpp"

#include <atomic>
#include <cmath>
#include <numbers>
#include <stdexcept>

using namespace bmt;

namespace {

std::string rule_of(const std::function<void()> &f) {
  try {
    f();
  } catch (const ValidationError &e) {
    return e.rule();
  }
  return "";
}

// Principal angles from the eigenvalues of M M^T, M = Qa^T Qb.
double grassmann_eig(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b) {
  const Eigen::MatrixXd qa = Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ() *
                             Eigen::MatrixXd::Identity(a.rows(), 2);
  const Eigen::MatrixXd qb = Eigen::HouseholderQR<Eigen::MatrixXd>(b).householderQ() *
                             Eigen::MatrixXd::Identity(b.rows(), 2);
  const Eigen::MatrixXd m = qa.transpose() * qb;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m * m.transpose());
  double s = 0.0;
  for (int k = 0; k < 2; ++k) {
    const double c = std::sqrt(std::clamp(es.eigenvalues()(k), 0.0, 1.0));
    s += std::acos(c) * std::acos(c);
  }
  return std::sqrt(s);
}

} // namespace

TEST_CASE("circle geodesic wraps around") {
  const double pi = std::numbers::pi;
  CHECK(circle_geodesic(0.1, 2 * pi - 0.1) == doctest::Approx(0.2));
  CHECK(circle_geodesic(0.0, pi) == doctest::Approx(pi));
  CHECK(circle_geodesic(1.0, 1.0) == 0.0);
  CHECK(circle_geodesic(0.5, 0.5 + 4 * pi) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("sphere geodesic is the angle") {
  const std::vector<double> x{1, 0, 0}, y{0, 1, 0}, z{-1, 0, 0};
  CHECK(sphere_geodesic(x, y) == doctest::Approx(std::numbers::pi / 2));
  CHECK(sphere_geodesic(x, z) == doctest::Approx(std::numbers::pi));
  CHECK(sphere_geodesic(x, x) == 0.0);
}

TEST_CASE("grassmann geodesic matches an eigenvalue oracle") {
  Rng rng(3);
  for (int rep = 0; rep < 30; ++rep) {
    Eigen::MatrixXd a(6, 2), b(6, 2);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 2; ++j) {
        a(i, j) = rng.normal();
        b(i, j) = rng.normal();
      }
    CHECK(grassmann_geodesic(a, b) == doctest::Approx(grassmann_eig(a, b)).epsilon(1e-7));
  }
  // Same plane under a change of basis.
  Eigen::MatrixXd a(4, 2);
  a << 1, 0, 0, 1, 0, 0, 0, 0;
  Eigen::MatrixXd b(4, 2);
  b << 1, 1, 2, -1, 0, 0, 0, 0;
  CHECK(grassmann_geodesic(a, b) == doctest::Approx(0.0).epsilon(1e-12));
  // Orthogonal planes: both principal angles pi/2.
  Eigen::MatrixXd c(4, 2);
  c << 0, 0, 0, 0, 1, 0, 0, 1;
  CHECK(grassmann_geodesic(a, c) == doctest::Approx(std::numbers::pi / std::sqrt(2.0)));
}

TEST_CASE("space constructor names the broken rule") {
  Matrix d(2, 2);
  d << 0, 1, 1, 0;
  CHECK(rule_of([&] { MetricMeasureSpace(d, {0.5, 0.4}); }) == "measure normalization");
  CHECK(rule_of([&] { MetricMeasureSpace(d, {1.5, -0.5}); }) == "negative weight");
  Matrix bad = d;
  bad(0, 0) = 0.1;
  CHECK(rule_of([&] { MetricMeasureSpace(bad, {0.5, 0.5}); }) == "zero diagonal");
  bad = d;
  bad(0, 1) = 2.0;
  CHECK(rule_of([&] { MetricMeasureSpace(bad, {0.5, 0.5}); }) == "symmetry");
  bad = d;
  bad(0, 1) = bad(1, 0) = -1.0;
  CHECK(rule_of([&] { MetricMeasureSpace(bad, {0.5, 0.5}); }) == "nonnegativity");
  CHECK(rule_of([&] { MetricMeasureSpace(d, {0.5, 0.5}); }) == "");
}

TEST_CASE("space JSON round trip") {
  const auto s = build_space(circle_grid(7), metric_id::circle);
  const auto j = space_to_json(s);
  const auto t = space_from_json(j);
  CHECK(t.size() == 7);
  CHECK((t.dist() - s.dist()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(t.metric() == s.metric());
  CHECK(t.coords() == s.coords());
  auto broken = j;
  broken["weights"][0] = 0.0;
  CHECK(rule_of([&] { space_from_json(broken); }) == "measure normalization");
  CHECK(rule_of([&] { space_from_json(nlohmann::json{{"n", 2}}); }) == "schema");
}

TEST_CASE("distance CSV") {
  const auto s = space_from_csv("0,1,2\n1,0,1\n2,1,0\n");
  CHECK(s.size() == 3);
  CHECK(s.dist(0, 2) == 2.0);
  CHECK(s.weights()[1] == doctest::Approx(1.0 / 3));
  CHECK(rule_of([] { space_from_csv("0,1\n1,0,3\n"); }) == "schema");
}

TEST_CASE("triangle violations") {
  Matrix d(3, 3);
  d << 0, 1, 3, 1, 0, 1, 3, 1, 0;
  CHECK(max_triangle_violation(d) == doctest::Approx(1.0));
  d(0, 2) = d(2, 0) = 2.0;
  CHECK(max_triangle_violation(d) == 0.0);
}

TEST_CASE("subspace and join") {
  const auto s = build_space(circle_grid(4), metric_id::circle);
  const std::vector<std::size_t> idx{2, 0};
  const auto sub = s.subspace(idx, {0.25, 0.75});
  CHECK(sub.dist(0, 1) == doctest::Approx(std::numbers::pi));
  CHECK(sub.coords()[0] == s.coords()[2]);
  const auto j = join_spaces(s, sub, std::vector<double>(6, 1.0 / 6));
  CHECK(j.size() == 6);
  CHECK(j.dist(0, 4) == doctest::Approx(s.dist(0, 2)));
}

TEST_CASE("samplers stay on their spaces and are seeded") {
  for (const auto &[space, dist] : std::vector<std::pair<std::string, std::string>>{
           {"circle-geodesic", "bimodal"},
           {"circle-geodesic", "fig1"},
           {"sphere2-geodesic", "six-mode"},
           {"sphere2-geodesic", "six-mode-asymmetric"},
           {"grassmannian-Gr2n", "uniform"},
           {"grassmannian-Gr2n", "two-center"},
           {"grassmannian-Gr2n", "total-curvature"},
           {"euclidean-Rd", "gaussian-mixture"}}) {
    SamplerSpec s;
    s.space = space;
    s.distribution = dist;
    s.n = 40;
    s.seed = 11;
    const auto a = sample(s);
    const auto b = sample(s);
    CHECK(a.points == b.points);
    for (const auto &x : a.points) {
      if (space == "circle-geodesic") {
        CHECK(x[0] >= 0.0);
        CHECK(x[0] < 2 * std::numbers::pi);
      } else if (space == "sphere2-geodesic") {
        CHECK(std::hypot(x[0], x[1], x[2]) == doctest::Approx(1.0).epsilon(1e-12));
      } else if (space == "grassmannian-Gr2n") {
        const auto f = frame_from_coords(x);
        CHECK((f.transpose() * f - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff() < 1e-10);
      }
    }
    const auto w = density_weights(s, a.points);
    double t = 0.0;
    for (double v : w)
      t += v;
    CHECK(t == doctest::Approx(1.0));
  }
}

TEST_CASE("bimodal sampler splits between its modes") {
  SamplerSpec s;
  s.distribution = "bimodal";
  s.n = 2000;
  s.seed = 5;
  const auto a = sample(s);
  int near0 = 0;
  for (const auto &x : a.points)
    near0 += circle_geodesic(x[0], 0.0) < std::numbers::pi / 2;
  CHECK(near0 > 900);
  CHECK(near0 < 1100);
}

TEST_CASE("parallel_for visits each index once and rethrows") {
  set_thread_count(4);
  std::vector<int> hits(1000, 0);
  parallel_for(hits.size(), [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits)
    CHECK(h == 1);
  std::atomic<int> inner{0};
  parallel_for(8, [&](std::size_t) { parallel_for(8, [&](std::size_t) { ++inner; }); });
  CHECK(inner == 64);
  CHECK_THROWS_AS(parallel_for(10,
                               [](std::size_t i) {
                                 if (i == 7)
                                   throw std::runtime_error("x");
                               }),
                  std::runtime_error);
  set_thread_count(0);
}
