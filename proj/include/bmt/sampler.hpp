#pragma once

#include "bmt/mmspace.hpp"
#include "bmt/rng.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace bmt {

// Named distribution on one of the built-in spaces.
//
// Circle (`circle-geodesic`): uniform, bimodal, fig1, mixture, dirac.
// Sphere (`sphere2-geodesic`): uniform, six-mode, six-mode-asymmetric,
//   mixture.
// Euclidean (`euclidean-Rd`): gaussian-mixture.
// Grassmannian (`grassmannian-Gr2n`): uniform, two-center, total-curvature.
//
// `params` overrides the defaults of the named distribution (see
// sampler.cpp for each family's keys).
struct SamplerSpec {
  std::string space = std::string(metric_id::circle);
  std::string distribution = "uniform";
  nlohmann::json params = nlohmann::json::object();
  std::uint64_t seed = 0;
  std::size_t n = 100;
  // Ambient dimension: d for euclidean-Rd, n for Gr_2(R^n). Ignored otherwise.
  std::size_t dim = 0;
};

nlohmann::json sampler_to_json(const SamplerSpec &spec);
SamplerSpec sampler_from_json(const nlohmann::json &j);

struct Sample {
  std::vector<Point> points;
  MetricMeasureSpace space; // uniform 1/n weights over `points`
};

// Deterministic in (spec, seed). Densities are sampled by rejection against
// the uniform law of the space; Dirac and Gaussian mixtures are drawn
// directly.
Sample sample(const SamplerSpec &spec);

// Unnormalized density of `spec` evaluated at each point. `points` are also
// used as the probe set for data-dependent constants (the mean total
// curvature of the total-curvature family).
std::vector<double> density_values(const SamplerSpec &spec,
                                   const std::vector<Point> &points);

// Density values normalized to a probability vector over `points`.
std::vector<double> density_weights(const SamplerSpec &spec,
                                    const std::vector<Point> &points);

// m equally spaced angles k * 2pi / m.
std::vector<Point> circle_grid(std::size_t m);

// m near-uniform points on the 2-sphere (spherical Fibonacci lattice).
std::vector<Point> fibonacci_sphere(std::size_t m);

// Uniform point of Gr_2(R^n): Q factor of a Gaussian n x 2 matrix.
Point random_frame(Rng &rng, std::size_t n);

// Turning-angle total curvature of the closed planar polygon associated with
// a 2-frame (edges are the squares of the complex coordinates a + ib).
double total_curvature(std::span<const double> frame_coords);

} // namespace bmt
