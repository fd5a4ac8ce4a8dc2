#pragma once

#include <Eigen/Dense>
#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace bmt {

using Matrix = Eigen::MatrixXd;
using Point = std::vector<double>;

// Built-in metric identifiers.
namespace metric_id {
inline constexpr std::string_view circle = "circle-geodesic";
inline constexpr std::string_view sphere = "sphere2-geodesic";
inline constexpr std::string_view euclidean = "euclidean-Rd";
inline constexpr std::string_view grassmannian = "grassmannian-Gr2n";
inline constexpr std::string_view precomputed = "precomputed";
} // namespace metric_id

inline constexpr double kTolerance = 1e-9;
inline constexpr double kWeightTolerance = 1e-12;

// Geodesic distance on the unit circle, angles in radians. Result in [0, pi].
double circle_geodesic(double a, double b);

// Great-circle distance between two points of the unit 2-sphere.
double sphere_geodesic(std::span<const double> x, std::span<const double> y);

double euclidean_distance(std::span<const double> x, std::span<const double> y);

// Riemannian distance on Gr_2(R^n) between the spans of two n x 2 frames,
// sqrt(t1^2 + t2^2) over the principal angles. Frames are orthonormalized
// first; throws InvalidArgument if either is rank deficient.
double grassmann_geodesic(const Eigen::MatrixXd &a, const Eigen::MatrixXd &b);

// Frame coordinates are stored flattened column-major: first column, then
// second column (length 2n).
Eigen::MatrixXd frame_from_coords(std::span<const double> coords);
std::vector<double> coords_from_frame(const Eigen::MatrixXd &frame);

// Distance between two coordinate vectors under a built-in metric.
double point_distance(std::string_view metric, std::span<const double> x,
                      std::span<const double> y);

bool is_builtin_metric(std::string_view metric);

// Finite metric-measure space: a dense distance matrix plus a probability
// vector. Immutable after construction; the constructor validates symmetry,
// the zero diagonal, nonnegativity and normalization of the weights.
class MetricMeasureSpace {
public:
  MetricMeasureSpace(Matrix dist, std::vector<double> weights,
                     std::string metric = std::string(metric_id::precomputed),
                     std::vector<Point> coords = {},
                     std::vector<std::string> labels = {},
                     bool is_metric = true);

  std::size_t size() const noexcept { return weights_.size(); }
  const Matrix &dist() const noexcept { return dist_; }
  double dist(std::size_t i, std::size_t j) const { return dist_(i, j); }
  const std::vector<double> &weights() const noexcept { return weights_; }
  const std::string &metric() const noexcept { return metric_; }
  const std::vector<Point> &coords() const noexcept { return coords_; }
  bool has_coords() const noexcept { return !coords_.empty(); }
  const std::vector<std::string> &labels() const noexcept { return labels_; }
  bool is_metric() const noexcept { return is_metric_; }

  // Same points, new probability vector.
  MetricMeasureSpace with_weights(std::vector<double> weights) const;

  // Sub-space on `indices` (in the given order) carrying `weights`.
  MetricMeasureSpace subspace(std::span<const std::size_t> indices,
                              std::vector<double> weights) const;

  double diameter() const { return dist_.maxCoeff(); }

private:
  Matrix dist_;
  std::vector<double> weights_;
  std::string metric_;
  std::vector<Point> coords_;
  std::vector<std::string> labels_;
  bool is_metric_;
};

// Build a space from coordinates and a named metric. Empty `weights` means
// uniform 1/n.
MetricMeasureSpace build_space(const std::vector<Point> &points,
                               std::string_view metric,
                               std::vector<double> weights = {});

// Concatenate two spaces over the same built-in metric, recomputing the
// cross distances from coordinates. Weights are taken as given and must sum
// to one over the union.
MetricMeasureSpace join_spaces(const MetricMeasureSpace &a,
                               const MetricMeasureSpace &b,
                               std::vector<double> weights);

// Checks the triangle inequality on every triple (n <= 300) or on `samples`
// seeded random triples. Returns the largest violation found (<= 0 when none).
double max_triangle_violation(const Matrix &d, std::size_t samples = 200000,
                              std::uint64_t seed = 0);

nlohmann::json space_to_json(const MetricMeasureSpace &space);
MetricMeasureSpace space_from_json(const nlohmann::json &j);

// Header-free square CSV of distances; weights are uniform.
MetricMeasureSpace space_from_csv(const std::string &text);

} // namespace bmt
