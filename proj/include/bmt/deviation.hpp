#pragma once

#include "bmt/mmspace.hpp"

#include <optional>
#include <string>
#include <vector>

namespace bmt {

enum class ThetaKind { Base, KernelMatrix, HeatRd };

std::string to_string(ThetaKind k);
ThetaKind theta_kind_from_string(std::string_view s);

// Pseudo-metric used for the deviation: the base distance, the L_q distance
// between rows of a kernel matrix against a discrete reference measure, or
// the closed-form heat-kernel diffusion distance on R^d (q = 2 only).
struct PseudoMetricSpec {
  ThetaKind kind = ThetaKind::Base;
  double q = 2.0;
  double t = 1.0;
  Matrix kernel;                  // n x n, KernelMatrix only
  std::vector<double> ref_weights; // empty means uniform 1/n
};

struct DeviationField {
  double p = 2.0;
  std::string theta_kind = "base";
  std::vector<double> values;
  Matrix theta; // may be empty for fields loaded from JSON
};

// exp(-c * d^2) on the space's distance matrix.
Matrix exp_kernel(const MetricMeasureSpace &space, double c);

// theta_t(x, y) for the heat kernel on R^d, via
// theta^2 = 2 (8 pi t)^(-d/2) (1 - exp(-|x-y|^2 / 8t)).
double heat_theta(double r, double t, std::size_t d);

// Analytic admissibility constant 1 / (sqrt(2t) (8 pi t)^(d/4)).
double heat_lipschitz(double t, std::size_t d);

Matrix materialize_theta(const MetricMeasureSpace &space, const PseudoMetricSpec &pm);

// sigma_p(i) = (sum_j theta(i,j)^p w_j)^(1/p); theta is eval x support.
std::vector<double> deviation_values(const Matrix &theta, std::span<const double> weights,
                                     double p);

DeviationField deviation_field(const MetricMeasureSpace &space, double p,
                               const PseudoMetricSpec &pm = {});

// Largest |sigma(i) - sigma(j)| - theta(i,j); <= 1e-9 means the field is
// 1-Lipschitz for theta.
double lipschitz_excess(const DeviationField &field);

struct Admissibility {
  double empirical = 0.0;           // max theta / dist over distinct pairs
  std::optional<double> analytic;   // heat-Rd only
};

// Throws InvalidArgument if dist(i,j) = 0 while theta(i,j) > 0.
Admissibility admissibility_constant(const MetricMeasureSpace &space,
                                     const PseudoMetricSpec &pm, const Matrix &theta);

struct KdeCheck {
  std::vector<double> grid;
  std::vector<double> variance; // V_{2,t/2} on the grid
  std::vector<double> kde;      // u(t, x) on the grid
  std::vector<std::size_t> argmin_variance;
  std::vector<std::size_t> argmax_kde;
};

// Evaluates V_{2,t/2} (from the heat diffusion distance at scale t/2) and
// the Gaussian KDE u(t, .) on a uniform grid covering the sample, padded by
// 4 sqrt(2t). Extremizer sets collect grid indices within 1e-12 relative of
// the optimum.
KdeCheck kde_variance_check(std::span<const double> points, double t,
                            std::size_t grid_size = 1000);

nlohmann::json field_to_json(const DeviationField &f);
DeviationField field_from_json(const nlohmann::json &j);

} // namespace bmt
