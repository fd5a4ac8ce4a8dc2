#pragma once

#include "bmt/mmspace.hpp"

#include <span>
#include <string>
#include <vector>

namespace bmt {

struct TransportPlan {
  Matrix plan;          // rows x cols, nonnegative
  double cost = 0.0;    // sum of cost * plan
  std::string kind = "exact"; // "exact" or "entropic"
  std::size_t iterations = 0;
  double reg = 0.0;     // entropic regularization, 0 when exact

  std::size_t rows() const { return static_cast<std::size_t>(plan.rows()); }
  std::size_t cols() const { return static_cast<std::size_t>(plan.cols()); }
};

inline constexpr std::size_t kExactCellCap = 250000;
inline constexpr std::size_t kSinkhornMaxIter = 10000;
inline constexpr double kSinkhornTol = 1e-8;
inline constexpr double kMarginalTol = 1e-8;

// Exact transportation problem min <C, P> over couplings of a and b, solved
// by a primal network simplex on a strongly feasible spanning tree.
TransportPlan network_simplex(std::span<const double> a, std::span<const double> b,
                              const Matrix &cost);

// Log-domain Sinkhorn with epsilon scaling down to `reg`. Throws SolverError
// if the row marginal error is still >= tol after max_iter iterations at the
// final regularization.
TransportPlan sinkhorn(std::span<const double> a, std::span<const double> b,
                       const Matrix &cost, double reg, std::size_t max_iter = kSinkhornMaxIter,
                       double tol = kSinkhornTol);

// Exact when rows * cols <= kExactCellCap, otherwise Sinkhorn at
// 1e-3 * median(cost).
TransportPlan solve_ot(std::span<const double> a, std::span<const double> b,
                       const Matrix &cost);

struct Wasserstein {
  double value = 0.0; // (min sum d^p P)^(1/p)
  TransportPlan plan;
};

// w_p between two weighted sets given their cross-distance matrix.
Wasserstein wasserstein(std::span<const double> a, std::span<const double> b,
                        const Matrix &cross, double p);

// Exact w_p on the real line by merging the two sorted CDFs.
double wasserstein_1d(std::span<const double> xa, std::span<const double> wa,
                      std::span<const double> xb, std::span<const double> wb, double p);

// Exact w_p on the unit circle between two uniform samples of equal size:
// the optimal matching of the sorted angles is one of the n cyclic shifts.
double circle_wasserstein_uniform(std::span<const double> xa, std::span<const double> xb,
                                  double p);

// Largest absolute deviation of the plan's marginals from a and b.
double marginal_error(const Matrix &plan, std::span<const double> a,
                      std::span<const double> b);

} // namespace bmt
