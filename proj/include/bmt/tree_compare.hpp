#pragma once

#include "bmt/merge_tree.hpp"
#include "bmt/transport.hpp"

#include <optional>
#include <utility>
#include <vector>

namespace bmt {

using Relation = std::vector<std::pair<std::size_t, std::size_t>>;

struct TreeComparison {
  double structural = 0.0; // (sum delta_r^p h)^(1/p)
  double functional = 0.0; // (sum |kappa - kappa'|^p h)^(1/p)
  double fused = 0.0;      // max of the two, an upper estimate
  double lower_bound = 0.0; // max(eccentricity bound, height bound), certified
  double ecc_bound = 0.0;
  double height_bound = 0.0;
  double r = 0.0;       // half the distortion of the chosen relation
  double lambda = 0.0;  // sweep weight that produced the plan
  std::string relation; // name of the chosen relation
  TransportPlan plan;
};

// w_p on the line between the height pushforwards.
double height_lower_bound(const FunctionalTree &a, const FunctionalTree &b, double p);

// p-eccentricities (sum_b d(a,b)^p mu(b))^(1/p).
std::vector<double> eccentricities(const Matrix &d, std::span<const double> mu, double p);

// Half the w_p distance on the line between the eccentricity pushforwards;
// a lower bound for the Gromov-Wasserstein distance in the convention with
// the factor 1/2, hence for the Kantorovich-Sturm distance.
double eccentricity_lower_bound(const Matrix &da, std::span<const double> ma,
                                const Matrix &db, std::span<const double> mb, double p);

double certified_lower_bound(const FunctionalTree &a, const FunctionalTree &b, double p);

// sup over pairs in R of |d(x, x') - d'(y, y')|.
double distortion(const Relation &rel, const Matrix &da, const Matrix &db);

// delta_r(x, y) = r + min over (w, w') in R of d(x, w) + d'(w', y).
Matrix relation_coupling(const Relation &rel, const Matrix &da, const Matrix &db, double r);

// Candidate correspondences: nearest height in both directions, the monotone
// height coupling's support, and the identity when sizes match.
std::vector<std::pair<std::string, Relation>> candidate_relations(const FunctionalTree &a,
                                                                  const FunctionalTree &b,
                                                                  double p);

// Upper-style estimate of the functional Kantorovich-Sturm distance: for each
// candidate relation, delta_r with r = dis(R)/2, then exact transport of
// lambda delta_r^p + (1 - lambda) |dkappa|^p for lambda in {0, 1/4, 1/2,
// 3/4, 1}; the smallest max(structural, functional) wins. lower_bound is the
// certified bound.
TreeComparison fused_ks_estimate(const FunctionalTree &a, const FunctionalTree &b, double p);

struct GwResult {
  double value = 0.0;   // reported value, (1/2) J^(1/p)
  double cg_value = 0.0; // conditional-gradient local optimum
  std::optional<double> permutation_value; // exact over permutations, small cases
  bool substituted = false; // value taken from the enumeration
  std::size_t iterations = 0;
  Matrix plan;
};

// J(T) = sum |A_ik - B_jl|^p T_ij T_kl.
double gw_objective(const Matrix &da, const Matrix &db, const Matrix &t, double p);

// Minimum of (1/2) J^(1/p) over permutation couplings; both spaces uniform
// with the same n <= 8.
double gw_permutation_exact(const Matrix &da, const Matrix &db, double p);

// Conditional gradient from the product coupling and from the monotone
// eccentricity coupling (200 iterations each, exact line search, linear
// minimization by solve_ot). For uniform spaces of equal size <= 7 the
// permutation optimum is computed too; when the local value is not within
// 1e-6 of it, the smaller one is reported and `substituted` is set.
GwResult gw_estimate(const MetricMeasureSpace &a, const MetricMeasureSpace &b, double p);

} // namespace bmt
